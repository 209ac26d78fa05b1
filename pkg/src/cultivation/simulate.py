"""Tableau-level circuit simulation.

``SymbolicTableau`` runs a Clifford circuit with every random measurement
outcome kept as a free binary variable.  Each row sign carries, besides its
numeric phase, a bitmask of the variables it depends on, so a detector is
deterministic exactly when the XOR of its measurement masks vanishes.  The
same engine doubles as a plain Monte Carlo tableau simulator when an rng is
supplied and noise is sampled per shot; that mode is the oracle for the
frame sampler.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import (
    GATES_2Q,
    NON_CLIFFORD,
    DetectorCircuit,
)
from .pauli import PauliString, gate_arity, local_table

_TABLES: dict[str, tuple[np.ndarray, np.ndarray]] = {}


def _table(name: str) -> tuple[np.ndarray, np.ndarray]:
    t = _TABLES.get(name)
    if t is None:
        lt = local_table(name)
        t = (np.array([e[0] for e in lt], dtype=np.int64), np.array([e[1] for e in lt], dtype=np.int64))
        _TABLES[name] = t
    return t


class NondeterministicDetector(RuntimeError):
    """A detector (or observable) whose noiseless value depends on random outcomes."""

    def __init__(self, index: int, observable: bool = False):
        self.index = index
        self.observable = observable
        kind = "observable" if observable else "detector"
        super().__init__(f"{kind} {index} is not deterministic")


class NonCliffordCircuit(ValueError):
    pass


def _pauli_arrays(p: PauliString) -> tuple[np.ndarray, np.ndarray]:
    n = p.n
    x = np.array([(p.x >> q) & 1 for q in range(n)], dtype=np.uint8)
    z = np.array([(p.z >> q) & 1 for q in range(n)], dtype=np.uint8)
    return x, z


class SymbolicTableau:
    """Unpacked tableau (rows 0..n-1 destabilizers) with symbolic sign masks."""

    def __init__(self, n: int, rng: np.random.Generator | None = None):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.int64)
        self.x[np.arange(n), np.arange(n)] = 1
        self.z[n + np.arange(n), np.arange(n)] = 1
        self.masks = [0] * (2 * n)
        self.rng = rng
        self.num_vars = 0

    # -- gates --------------------------------------------------------
    def apply_gate(self, name: str, targets) -> None:
        k = gate_arity(name)
        t = np.asarray(targets, dtype=np.int64).reshape(-1, k)
        if len(np.unique(t)) != t.size:
            for row in t:
                self.apply_gate(name, row)
            return
        new, dr = _table(name)
        pat = np.zeros((2 * self.n, t.shape[0]), dtype=np.int64)
        for j in range(k):
            pat |= self.x[:, t[:, j]].astype(np.int64) << (2 * j)
            pat |= self.z[:, t[:, j]].astype(np.int64) << (2 * j + 1)
        out = new[pat]
        self.r = (self.r + dr[pat].sum(axis=1)) % 4
        for j in range(k):
            self.x[:, t[:, j]] = (out >> (2 * j)) & 1
            self.z[:, t[:, j]] = (out >> (2 * j + 1)) & 1

    def _anti(self, px: np.ndarray, pz: np.ndarray) -> np.ndarray:
        s = self.x.astype(np.int64) @ pz.astype(np.int64) + self.z.astype(np.int64) @ px.astype(np.int64)
        return (s & 1).astype(bool)

    def apply_pauli(self, px: np.ndarray, pz: np.ndarray, const: int = 1, mask: int = 0) -> None:
        """Conjugate by the Pauli (px, pz) raised to ``const ^ mask-variables``."""
        anti = np.flatnonzero(self._anti(px, pz))
        if const:
            self.r[anti] = (self.r[anti] + 2) % 4
        if mask:
            for i in anti.tolist():
                self.masks[i] ^= mask

    # -- measurement --------------------------------------------------
    def peek(self, px: np.ndarray, pz: np.ndarray, pr: int) -> tuple[int, int] | None:
        """(bit, mask) of a Hermitian Pauli in the group, or None if random."""
        n = self.n
        anti = self._anti(px, pz)
        if anti[n:].any():
            return None
        sel = n + np.flatnonzero(anti[:n])
        return self._product_sign(sel, px, pz, pr)

    def _product_sign(self, sel: np.ndarray, px, pz, pr) -> tuple[int, int]:
        if len(sel) == 0:
            acc_r = 0
        else:
            xs, zs = self.x[sel], self.z[sel]
            prefix = np.bitwise_xor.accumulate(zs, axis=0)
            prev = np.zeros_like(prefix)
            prev[1:] = prefix[:-1]
            acc_r = int(self.r[sel].sum() + 2 * (prev & xs).sum())
        mask = 0
        for i in sel.tolist():
            mask ^= self.masks[i]
        diff = (pr - acc_r) % 4
        if diff not in (0, 2):
            raise ValueError("measured operator is not Hermitian")
        return (1 if diff == 2 else 0), mask

    def measure(self, px: np.ndarray, pz: np.ndarray, pr: int = None, forced: int | None = None) -> tuple[int, int, bool]:
        """Measure a Hermitian Pauli; returns (bit, mask, was_random).

        ``pr`` is the XZ-form phase exponent (defaults to the +1 letter form).
        In symbolic mode a random outcome becomes a fresh variable.
        """
        if pr is None:
            pr = int((px & pz).sum()) % 4
        n = self.n
        anti = self._anti(px, pz)
        stab_anti = np.flatnonzero(anti[n:])
        if len(stab_anti) == 0:
            sel = n + np.flatnonzero(anti[:n])
            b, m = self._product_sign(sel, px, pz, pr)
            return b, m, False
        k = n + int(stab_anti[0])
        others = np.flatnonzero(anti)
        others = others[others != k]
        if len(others):
            xk, zk = self.x[k], self.z[k]
            ph = 2 * (self.z[others] & xk).sum(axis=1)
            self.r[others] = (self.r[others] + self.r[k] + ph) % 4
            self.x[others] ^= xk
            self.z[others] ^= zk
            mk = self.masks[k]
            if mk:
                for i in others.tolist():
                    self.masks[i] ^= mk
        dk = k - n
        self.x[dk], self.z[dk], self.r[dk], self.masks[dk] = self.x[k], self.z[k], self.r[k], self.masks[k]
        self.x[k], self.z[k] = px, pz
        if forced is not None:
            bit, mask = int(forced), 0
        elif self.rng is not None:
            bit, mask = int(self.rng.integers(2)), 0
        else:
            bit, mask = 0, 1 << self.num_vars
            self.num_vars += 1
        self.r[k] = (pr + 2 * bit) % 4
        self.masks[k] = mask
        return bit, mask, True

    def reset(self, q: int, basis: str) -> None:
        px = np.zeros(self.n, dtype=np.uint8)
        pz = np.zeros(self.n, dtype=np.uint8)
        if basis == "X":
            px[q] = 1
        else:
            pz[q] = 1
        b, m, _ = self.measure(px, pz, 0)
        # conditionally undo a -1 outcome with the anticommuting Pauli
        self.apply_pauli(pz, px, b, m)

    # -- queries ------------------------------------------------------
    def expectation(self, p: PauliString) -> int | None:
        """+1/-1 if ``p`` is deterministic (no dependence on random outcomes)."""
        px, pz = _pauli_arrays(p)
        res = self.peek(px, pz, p.r)
        if res is None or res[1]:
            return None
        return -1 if res[0] else 1

    def stabilizers(self) -> list[PauliString]:
        out = []
        for i in range(self.n, 2 * self.n):
            x = int(sum(int(v) << q for q, v in enumerate(self.x[i])))
            z = int(sum(int(v) << q for q, v in enumerate(self.z[i])))
            out.append(PauliString(self.n, x, z, int(self.r[i])))
        return out


@dataclass
class TableauRun:
    """Result of one tableau pass over a circuit."""

    bits: list[int]    # measurement constants (random outcomes resolved to 0 in symbolic mode)
    masks: list[int]   # symbolic dependence on random outcomes
    tableau: SymbolicTableau


def _mpp_arrays(n: int, prod) -> tuple[np.ndarray, np.ndarray, int]:
    px = np.zeros(n, dtype=np.uint8)
    pz = np.zeros(n, dtype=np.uint8)
    for b, q in prod:
        if b in "XY":
            px[q] ^= 1
        if b in "ZY":
            pz[q] ^= 1
    # letter-form +1 product: phase i^{#Y} in XZ form
    p = PauliString.from_sparse(n, [(q, b) for b, q in prod]) if len({q for _, q in prod}) == len(prod) else None
    if p is None:
        raise ValueError("MPP product repeats a qubit")
    return px, pz, p.r


def run_tableau(c: DetectorCircuit, rng: np.random.Generator | None = None,
                noisy: bool = False, stop: int | None = None) -> TableauRun:
    """Simulate ``c`` (Clifford only).

    Without ``rng`` random outcomes are symbolic.  With ``noisy`` the noise
    channels are sampled from ``rng``; otherwise they are ignored.
    ``stop`` ends the simulation before the given instruction position.
    """
    if not c.is_clifford:
        raise NonCliffordCircuit("substitute T gates before simulating")
    n = max(c.num_qubits, 1)
    t = SymbolicTableau(n, rng=rng)
    bits: list[int] = []
    masks: list[int] = []
    pending_flip = np.zeros(n, dtype=np.uint8)
    zero = np.zeros(n, dtype=np.uint8)
    for pos, ins in enumerate(c.instructions):
        if stop is not None and pos >= stop:
            break
        name = ins.name
        if name in ("TICK", "DETECTOR", "OBSERVABLE", "QUBIT_COORDS"):
            continue
        if name in NON_CLIFFORD:
            raise NonCliffordCircuit(name)
        if name in ("X_ERROR", "Z_ERROR", "DEPOLARIZE1", "DEPOLARIZE2", "FLIP_RESULT"):
            if noisy:
                _sample_noise(t, ins, rng, pending_flip)
            continue
        if name == "RESET_Z" or name == "RESET_ONE":
            for q in ins.targets:
                t.reset(q, "Z")
                pending_flip[q] = 0
                if name == "RESET_ONE":
                    px = zero.copy()
                    px[q] = 1
                    t.apply_pauli(px, zero)
            continue
        if name == "RESET_X":
            for q in ins.targets:
                t.reset(q, "X")
                pending_flip[q] = 0
            continue
        if name == "MEASURE_Z" or name == "MEASURE_X":
            for q in ins.targets:
                px = zero.copy()
                pz = zero.copy()
                (pz if name == "MEASURE_Z" else px)[q] = 1
                b, m, _ = t.measure(px, pz, 0)
                bits.append(b ^ int(pending_flip[q]))
                pending_flip[q] = 0
                masks.append(m)
            continue
        if name == "MPP":
            for prod in ins.products:
                px, pz, pr = _mpp_arrays(n, prod)
                b, m, _ = t.measure(px, pz, pr)
                bits.append(b)
                masks.append(m)
            continue
        t.apply_gate(name, ins.targets)
    return TableauRun(bits, masks, t)


def _sample_noise(t: SymbolicTableau, ins, rng, pending_flip) -> None:
    n = t.n
    p = ins.args[0]
    name = ins.name
    if name == "FLIP_RESULT":
        for q in ins.targets:
            if rng.random() < p:
                pending_flip[q] ^= 1
        return
    zero = np.zeros(n, dtype=np.uint8)
    if name == "DEPOLARIZE2":
        pairs = list(zip(ins.targets[::2], ins.targets[1::2]))
        for a, b in pairs:
            if rng.random() < p:
                k = int(rng.integers(1, 16))
                px, pz = zero.copy(), zero.copy()
                for q, v in ((a, k & 3), (b, k >> 2)):
                    px[q] = v & 1
                    pz[q] = v >> 1
                t.apply_pauli(px, pz)
        return
    for q in ins.targets:
        if rng.random() < p:
            px, pz = zero.copy(), zero.copy()
            if name == "X_ERROR":
                px[q] = 1
            elif name == "Z_ERROR":
                pz[q] = 1
            else:
                k = int(rng.integers(1, 4))
                px[q] = k & 1
                pz[q] = k >> 1
            t.apply_pauli(px, pz)


def _combine(c: DetectorCircuit, bits: list[int], masks: list[int]):
    dets = np.zeros(c.num_detectors, dtype=np.uint8)
    det_masks = []
    for i, d in enumerate(c.detectors):
        b, m = 0, 0
        for k in d.measurements:
            b ^= bits[k]
            m ^= masks[k]
        dets[i] = b
        det_masks.append(m)
    obs = np.zeros(c.num_observables, dtype=np.uint8)
    obs_masks = []
    for i, o in enumerate(c.observables):
        b, m = 0, 0
        for k in o:
            b ^= bits[k]
            m ^= masks[k]
        obs[i] = b
        obs_masks.append(m)
    return dets, det_masks, obs, obs_masks


def reference_sample(c: DetectorCircuit) -> tuple[np.ndarray, np.ndarray]:
    """Noiseless detector and observable values; raises on nondeterminism."""
    run = run_tableau(c)
    dets, dm, obs, om = _combine(c, run.bits, run.masks)
    for i, m in enumerate(dm):
        if m:
            raise NondeterministicDetector(i)
    for i, m in enumerate(om):
        if m:
            raise NondeterministicDetector(i, observable=True)
    return dets, obs


def reference_measurements(c: DetectorCircuit) -> np.ndarray:
    """Measurement bits of one noiseless trajectory (random outcomes set to 0)."""
    return np.array(run_tableau(c).bits, dtype=np.uint8)


def tableau_state(c: DetectorCircuit, stop: int | None = None) -> SymbolicTableau:
    """Noiseless symbolic state after the whole circuit (or before ``stop``)."""
    return run_tableau(c, stop=stop).tableau


def noisy_tableau_sample(c: DetectorCircuit, shots: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Per-shot tableau Monte Carlo; returns detector/observable flips vs reference.

    Slow. Exists as an independent oracle for the frame sampler.
    """
    ref_d, ref_o = reference_sample(c)
    rng = np.random.default_rng(seed)
    D = np.zeros((shots, c.num_detectors), dtype=np.uint8)
    O = np.zeros((shots, c.num_observables), dtype=np.uint8)
    for s in range(shots):
        run = run_tableau(c, rng=rng, noisy=True)
        d, _, o, _ = _combine(c, run.bits, run.masks)
        D[s] = d ^ ref_d
        O[s] = o ^ ref_o
    return D, O


__all__ = [
    "SymbolicTableau", "NondeterministicDetector", "NonCliffordCircuit", "run_tableau",
    "reference_sample", "reference_measurements", "tableau_state", "noisy_tableau_sample",
    "GATES_2Q",
]
