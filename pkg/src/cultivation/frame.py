"""Bit-packed Pauli-frame propagation.

Frames are stored per qubit as uint64 words over shots (bit ``s & 63`` of
word ``s >> 6`` belongs to shot ``s``).  The same propagation loop serves
two purposes: Monte Carlo sampling (noise drawn at random) and fault-model
extraction (one lane per elementary fault component, injected
deterministically, no randomization).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuit import CULTIVATE, ESCAPE, NON_CLIFFORD, DetectorCircuit
from .pauli import gate_arity, local_table

_LINEAR: dict[str, np.ndarray] = {}


def _linear_map(name: str) -> np.ndarray:
    """Binary matrix M with new_bits = M @ old_bits (bits ordered x0, z0, x1, z1)."""
    m = _LINEAR.get(name)
    if m is None:
        k = gate_arity(name)
        table = local_table(name)
        m = np.zeros((2 * k, 2 * k), dtype=np.uint8)
        for i in range(2 * k):
            new = table[1 << i][0]
            for j in range(2 * k):
                m[j, i] = (new >> j) & 1
        _LINEAR[name] = m
    return m


_FZ_PLUS_FX = frozenset({"S", "S_DAG", "H_XY", "IZH_XY"})
_PAULIS = frozenset({"I", "X", "Y", "Z"})


def _words(shots: int) -> int:
    return (shots + 63) // 64


@dataclass
class ShotBatch:
    """Sampled detector/observable flips, packed along shots."""

    shots: int
    detectors: np.ndarray    # (num_detectors, words) uint64
    observables: np.ndarray  # (num_observables, words) uint64
    regions: list[str] = field(default_factory=list)

    def unpack_detectors(self) -> np.ndarray:
        return unpack_bits(self.detectors, self.shots)

    def unpack_observables(self) -> np.ndarray:
        return unpack_bits(self.observables, self.shots)

    def region_mask(self, region: str) -> np.ndarray:
        return np.array([r == region for r in self.regions], dtype=bool)

    def any_fired(self, region: str) -> np.ndarray:
        """Per-shot bool: some detector of ``region`` fired."""
        rows = self.detectors[self.region_mask(region)]
        if rows.shape[0] == 0:
            return np.zeros(self.shots, dtype=bool)
        acc = np.bitwise_or.reduce(rows, axis=0)
        return unpack_bits(acc[None, :], self.shots)[0].astype(bool)

    def select(self, keep: np.ndarray) -> "ShotBatch":
        """Sub-batch of the shots where ``keep`` is true."""
        d = pack_bits(self.unpack_detectors()[:, keep])
        o = pack_bits(self.unpack_observables()[:, keep])
        return ShotBatch(int(keep.sum()), d, o, list(self.regions))

    @staticmethod
    def concatenate(batches: list["ShotBatch"]) -> "ShotBatch":
        if not batches:
            raise ValueError("no batches")
        d = np.concatenate([b.unpack_detectors() for b in batches], axis=1)
        o = np.concatenate([b.unpack_observables() for b in batches], axis=1)
        return ShotBatch(d.shape[1], pack_bits(d), pack_bits(o), list(batches[0].regions))

    def __eq__(self, other) -> bool:
        return (isinstance(other, ShotBatch) and self.shots == other.shots
                and np.array_equal(self.detectors, other.detectors)
                and np.array_equal(self.observables, other.observables))


def unpack_bits(packed: np.ndarray, n: int) -> np.ndarray:
    """(rows, words) uint64 -> (rows, n) uint8."""
    packed = np.ascontiguousarray(packed, dtype=np.uint64)
    if packed.shape[0] == 0:
        return np.zeros((0, n), dtype=np.uint8)
    b = np.unpackbits(packed.view(np.uint8).reshape(packed.shape[0], -1), axis=1, bitorder="little")
    return b[:, :n]


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """(rows, n) 0/1 -> (rows, words) uint64."""
    bits = np.asarray(bits, dtype=np.uint8)
    rows, n = bits.shape
    w = _words(n)
    pad = np.zeros((rows, w * 64), dtype=np.uint8)
    pad[:, :n] = bits
    return np.packbits(pad, axis=1, bitorder="little").view(np.uint64).reshape(rows, w)


class _Bernoulli:
    """Positions of successes of N Bernoulli(p) trials via geometric gaps."""

    @staticmethod
    def positions(rng: np.random.Generator, n: int, p: float) -> np.ndarray:
        if p <= 0 or n == 0:
            return np.zeros(0, dtype=np.int64)
        if p >= 1:
            return np.arange(n, dtype=np.int64)
        out = []
        start = -1
        while True:
            m = int(n * p + 6 * np.sqrt(n * p) + 16)
            gaps = rng.geometric(p, size=m)
            pos = start + np.cumsum(gaps)
            if pos[-1] >= n:
                out.append(pos[pos < n])
                break
            out.append(pos)
            start = int(pos[-1])
        return np.concatenate(out).astype(np.int64)


def _xor_bits(arr: np.ndarray, q: np.ndarray, s: np.ndarray) -> None:
    """arr[q, s] ^= 1 for packed shot indices s (duplicates cancel correctly)."""
    if len(q) == 0:
        return
    np.bitwise_xor.at(arr, (q, s >> 6), np.left_shift(np.uint64(1), (s & 63).astype(np.uint64)))


class FrameSimulator:
    """Propagates packed Pauli frames through a Clifford circuit."""

    def __init__(self, c: DetectorCircuit, lanes: int, rng: np.random.Generator | None = None,
                 randomize: bool = True):
        if not c.is_clifford:
            raise ValueError("frame simulation needs a Clifford circuit (substitute T first)")
        self.c = c
        self.lanes = lanes
        self.w = _words(lanes)
        n = max(c.num_qubits, 1)
        self.fx = np.zeros((n, self.w), dtype=np.uint64)
        self.fz = np.zeros((n, self.w), dtype=np.uint64)
        self.flip = np.zeros((n, self.w), dtype=np.uint64)
        self.rec = np.zeros((c.num_measurements, self.w), dtype=np.uint64)
        self.m = 0
        self.rng = rng
        self.randomize = randomize and rng is not None
        last = self.w * 64 - lanes
        self.tail = np.uint64((1 << (64 - last)) - 1) if last else np.uint64(0xFFFFFFFFFFFFFFFF)

    def _random_words(self, k: int) -> np.ndarray:
        r = self.rng.integers(0, np.iinfo(np.uint64).max, size=(k, self.w), dtype=np.uint64, endpoint=True)
        r[:, -1] &= self.tail
        return r

    # -- unitary part ---------------------------------------------------
    def gate(self, name: str, targets) -> None:
        fx, fz = self.fx, self.fz
        if name in _PAULIS:
            return
        t = np.asarray(targets, dtype=np.int64)
        if name == "H":
            tmp = fx[t].copy()
            fx[t] = fz[t]
            fz[t] = tmp
            return
        if name in _FZ_PLUS_FX:
            fz[t] ^= fx[t]
            return
        k = gate_arity(name)
        t = t.reshape(-1, k)
        if len(np.unique(t)) != t.size:
            for row in t:
                self.gate(name, row)
            return
        if name == "CX":
            c_, tg = t[:, 0], t[:, 1]
            fx[tg] ^= fx[c_]
            fz[c_] ^= fz[tg]
            return
        if name == "CZ":
            a, b = t[:, 0], t[:, 1]
            fz[a] ^= fx[b]
            fz[b] ^= fx[a]
            return
        M = _linear_map(name)
        old = []
        for j in range(k):
            old.append(fx[t[:, j]].copy())
            old.append(fz[t[:, j]].copy())
        for j in range(2 * k):
            acc = np.zeros_like(old[0])
            for i in range(2 * k):
                if M[j, i]:
                    acc ^= old[i]
            (fx if j % 2 == 0 else fz)[t[:, j // 2]] = acc

    # -- non-unitary part -----------------------------------------------
    def measure(self, q: int, basis: str) -> None:
        src = self.fx if basis == "Z" else self.fz
        self.rec[self.m] = src[q] ^ self.flip[q]
        self.flip[q] = 0
        self.m += 1
        if self.randomize:
            (self.fz if basis == "Z" else self.fx)[q] ^= self._random_words(1)[0]

    def measure_product(self, prod) -> None:
        acc = np.zeros(self.w, dtype=np.uint64)
        for b, q in prod:
            if b == "X":
                acc ^= self.fz[q]
            elif b == "Z":
                acc ^= self.fx[q]
            else:
                acc ^= self.fx[q] ^ self.fz[q]
        self.rec[self.m] = acc
        self.m += 1
        if self.randomize:
            r = self._random_words(1)[0]
            for b, q in prod:
                if b in "XY":
                    self.fx[q] ^= r
                if b in "ZY":
                    self.fz[q] ^= r

    def reset(self, q: int, basis: str) -> None:
        self.flip[q] = 0
        if basis == "Z":
            self.fx[q] = 0
            if self.randomize:
                self.fz[q] = self._random_words(1)[0]
            else:
                self.fz[q] = 0
        else:
            self.fz[q] = 0
            if self.randomize:
                self.fx[q] = self._random_words(1)[0]
            else:
                self.fx[q] = 0

    # -- noise --------------------------------------------------------
    def sample_noise(self, ins) -> None:
        rng, S = self.rng, self.lanes
        p = ins.args[0]
        name = ins.name
        if name == "DEPOLARIZE2":
            pairs = np.asarray(ins.targets, dtype=np.int64).reshape(-1, 2)
            pos = _Bernoulli.positions(rng, len(pairs) * S, p)
            if len(pos) == 0:
                return
            i, s = pos // S, pos % S
            v = rng.integers(1, 16, size=len(pos))
            for col, vv in ((0, v & 3), (1, v >> 2)):
                q = pairs[i, col]
                sel = (vv & 1).astype(bool)
                _xor_bits(self.fx, q[sel], s[sel])
                sel = (vv >> 1).astype(bool)
                _xor_bits(self.fz, q[sel], s[sel])
            return
        tg = np.asarray(ins.targets, dtype=np.int64)
        pos = _Bernoulli.positions(rng, len(tg) * S, p)
        if len(pos) == 0:
            return
        q, s = tg[pos // S], pos % S
        if name == "X_ERROR":
            _xor_bits(self.fx, q, s)
        elif name == "Z_ERROR":
            _xor_bits(self.fz, q, s)
        elif name == "FLIP_RESULT":
            _xor_bits(self.flip, q, s)
        else:
            v = rng.integers(1, 4, size=len(pos))
            sel = (v & 1).astype(bool)
            _xor_bits(self.fx, q[sel], s[sel])
            sel = (v >> 1).astype(bool)
            _xor_bits(self.fz, q[sel], s[sel])

    # -- driver -------------------------------------------------------
    def run(self, inject=None) -> None:
        """Run the circuit.  ``inject(pos, ins, sim)`` handles noise instructions
        when given; otherwise noise is sampled from the rng (if any)."""
        for pos, ins in enumerate(self.c.instructions):
            name = ins.name
            if name in ("TICK", "DETECTOR", "OBSERVABLE", "QUBIT_COORDS"):
                continue
            if name in NON_CLIFFORD:
                raise ValueError(name)
            if name in ("DEPOLARIZE1", "DEPOLARIZE2", "X_ERROR", "Z_ERROR", "FLIP_RESULT"):
                if inject is not None:
                    inject(pos, ins, self)
                elif self.rng is not None:
                    self.sample_noise(ins)
                continue
            if name in ("RESET_Z", "RESET_ONE"):
                for q in ins.targets:
                    self.reset(q, "Z")
            elif name == "RESET_X":
                for q in ins.targets:
                    self.reset(q, "X")
            elif name == "MEASURE_Z":
                for q in ins.targets:
                    self.measure(q, "Z")
            elif name == "MEASURE_X":
                for q in ins.targets:
                    self.measure(q, "X")
            elif name == "MPP":
                for prod in ins.products:
                    self.measure_product(prod)
            else:
                self.gate(name, ins.targets)

    def detector_flips(self) -> tuple[np.ndarray, np.ndarray]:
        c = self.c
        D = np.zeros((c.num_detectors, self.w), dtype=np.uint64)
        for i, d in enumerate(c.detectors):
            for k in d.measurements:
                D[i] ^= self.rec[k]
        O = np.zeros((c.num_observables, self.w), dtype=np.uint64)
        for i, o in enumerate(c.observables):
            for k in o:
                O[i] ^= self.rec[k]
        return D, O


def frame_sample(c: DetectorCircuit, shots: int, seed: int = 0, batch: int = 1 << 16) -> ShotBatch:
    """Sample ``shots`` noisy shots; bits are flips relative to the noiseless reference.

    Shots are generated in batches with independent child seeds, so results
    depend only on (circuit, shots, seed, batch).
    """
    regions = [d.region for d in c.detectors]
    nb = max(1, (shots + batch - 1) // batch)
    seeds = np.random.SeedSequence(seed).spawn(nb)
    dets, obs = [], []
    done = 0
    for b in range(nb):
        k = min(batch, shots - done)
        sim = FrameSimulator(c, k, np.random.default_rng(seeds[b]))
        sim.run()
        D, O = sim.detector_flips()
        dets.append(unpack_bits(D, k))
        obs.append(unpack_bits(O, k))
        done += k
    if nb == 1:
        return ShotBatch(shots, pack_bits(dets[0]), pack_bits(obs[0]), regions)
    return ShotBatch(shots, pack_bits(np.concatenate(dets, axis=1)), pack_bits(np.concatenate(obs, axis=1)), regions)


__all__ = ["FrameSimulator", "ShotBatch", "frame_sample", "pack_bits", "unpack_bits", "CULTIVATE", "ESCAPE"]
