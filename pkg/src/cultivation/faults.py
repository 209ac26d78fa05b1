"""Independent-fault models and exhaustive search for low-weight undetected logical errors."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numba
import numpy as np

from .circuit import CULTIVATE, DetectorCircuit, clifford_substitute
from .frame import FrameSimulator, unpack_bits
from .gf2 import bits as _bits
from .pauli import PauliString
from .simulate import run_tableau

_NOISE_NAMES = frozenset({"X_ERROR", "Z_ERROR", "FLIP_RESULT", "DEPOLARIZE1", "DEPOLARIZE2"})
_GATE_NAMES = frozenset({"H", "S", "S_DAG", "X", "Y", "Z", "H_XY", "IZH_XY", "CX", "CZ", "SWAP", "CXSWAP"})

# frame codes: bit 0 = X part, bit 1 = Z part
_PAULI_CODE = {"X": 1, "Z": 2, "Y": 3}
_CODE_NAME = {1: "X", 2: "Z", 3: "Y"}


@dataclass
class FaultLocation:
    id: int
    probability: float
    detectors: tuple[int, ...]
    obs_flip: int
    provenance: list[tuple[int, str]] = field(default_factory=list)  # (instruction, component)


@dataclass
class FaultModel:
    faults: list[FaultLocation]
    num_detectors: int
    detector_ids: tuple[int, ...]        # circuit detector index of each model detector
    regions: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.faults)

    def to_json(self) -> str:
        return json.dumps({
            "num_detectors": self.num_detectors,
            "regions": list(self.regions),
            "faults": [{"id": f.id, "p": f.probability, "detectors": list(f.detectors),
                        "obs": f.obs_flip, "provenance": f.provenance[:4]} for f in self.faults],
        })


def combine_probability(a: float, b: float) -> float:
    """Probability that exactly one of two independent events happens."""
    return a * (1 - b) + b * (1 - a)


@dataclass
class _Component:
    pos: int
    probability: float
    frame: tuple[tuple[int, int], ...]   # (qubit, code) pairs; code 4 = measurement flip
    label: str


def _components(c: DetectorCircuit) -> list[_Component]:
    out = []
    for pos, ins in enumerate(c.instructions):
        name = ins.name
        if name not in ("X_ERROR", "Z_ERROR", "FLIP_RESULT", "DEPOLARIZE1", "DEPOLARIZE2"):
            continue
        p = ins.args[0]
        if p <= 0:
            continue
        if name == "DEPOLARIZE2":
            ts = ins.targets
            for a, b in zip(ts[::2], ts[1::2]):
                for v in range(1, 16):
                    pa, pb = v & 3, v >> 2
                    fr = tuple((q, k) for q, k in ((a, pa), (b, pb)) if k)
                    lab = f"{_CODE_NAME.get(pa, 'I')}{a}*{_CODE_NAME.get(pb, 'I')}{b}"
                    out.append(_Component(pos, p / 15, fr, lab))
            continue
        for q in ins.targets:
            if name == "DEPOLARIZE1":
                for v in (1, 3, 2):
                    out.append(_Component(pos, p / 3, ((q, v),), f"{_CODE_NAME[v]}{q}"))
            elif name == "FLIP_RESULT":
                out.append(_Component(pos, p, ((q, 4),), f"M{q}"))
            else:
                v = 1 if name == "X_ERROR" else 2
                out.append(_Component(pos, p, ((q, v),), f"{_CODE_NAME[v]}{q}"))
    return out


def propagate_components(c: DetectorCircuit, comps: Sequence[_Component], chunk: int = 1 << 15):
    """Detector and observable flips of each unit fault, via one frame lane per fault.

    Returns (D, O) as boolean arrays of shape (num_detectors, len(comps)) and
    (num_observables, len(comps)).
    """
    s = clifford_substitute(c)
    n = len(comps)
    D = np.zeros((s.num_detectors, n), dtype=bool)
    O = np.zeros((s.num_observables, n), dtype=bool)
    for lo in range(0, n, chunk):
        part = comps[lo:lo + chunk]
        by_pos: dict[int, list[tuple[int, _Component]]] = {}
        for lane, comp in enumerate(part):
            by_pos.setdefault(comp.pos, []).append((lane, comp))

        def inject(pos, ins, sim, by_pos=by_pos):
            for lane, comp in by_pos.get(pos, ()):
                w, bit = lane // 64, np.uint64(1 << (lane % 64))
                for q, code in comp.frame:
                    if code == 4:
                        sim.flip[q, w] ^= bit
                    else:
                        if code & 1:
                            sim.fx[q, w] ^= bit
                        if code & 2:
                            sim.fz[q, w] ^= bit

        sim = FrameSimulator(s, len(part))
        sim.run(inject=inject)
        d, o = sim.detector_flips()
        D[:, lo:lo + len(part)] = unpack_bits(d, len(part)).astype(bool)
        O[:, lo:lo + len(part)] = unpack_bits(o, len(part)).astype(bool)
    return D, O


def extract_fault_model(c: DetectorCircuit, regions: Iterable[str] | None = (CULTIVATE,),
                        observable: int = 0) -> FaultModel:
    """Propagate every noise component and merge faults with equal effect.

    Signatures are restricted to detectors in ``regions`` (all detectors when
    None).  Faults with an empty signature and no observable flip are dropped:
    they never influence detection or the logical outcome.
    """
    comps = _components(c)
    regions = tuple(regions) if regions is not None else ("CULTIVATE", "ESCAPE")
    det_ids = tuple(c.detector_indices(regions)) if c.num_detectors else ()
    if not comps:
        return FaultModel([], len(det_ids), det_ids, regions)
    D, O = propagate_components(c, comps)
    D = D[list(det_ids)] if det_ids else np.zeros((0, len(comps)), dtype=bool)
    obs = O[observable] if O.shape[0] else np.zeros(len(comps), dtype=bool)
    merged: dict[tuple, FaultLocation] = {}
    cols = [np.nonzero(D[:, j])[0] for j in range(len(comps))] if D.shape[0] else [()] * len(comps)
    for j, comp in enumerate(comps):
        dets = tuple(int(x) for x in cols[j])
        o = int(obs[j])
        if not dets and not o:
            continue
        key = (dets, o)
        f = merged.get(key)
        if f is None:
            merged[key] = FaultLocation(len(merged), comp.probability, dets, o, [(comp.pos, comp.label)])
        else:
            f.probability = combine_probability(f.probability, comp.probability)
            f.provenance.append((comp.pos, comp.label))
    return FaultModel(list(merged.values()), len(det_ids), det_ids, regions)


# ---------------------------------------------------------------------------
# enumeration

@dataclass
class EnumerationResult:
    sets: list[tuple[int, ...]]
    max_weight: int
    complete: bool
    nodes: int

    def __iter__(self):
        return iter(self.sets)

    def __len__(self) -> int:
        return len(self.sets)


def _arrays(m: FaultModel, seed: int = 12345):
    k = len(m.faults)
    nd = max(m.num_detectors, 1)
    sig_ptr = np.zeros(k + 1, dtype=np.int64)
    for i, f in enumerate(m.faults):
        sig_ptr[i + 1] = sig_ptr[i] + len(f.detectors)
    sig_idx = np.array([d for f in m.faults for d in f.detectors], dtype=np.int64)
    obs = np.array([f.obs_flip for f in m.faults], dtype=np.int64)
    mindet = np.array([f.detectors[0] if f.detectors else -1 for f in m.faults], dtype=np.int64)
    lists: list[list[int]] = [[] for _ in range(nd)]
    for i, f in enumerate(m.faults):
        for d in f.detectors:
            lists[d].append(i)
    det_ptr = np.zeros(nd + 1, dtype=np.int64)
    for d in range(nd):
        det_ptr[d + 1] = det_ptr[d] + len(lists[d])
    det_faults = np.array([i for l in lists for i in l], dtype=np.int64)
    keys = np.random.default_rng(seed).integers(1, 2 ** 63, size=nd, dtype=np.int64).astype(np.uint64)
    h = np.zeros(k, dtype=np.uint64)
    for i, f in enumerate(m.faults):
        for d in f.detectors:
            h[i] ^= keys[d]
    order = np.argsort(h, kind="stable").astype(np.int64)
    return sig_ptr, sig_idx, obs, mindet, det_ptr, det_faults, keys, h[order], order


@numba.njit(cache=True)
def _toggle(act, n, d):
    for i in range(n):
        if act[i] == d:
            act[i] = act[n - 1]
            return n - 1
    act[n] = d
    return n + 1


@numba.njit(cache=True)
def _min(act, n):
    best = act[0]
    for i in range(1, n):
        if act[i] < best:
            best = act[i]
    return best


@numba.njit(cache=True)
def _dfs(W, sig_ptr, sig_idx, obs, mindet, det_ptr, det_faults, keys, shash, sorder,
         max_nodes, out_cap):
    K = len(obs)
    maxsig = 1
    for i in range(K):
        s = sig_ptr[i + 1] - sig_ptr[i]
        if s > maxsig:
            maxsig = s
    cap_act = W * maxsig + 1
    act = np.zeros((W + 1, cap_act), dtype=np.int64)
    nact = np.zeros(W + 1, dtype=np.int64)
    hsh = np.zeros(W + 1, dtype=np.uint64)
    par = np.zeros(W + 1, dtype=np.int64)
    chosen = np.zeros(W, dtype=np.int64)
    it = np.zeros(W, dtype=np.int64)
    dcur = np.zeros(W, dtype=np.int64)
    out = np.full((out_cap, W), -1, dtype=np.int64)
    nout = 0
    nodes = 0
    complete = True
    for f1 in range(K):
        if nodes > max_nodes:
            complete = False
            break
        dstar = mindet[f1]
        # depth-1 state
        n = 0
        for j in range(sig_ptr[f1], sig_ptr[f1 + 1]):
            act[1, n] = sig_idx[j]
            n += 1
        nact[1] = n
        h = np.uint64(0)
        for j in range(sig_ptr[f1], sig_ptr[f1 + 1]):
            h ^= keys[sig_idx[j]]
        hsh[1] = h
        par[1] = obs[f1]
        chosen[0] = f1
        if n == 0:
            if obs[f1] == 1 and nout < out_cap:
                out[nout, 0] = f1
                nout += 1
            continue
        if W == 1:
            continue
        depth = 1  # number of chosen faults
        it[1] = -1
        while depth >= 1:
            nodes += 1
            if nodes > max_nodes:
                complete = False
                break
            if depth == W - 1 or W == 2 and depth == 1:
                # last slot: exact lookup of the remaining syndrome
                target = hsh[depth]
                lo, hi = 0, K
                while lo < hi:
                    mid = (lo + hi) // 2
                    if shash[mid] < target:
                        lo = mid + 1
                    else:
                        hi = mid
                while lo < K and shash[lo] == target:
                    g = sorder[lo]
                    lo += 1
                    if obs[g] ^ par[depth] != 1:
                        continue
                    if mindet[g] < dstar or (mindet[g] == dstar and g <= f1):
                        continue
                    dup = False
                    for t in range(depth):
                        if chosen[t] == g:
                            dup = True
                    if dup or sig_ptr[g + 1] - sig_ptr[g] != nact[depth]:
                        continue
                    ok = True
                    for j in range(sig_ptr[g], sig_ptr[g + 1]):
                        found = False
                        for t in range(nact[depth]):
                            if act[depth, t] == sig_idx[j]:
                                found = True
                                break
                        if not found:
                            ok = False
                            break
                    if ok and nout < out_cap:
                        for t in range(depth):
                            out[nout, t] = chosen[t]
                        out[nout, depth] = g
                        nout += 1
                depth -= 1
                continue
            # iterate faults touching the smallest open defect
            if it[depth] == -1:
                dcur[depth] = _min(act[depth], nact[depth])
                it[depth] = det_ptr[dcur[depth]]
            d = dcur[depth]
            advanced = False
            while it[depth] < det_ptr[d + 1]:
                g = det_faults[it[depth]]
                it[depth] += 1
                if mindet[g] < dstar or (mindet[g] == dstar and g <= f1):
                    continue
                dup = False
                for t in range(depth):
                    if chosen[t] == g:
                        dup = True
                if dup:
                    continue
                # child state
                n = nact[depth]
                for t in range(n):
                    act[depth + 1, t] = act[depth, t]
                for j in range(sig_ptr[g], sig_ptr[g + 1]):
                    n = _toggle(act[depth + 1], n, sig_idx[j])
                p = par[depth] ^ obs[g]
                if n == 0:
                    if p == 1 and nout < out_cap:
                        for t in range(depth):
                            out[nout, t] = chosen[t]
                        out[nout, depth] = g
                        nout += 1
                    continue
                if n > (W - depth - 1) * maxsig:
                    continue
                nact[depth + 1] = n
                hh = hsh[depth]
                for j in range(sig_ptr[g], sig_ptr[g + 1]):
                    hh ^= keys[sig_idx[j]]
                hsh[depth + 1] = hh
                par[depth + 1] = p
                chosen[depth] = g
                it[depth + 1] = -1
                depth += 1
                advanced = True
                break
            if not advanced:
                depth -= 1
        if not complete:
            break
    if nout >= out_cap:
        complete = False
    return out[:nout], complete, nodes


def enumerate_undetected(m: FaultModel, max_weight: int, max_nodes: int = 10 ** 10,
                         out_cap: int = 5_000_000) -> EnumerationResult:
    """Undetected, observable-flipping fault sets of size <= ``max_weight``.

    The search grows a set by always cancelling its smallest open detector and
    stops as soon as no detector is open.  Hence every irreducible set (no
    proper nonempty subset is itself undetected) is found, and every set
    returned has connected detector support.  Reducible sets are only
    products of a smaller undetected set with an undetected trivial one; they
    are higher order and are not needed for leading-order rates.
    ``complete`` is False when the node or output cap was hit.
    """
    if max_weight < 1:
        raise ValueError("max_weight must be >= 1")
    if not m.faults:
        return EnumerationResult([], max_weight, True, 0)
    arrs = _arrays(m)
    out, complete, nodes = _dfs(max_weight, *arrs, max_nodes, out_cap)
    sets = sorted({tuple(sorted(int(v) for v in row if v >= 0)) for row in out})
    return EnumerationResult(sets, max_weight, bool(complete), int(nodes))


def brute_force_undetected(m: FaultModel, max_weight: int) -> list[tuple[int, ...]]:
    """Reference: every subset of size <= max_weight with zero syndrome and odd observable."""
    sigs = [sum(1 << d for d in f.detectors) for f in m.faults]
    out = []
    for w in range(1, max_weight + 1):
        for sub in itertools.combinations(range(len(m.faults)), w):
            s, o = 0, 0
            for i in sub:
                s ^= sigs[i]
                o ^= m.faults[i].obs_flip
            if s == 0 and o == 1:
                out.append(sub)
    return out


def is_connected(m: FaultModel, sub: Sequence[int]) -> bool:
    sub = list(sub)
    if len(sub) <= 1:
        return True
    seen = {sub[0]}
    stack = [sub[0]]
    while stack:
        a = stack.pop()
        da = set(m.faults[a].detectors)
        for b in sub:
            if b not in seen and da & set(m.faults[b].detectors):
                seen.add(b)
                stack.append(b)
    return len(seen) == len(sub)


def min_fault_distance(m: FaultModel, cap: int, max_nodes: int = 10 ** 10) -> int | None:
    """Smallest weight <= cap of an undetected logical fault set, else None."""
    for w in range(1, cap + 1):
        r = enumerate_undetected(m, w, max_nodes=max_nodes)
        if r.sets:
            return min(len(s) for s in r.sets)
        if not r.complete:
            raise RuntimeError(f"search budget exhausted at weight {w}")
    return None


@dataclass
class RateReport:
    raw: float
    doubled: float
    per_weight: dict[int, float]
    count_per_weight: dict[int, int]
    complete: bool

    def to_json(self) -> str:
        return json.dumps({"raw": self.raw, "doubled": self.doubled,
                           "per_weight": {str(k): v for k, v in self.per_weight.items()},
                           "count_per_weight": {str(k): v for k, v in self.count_per_weight.items()},
                           "complete": self.complete})


def leading_order_rate(m: FaultModel, sets: Iterable[Sequence[int]], complete: bool = True) -> RateReport:
    """Sum over sets of the product of their fault probabilities (and twice that)."""
    per: dict[int, float] = {}
    cnt: dict[int, int] = {}
    for s in sets:
        v = 1.0
        for i in s:
            v *= m.faults[i].probability
        per[len(s)] = per.get(len(s), 0.0) + v
        cnt[len(s)] = cnt.get(len(s), 0) + 1
    raw = sum(per.values())
    return RateReport(raw, 2 * raw, dict(sorted(per.items())), dict(sorted(cnt.items())), complete)


# ---------------------------------------------------------------------------
# single-fault scan of the injection

@dataclass
class InjectionScan:
    """Weight-1 faults of the injection that no detector sees but flip the observable."""

    undetected_logical: list[tuple[int, str]]   # (instruction, component)
    equivalent_to_t_z: list[bool]               # same class as Z at the T location
    total_components: int

    @property
    def only_t_z(self) -> bool:
        return bool(self.undetected_logical) and all(self.equivalent_to_t_z)


def _frame_after(c: DetectorCircuit, start: int, stop: int, frame, n: int):
    from .pauli import CliffordGate, conjugate, gate_arity
    xs = [q for q, k in frame if k in (1, 3)]
    zs = [q for q, k in frame if k in (2, 3)]
    p = PauliString.from_sets(n, xs=xs, zs=zs)
    for ins in c.instructions[start:stop]:
        if ins.name in _GATE_NAMES:
            a = gate_arity(ins.name)
            for k in range(0, len(ins.targets), a):
                p = conjugate(p, CliffordGate(ins.name, tuple(ins.targets[k:k + a])))
    return p


def injection_fault_scan(noise) -> InjectionScan:
    """Propagate each injection fault to the end of the injection and compare with Z at the T.

    The scanned circuit is the injection followed by the ideal readout of
    every stabilizer and the logical Y.  A fault is counted as equivalent to
    the T-gate Z when its residual Pauli times the residual of Z at the T
    location lies in the stabilizer group (signs ignored).
    """
    from .gf2 import Eliminator
    from .noise import apply_noise_model
    from .stages import StageContext, build_injection, build_readout

    ctx = StageContext()
    build_injection(ctx)
    end = ctx.at(ctx.position())
    build_readout(ctx)
    clean = ctx.build()
    c = clifford_substitute(apply_noise_model(clean, noise))
    n = c.num_qubits
    comps = _components(c)
    D, O = propagate_components(c, comps)
    # noiseless positions -> noisy positions
    noisy_pos, k = {}, 0
    for i, ins in enumerate(c.instructions):
        if ins.name not in _NOISE_NAMES:
            noisy_pos[k] = i
            k += 1
    stop = noisy_pos[end]
    tpos = noisy_pos[ctx.at(ctx.t_location[0])]
    # the T layer runs up to the next TICK; Z placed right after the T itself
    tq = ctx.t_location[1]
    t_at = next(i for i in range(tpos, stop) if c.instructions[i].name == "S" and tq in c.instructions[i].targets)
    ref = _frame_after(c, t_at + 1, stop, ((tq, 2),), n)
    e = Eliminator()
    for st in ctx.layout.stabilizers(n):
        e.add(st.x | st.z << n)
    # before the T the injected state itself is a stabilizer state, so faults
    # there are compared at the T location modulo the full state group
    pre = run_tableau(c, stop=t_at).tableau
    out, eq = [], []
    for j, comp in enumerate(comps):
        if D[:, j].any() or not O[0, j] or comp.pos >= stop:
            continue
        out.append((comp.pos, comp.label))
        if comp.pos < t_at:
            r = _frame_after(c, comp.pos + 1, t_at, comp.frame, n)
            diff = PauliString.from_sets(n, xs=_bits(r.x), zs=_bits(r.z ^ (1 << tq)))
            eq.append(pre.expectation(diff) is not None)
        else:
            r = _frame_after(c, comp.pos + 1, stop, comp.frame, n)
            eq.append(e.express((r.x ^ ref.x) | (r.z ^ ref.z) << n) is not None)
    return InjectionScan(out, eq, len(comps))


__all__ = [
    "FaultLocation", "FaultModel", "extract_fault_model", "enumerate_undetected", "EnumerationResult",
    "brute_force_undetected", "min_fault_distance", "leading_order_rate", "RateReport",
    "combine_probability", "is_connected", "propagate_components",
    "InjectionScan", "injection_fault_scan",
]
