"""Matching decoder for the escape region with complementary-gap soft output.

The graph has one node per ESCAPE detector plus a boundary node.  Shortest
paths are computed once on a parity-doubled copy of the graph, where node
``(u, a)`` records the observable parity ``a`` accumulated so far.  Per shot,
defects are split into clusters that never benefit from being paired across,
and each cluster is solved exactly by a subset DP that keeps the best cost in
both observable classes.  ``mwpm_decode`` is a second, independent route using
networkx's blossom matcher.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import networkx as nx
import numba
import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from .circuit import CULTIVATE, ESCAPE, DetectorCircuit
from .faults import FaultModel, FaultLocation, combine_probability, extract_fault_model

DECIBAN = 10.0 / math.log(10.0)
MAX_CLUSTER = 22


class DecoderError(ValueError):
    pass


@dataclass
class Edge:
    u: int
    v: int              # == boundary for boundary edges
    probability: float
    obs: int
    faults: list[int] = field(default_factory=list)

    @property
    def weight(self) -> float:
        q = self.probability
        return math.log((1 - q) / q)


@dataclass
class DetectorGraph:
    """Matchable graph over ESCAPE detectors; node ``num_nodes`` is the boundary."""

    num_nodes: int
    edges: list[Edge]
    detector_ids: tuple[int, ...]   # circuit detector index per node
    dist: np.ndarray = field(repr=False, default=None)  # (2, N+1, N+1)

    def __post_init__(self):
        if self.dist is None:
            self.dist = _parity_distances(self.num_nodes + 1, self.edges)

    @property
    def boundary(self) -> int:
        return self.num_nodes

    @property
    def logical_weight(self) -> float:
        """Cheapest observable-flipping cycle through the boundary."""
        return float(self.dist[1, self.boundary, self.boundary])

    def is_connected(self) -> bool:
        return bool(np.isfinite(self.dist.min(axis=0)[self.boundary]).all())

    def to_json(self) -> str:
        return json.dumps({
            "nodes": list(range(self.num_nodes)),
            "boundary": self.boundary,
            "detector_ids": list(self.detector_ids),
            "edges": [{"u": e.u, "v": e.v, "p": e.probability, "weight": e.weight,
                       "obs": e.obs, "faults": e.faults} for e in self.edges],
        })


def _parity_distances(n: int, edges: list[Edge]) -> np.ndarray:
    # doubled graph: (u, a) -- (v, a ^ obs)
    rows, cols, w = [], [], []
    for e in edges:
        for a in (0, 1):
            rows += [e.u + a * n, e.v + (a ^ e.obs) * n]
            cols += [e.v + (a ^ e.obs) * n, e.u + a * n]
            w += [e.weight, e.weight]
    if not rows:
        d = np.full((2, n, n), np.inf)
        for u in range(n):
            d[0, u, u] = 0.0
        return d
    g = coo_matrix((w, (rows, cols)), shape=(2 * n, 2 * n)).tocsr()
    full = dijkstra(g, directed=False, indices=np.arange(n))
    return np.stack([full[:, :n], full[:, n:]])


# ---------------------------------------------------------------------------
# construction

def escape_fault_model(c: DetectorCircuit) -> FaultModel:
    """Faults that leave every CULTIVATE detector quiet, restricted to ESCAPE detectors.

    Anything touching a CULTIVATE detector is discarded by postselection at
    leading order, so it never reaches the decoder.
    """
    full = extract_fault_model(c, regions=None)
    region = {k: c.detectors[i].region for k, i in enumerate(full.detector_ids)}
    esc = [k for k in range(full.num_detectors) if region[k] == ESCAPE]
    local = {k: j for j, k in enumerate(esc)}
    faults = []
    for f in full.faults:
        if any(region[k] == CULTIVATE for k in f.detectors):
            continue
        faults.append(FaultLocation(len(faults), f.probability, tuple(local[k] for k in f.detectors),
                                    f.obs_flip, list(f.provenance)))
    return FaultModel(faults, len(esc), tuple(full.detector_ids[k] for k in esc), (ESCAPE,))


def _decompose(dets: tuple[int, ...], obs: int, known: dict[tuple[int, ...], set[int]]):
    """Split ``dets`` into known graphlike pieces whose observables XOR to ``obs``."""
    def rec(rest: tuple[int, ...], want: int):
        if not rest:
            return [] if want == 0 else None
        a, tail = rest[0], rest[1:]
        options = [((a,), tail)] + [((a, b), tail[:i] + tail[i + 1:]) for i, b in enumerate(tail)]
        for piece, left in options:
            for o in sorted(known.get(piece, ())):
                sub = rec(left, want ^ o)
                if sub is not None:
                    return [(piece, o)] + sub
        return None
    return rec(tuple(sorted(dets)), obs)


def build_detector_graph(m: FaultModel) -> DetectorGraph:
    """Graph from an ESCAPE-only fault model; hyperedges are decomposed."""
    n = m.num_detectors
    known: dict[tuple[int, ...], set[int]] = {}
    for f in m.faults:
        if 1 <= len(f.detectors) <= 2:
            known.setdefault(tuple(sorted(f.detectors)), set()).add(f.obs_flip)
    merged: dict[tuple[int, int, int], Edge] = {}

    def add(piece, obs, f):
        u, v = (piece[0], n) if len(piece) == 1 else piece
        key = (u, v, obs)
        e = merged.get(key)
        if e is None:
            merged[key] = Edge(u, v, f.probability, obs, [f.id])
        else:
            e.probability = combine_probability(e.probability, f.probability)
            e.faults.append(f.id)

    for f in m.faults:
        if not f.detectors:
            if f.obs_flip:
                raise DecoderError(f"undetectable logical fault {f.provenance[:2]}")
            continue
        if len(f.detectors) <= 2:
            add(tuple(sorted(f.detectors)), f.obs_flip, f)
            continue
        parts = _decompose(f.detectors, f.obs_flip, known)
        if parts is None:
            raise DecoderError(f"cannot decompose fault {f.id} with detectors {f.detectors} "
                               f"from {f.provenance[:3]}")
        for piece, o in parts:
            add(piece, o, f)
    for e in merged.values():
        if not 0 < e.probability < 0.5:
            raise DecoderError(f"edge probability {e.probability} outside (0, 1/2)")
    return DetectorGraph(n, list(merged.values()), tuple(m.detector_ids))


def detector_graph_for(c: DetectorCircuit) -> DetectorGraph:
    return build_detector_graph(escape_fault_model(c))


# ---------------------------------------------------------------------------
# exact class-conditional matching

@numba.njit(cache=True)
def _cluster_dp(idx, dist, bnd):
    k = idx.size
    size = 1 << k
    f0 = np.empty(size)
    f1 = np.empty(size)
    f0[0] = 0.0
    f1[0] = np.inf
    for mask in range(1, size):
        low = mask & -mask
        i = 0
        while (1 << i) != low:
            i += 1
        rest = mask ^ low
        a = idx[i]
        b0 = dist[0, a, bnd] + f0[rest]
        b1 = dist[1, a, bnd] + f0[rest]
        c0 = min(b0, dist[1, a, bnd] + f1[rest])
        c1 = min(b1, dist[0, a, bnd] + f1[rest])
        r = rest
        while r:
            lj = r & -r
            j = 0
            while (1 << j) != lj:
                j += 1
            r ^= lj
            sub = rest ^ lj
            bj = idx[j]
            c0 = min(c0, dist[0, a, bj] + f0[sub], dist[1, a, bj] + f1[sub])
            c1 = min(c1, dist[1, a, bj] + f0[sub], dist[0, a, bj] + f1[sub])
        f0[mask] = c0
        f1[mask] = c1
    return f0[size - 1], f1[size - 1]


@numba.njit(cache=True)
def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


@numba.njit(cache=True)
def _decode_one(defects, dist, bnd, max_cluster):
    k = defects.size
    parent = np.arange(k)
    for i in range(k):
        a = defects[i]
        for j in range(i + 1, k):
            b = defects[j]
            for c in range(2):
                via = min(dist[0, a, bnd] + dist[c, b, bnd], dist[1, a, bnd] + dist[1 - c, b, bnd])
                if dist[c, a, b] < via - 1e-9:
                    ri, rj = _find(parent, i), _find(parent, j)
                    if ri != rj:
                        parent[ri] = rj
                    break
    # start from "nothing matched", optionally plus one logical loop
    t0 = 0.0
    t1 = dist[1, bnd, bnd]
    roots = np.empty(k, dtype=np.int64)
    for i in range(k):
        roots[i] = _find(parent, i)
    done = np.zeros(k, dtype=np.bool_)
    for i in range(k):
        r = roots[i]
        if done[i]:
            continue
        cnt = 0
        for j in range(k):
            if roots[j] == r:
                cnt += 1
        if cnt > max_cluster:
            return np.inf, np.inf, False
        idx = np.empty(cnt, dtype=np.int64)
        p = 0
        for j in range(k):
            if roots[j] == r:
                idx[p] = defects[j]
                done[j] = True
                p += 1
        g0, g1 = _cluster_dp(idx, dist, bnd)
        n0 = min(t0 + g0, t1 + g1)
        n1 = min(t0 + g1, t1 + g0)
        t0, t1 = n0, n1
    return t0, t1, True


@numba.njit(cache=True, parallel=True)
def _decode_many(ptr, idx, dist, bnd, max_cluster):
    n = ptr.size - 1
    c0 = np.empty(n)
    c1 = np.empty(n)
    ok = np.empty(n, dtype=np.bool_)
    for s in numba.prange(n):
        c0[s], c1[s], ok[s] = _decode_one(idx[ptr[s]:ptr[s + 1]], dist, bnd, max_cluster)
    return c0, c1, ok


@dataclass(frozen=True)
class GapResult:
    predicted_obs: int
    gap: float          # decibans, >= 0
    cost0: float
    cost1: float

    @property
    def cost(self) -> float:
        return min(self.cost0, self.cost1)


def _defects(g: DetectorGraph, syndrome) -> np.ndarray:
    s = np.asarray(syndrome).astype(bool).ravel()
    if s.size != g.num_nodes:
        raise DecoderError(f"syndrome has {s.size} bits, graph has {g.num_nodes} nodes")
    return np.flatnonzero(s).astype(np.int64)


def _gap_from_costs(c0: float, c1: float) -> GapResult:
    if not (np.isfinite(c0) or np.isfinite(c1)):
        raise DecoderError("syndrome cannot be explained: disconnected defect")
    pred = int(c1 < c0)
    if np.isfinite(c0) and np.isfinite(c1):
        gap = abs(c1 - c0) * DECIBAN
    else:
        gap = math.inf
    return GapResult(pred, gap, float(c0), float(c1))


def complementary_gap(g: DetectorGraph, syndrome) -> GapResult:
    """Best cost in each observable class, the predicted class and their gap."""
    d = _defects(g, syndrome)
    c0, c1, ok = _decode_one(d, g.dist, g.boundary, MAX_CLUSTER)
    if not ok:
        raise DecoderError(f"defect cluster larger than {MAX_CLUSTER}")
    return _gap_from_costs(c0, c1)


@dataclass
class DecodedShots:
    predicted: np.ndarray   # uint8 per shot
    gap: np.ndarray         # decibans
    costs: np.ndarray       # (2, shots) class costs
    overflow: np.ndarray    # shots whose largest cluster exceeded MAX_CLUSTER

    def __len__(self) -> int:
        return self.predicted.size


def decode_syndromes(g: DetectorGraph, syndromes: np.ndarray) -> DecodedShots:
    """Vectorised gap decoding of ``syndromes`` (nodes x shots bool).

    Shots with a defect cluster too large for the subset DP fall back to the
    blossom matcher for the prediction and get gap 0, so any positive cutoff
    discards them.
    """
    s = np.asarray(syndromes, dtype=bool)
    if s.shape[0] != g.num_nodes:
        raise DecoderError("syndrome rows do not match graph nodes")
    counts = s.sum(axis=0)
    ptr = np.zeros(s.shape[1] + 1, dtype=np.int64)
    np.cumsum(counts, out=ptr[1:])
    idx = np.nonzero(s.T)[1].astype(np.int64)
    c0, c1, ok = _decode_many(ptr, idx, g.dist, g.boundary, MAX_CLUSTER)
    pred = (c1 < c0).astype(np.uint8)
    with np.errstate(invalid="ignore"):
        gap = np.abs(c1 - c0) * DECIBAN
    gap[~(np.isfinite(c0) & np.isfinite(c1))] = np.inf
    for k in np.flatnonzero(~ok):
        o, cost = mwpm_decode(g, s[:, k])
        pred[k], gap[k], c0[k], c1[k] = o, 0.0, cost, cost
    if not (np.isfinite(c0) | np.isfinite(c1)).all():
        raise DecoderError("syndrome cannot be explained: disconnected defect")
    return DecodedShots(pred, gap, np.stack([c0, c1]), ~ok)


# ---------------------------------------------------------------------------
# independent route: networkx blossom on the defect completion graph

def mwpm_decode(g: DetectorGraph, syndrome) -> tuple[int, float]:
    """Minimum-weight matching correction: (observable bit, total weight)."""
    d = [int(x) for x in _defects(g, syndrome)]
    if not d:
        return 0, 0.0
    b = g.boundary
    near = np.minimum(g.dist[0], g.dist[1])
    par = (g.dist[1] < g.dist[0]).astype(int)
    for a in d:
        if not np.isfinite(near[a, b]) and all(not np.isfinite(near[a, x]) for x in d if x != a):
            raise DecoderError(f"disconnected defect {a}")
    G = nx.Graph()
    big = 1.0 + sum(float(near[a, b]) for a in d if np.isfinite(near[a, b])) + \
        sum(float(near[a, x]) for a, x in combinations(d, 2) if np.isfinite(near[a, x]))
    for a, x in combinations(d, 2):
        if np.isfinite(near[a, x]):
            G.add_edge(("d", a), ("d", x), weight=big - near[a, x])
    for a in d:
        if np.isfinite(near[a, b]):
            G.add_edge(("d", a), ("b", a), weight=big - near[a, b])
    for a, x in combinations(d, 2):
        G.add_edge(("b", a), ("b", x), weight=big)
    match = nx.max_weight_matching(G, maxcardinality=True)
    if len(match) != len(d):
        raise DecoderError("no perfect matching")
    obs, cost = 0, 0.0
    for u, v in match:
        if u[0] == "b" and v[0] == "b":
            continue
        if u[0] == "b":
            u, v = v, u
        a = u[1]
        x = b if v[0] == "b" else v[1]
        obs ^= int(par[a, x])
        cost += float(near[a, x])
    return obs, cost


def brute_force_matching(g: DetectorGraph, syndrome) -> tuple[float, float]:
    """Exhaustive pairing oracle: best cost in observable class 0 and class 1.

    Distances come from a plain networkx Dijkstra on an explicit doubled graph,
    independent of the scipy distance table.
    """
    d = [int(x) for x in _defects(g, syndrome)]
    b = g.boundary
    H = nx.Graph()
    for e in g.edges:
        for a in (0, 1):
            key = ((e.u, a), (e.v, a ^ e.obs))
            if not H.has_edge(*key) or H.edges[key]["weight"] > e.weight:
                H.add_edge(*key, weight=e.weight)
    nodes = set(d) | {b}
    dist = {}
    for s in nodes:
        lengths = nx.single_source_dijkstra_path_length(H, (s, 0)) if H.has_node((s, 0)) else {(s, 0): 0.0}
        for t in nodes:
            dist[s, t] = (lengths.get((t, 0), math.inf), lengths.get((t, 1), math.inf))
    loop = dist[b, b][1]

    def rec(rest):
        if not rest:
            return (0.0, loop)
        a, tail = rest[0], rest[1:]
        best = [math.inf, math.inf]
        for partner in [None] + list(range(len(tail))):
            if partner is None:
                w, left = dist[a, b], tail
            else:
                w, left = dist[a, tail[partner]], tail[:partner] + tail[partner + 1:]
            sub = rec(left)
            for c in (0, 1):
                best[c] = min(best[c], w[0] + sub[c], w[1] + sub[1 - c])
        return tuple(best)

    return rec(tuple(d))


__all__ = [
    "DECIBAN", "DecoderError", "Edge", "DetectorGraph", "GapResult", "escape_fault_model",
    "build_detector_graph", "detector_graph_for", "complementary_gap", "DecodedShots", "decode_syndromes",
    "mwpm_decode", "brute_force_matching",
]
