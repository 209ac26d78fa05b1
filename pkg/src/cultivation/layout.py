"""Surface-code geometry: rotated patches, the mid-cycle code and its self-dual deformation.

Coordinates: rotated-code data qubits sit at integer points ``(x, y)`` with
``0 <= x, y < d``; the plaquette ancilla for the square with lower-left
corner ``(i, j)`` sits at ``(i + .5, j + .5)`` and is X type when ``i + j``
is even.  X boundaries run along the top and bottom edges, Z boundaries
along the left and right ones.  Growing a patch keeps the origin corner
fixed, so the same coordinates name the same physical qubit at every
distance.  The fold used by the mid-cycle code is the main diagonal
``(x, y) <-> (y, x)``.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence
from functools import lru_cache
from graphlib import CycleError, TopologicalSorter

from .gf2 import Eliminator, rank
from .pauli import CliffordGate, PauliString, conjugate_all

ROTATED = "ROTATED"
MIDCYCLE = "MIDCYCLE_UNROTATED"
DEFORMED = "DEFORMED_SELF_DUAL"
STYLES = (ROTATED, MIDCYCLE, DEFORMED)

# CX order over the plaquette corners.  X checks do their top edge first and
# Z checks their left column first; the mid-cycle stabilizers then live on
# horizontal (X) and vertical (Z) edges, and the hook errors of the second
# half run perpendicular to the logical of the same type.
X_ORDER = ((-0.5, -0.5), (0.5, -0.5), (-0.5, 0.5), (0.5, 0.5))
Z_ORDER = ((-0.5, -0.5), (-0.5, 0.5), (0.5, -0.5), (0.5, 0.5))

Coord = tuple[float, float]


class QubitMap:
    """Assigns integer indices to coordinates on first use."""

    def __init__(self):
        self._index: dict[Coord, int] = {}
        self.coords: list[Coord] = []

    def __call__(self, xy) -> int:
        key = (float(xy[0]), float(xy[1]))
        q = self._index.get(key)
        if q is None:
            q = len(self.coords)
            self._index[key] = q
            self.coords.append(key)
        return q

    def get(self, xy) -> int | None:
        return self._index.get((float(xy[0]), float(xy[1])))

    def coord(self, q: int) -> Coord:
        return self.coords[q]

    def __len__(self) -> int:
        return len(self.coords)


@dataclass
class Plaquette:
    """One stabilizer measurement of the rotated code.

    ``data`` lists the data qubits in CX order and ``layers`` the CX layer
    (0..3) each one is touched in.
    """

    basis: str
    pos: Coord
    ancilla: int
    data: tuple[int, ...]
    layers: tuple[int, ...]
    boundary: bool

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.data)

    @property
    def first_half(self) -> bool:
        """True when every CX happens before the mid-cycle point."""
        return max(self.layers) < 2


@dataclass
class CodeLayout:
    d: int
    style: str
    qubits: QubitMap
    code_qubits: tuple[int, ...]
    x_plaquettes: list[frozenset[int]]
    z_plaquettes: list[frozenset[int]]
    logical_x: frozenset[int]
    logical_z: frozenset[int]
    fold_pairs: dict[int, int] = field(default_factory=dict)
    ancilla_patch: tuple[int, ...] = ()
    z_sign_targets: list[frozenset[int]] = field(default_factory=list)
    plaquettes: list[Plaquette] = field(default_factory=list)
    triples: list[tuple[int, int, int]] = field(default_factory=list)
    parent: "CodeLayout | None" = None

    @property
    def data_qubits(self) -> list[Coord]:
        return [self.qubits.coord(q) for q in self.code_qubits]

    @property
    def n(self) -> int:
        return len(self.code_qubits)

    def coord(self, q: int) -> Coord:
        return self.qubits.coord(q)

    @property
    def ancillas(self) -> list[int]:
        return [p.ancilla for p in self.plaquettes]

    def stabilizers(self, n: int | None = None) -> list[PauliString]:
        n = len(self.qubits) if n is None else n
        out = [PauliString.from_sets(n, xs=s) for s in self.x_plaquettes]
        out += [PauliString.from_sets(n, zs=s) for s in self.z_plaquettes]
        return out

    def logicals(self, n: int | None = None) -> tuple[PauliString, PauliString]:
        n = len(self.qubits) if n is None else n
        return PauliString.from_sets(n, xs=self.logical_x), PauliString.from_sets(n, zs=self.logical_z)

    def logical_y(self, n: int | None = None) -> PauliString:
        """``i X_L Z_L``; Hermitian because the two supports overlap oddly."""
        lx, lz = self.logicals(n)
        return (lx * lz).times_phase(1j)


# ---------------------------------------------------------------------------
# rotated code

def _plaquette_sites(d: int, height: int | None = None):
    h = d if height is None else height
    for i in range(-1, d):
        for j in range(-1, h):
            basis = "X" if (i + j) % 2 == 0 else "Z"
            edge_i, edge_j = i in (-1, d - 1), j in (-1, h - 1)
            if edge_i and edge_j:
                continue
            if edge_j and basis != "X":
                continue
            if edge_i and basis != "Z":
                continue
            yield basis, (i + 0.5, j + 0.5), edge_i or edge_j


def build_rotated_layout(d: int, qubits: QubitMap | None = None,
                         orders: tuple[tuple, tuple] = (X_ORDER, Z_ORDER)) -> CodeLayout:
    """Rotated distance-``d`` patch with its syndrome-extraction schedule."""
    if d < 2:
        raise ValueError("distance must be at least 2")
    qm = QubitMap() if qubits is None else qubits
    data = tuple(qm((x, y)) for y in range(d) for x in range(d))
    plaqs = []
    for basis, pos, boundary in _plaquette_sites(d):
        order = orders[0] if basis == "X" else orders[1]
        qs, layers = [], []
        for layer, (dx, dy) in enumerate(order):
            x, y = pos[0] + dx, pos[1] + dy
            if 0 <= x < d and 0 <= y < d:
                qs.append(qm((x, y)))
                layers.append(layer)
        plaqs.append(Plaquette(basis, pos, qm(pos), tuple(qs), tuple(layers), boundary))
    return CodeLayout(
        d=d, style=ROTATED, qubits=qm, code_qubits=data,
        x_plaquettes=[p.support for p in plaqs if p.basis == "X"],
        z_plaquettes=[p.support for p in plaqs if p.basis == "Z"],
        logical_x=frozenset(qm((0, y)) for y in range(d)),
        logical_z=frozenset(qm((x, 0)) for x in range(d)),
        plaquettes=plaqs,
    )


def rect_stabilizers(width: int, height: int, qm: QubitMap) -> tuple[list[frozenset[int]], list[frozenset[int]]]:
    """X and Z stabilizer supports of a ``width`` x ``height`` rotated patch at the origin."""
    xs, zs = [], []
    for basis, pos, _ in _plaquette_sites(width, height):
        qs = frozenset(qm((pos[0] + dx, pos[1] + dy)) for dx, dy in X_ORDER
                       if 0 <= pos[0] + dx < width and 0 <= pos[1] + dy < height)
        (xs if basis == "X" else zs).append(qs)
    return xs, zs


def schedule_is_valid(l: CodeLayout) -> bool:
    """No qubit in two CXs of one layer, and every X/Z pair of checks interleaves validly."""
    used = set()
    for p in l.plaquettes:
        for q, layer in zip(p.data, p.layers):
            if (q, layer) in used:
                return False
            used.add((q, layer))
    xs = [p for p in l.plaquettes if p.basis == "X"]
    zs = [p for p in l.plaquettes if p.basis == "Z"]
    for a in xs:
        la = dict(zip(a.data, a.layers))
        for b in zs:
            lb = dict(zip(b.data, b.layers))
            shared = set(la) & set(lb)
            if sum(la[q] < lb[q] for q in shared) % 2:
                return False
    return True


def search_schedules(d: int) -> list[tuple[tuple, tuple]]:
    """All uniform corner orders (X order, Z order) meeting the mid-cycle requirements.

    Requirements: a valid schedule; X checks start on a horizontal edge and Z
    checks on a vertical one (so the mid-cycle code is the unrotated code);
    every boundary check does both of its CXs in the same half.
    """
    corners = list(X_ORDER)
    horiz = [c for c in itertools.permutations(corners) if c[0][1] == c[1][1]]
    vert = [c for c in itertools.permutations(corners) if c[0][0] == c[1][0]]
    found = []
    for xo in horiz:
        for zo in vert:
            l = build_rotated_layout(d, orders=(xo, zo))
            if schedule_is_valid(l) and all(
                    max(p.layers) < 2 or min(p.layers) >= 2 for p in l.plaquettes if p.boundary):
                found.append((xo, zo))
    return found


# ---------------------------------------------------------------------------
# mid-cycle (unrotated) code

def fold(xy: Coord) -> Coord:
    return (xy[1], xy[0])


def midcycle_layout(l: CodeLayout) -> CodeLayout:
    """The code on data plus interior ancillas half-way through a syndrome cycle.

    X stabilizers sit on horizontal edges and Z stabilizers on vertical ones;
    outer (boundary) ancillas are in product states and are not part of it.
    """
    if l.style != ROTATED:
        raise ValueError("midcycle_layout expects a rotated layout")
    d, qm = l.d, l.qubits
    inner = {p.pos: p.ancilla for p in l.plaquettes if not p.boundary}
    code = tuple(l.code_qubits) + tuple(inner[k] for k in sorted(inner, key=lambda c: (c[1], c[0])))
    xs, zs = [], []
    for y in range(d):
        for x in range(d - 1):
            s = {qm((x, y)), qm((x + 1, y))}
            s |= {inner[c] for c in ((x + 0.5, y - 0.5), (x + 0.5, y + 0.5)) if c in inner}
            xs.append(frozenset(s))
            s = {qm((y, x)), qm((y, x + 1))}
            s |= {inner[c] for c in ((y - 0.5, x + 0.5), (y + 0.5, x + 0.5)) if c in inner}
            zs.append(frozenset(s))
    pairs = {q: qm(fold(qm.coord(q))) for q in code}
    return CodeLayout(
        d=d, style=MIDCYCLE, qubits=qm, code_qubits=code,
        x_plaquettes=xs, z_plaquettes=zs,
        logical_x=l.logical_x, logical_z=l.logical_z,
        fold_pairs=pairs, plaquettes=l.plaquettes, parent=l,
    )


def is_fold_dual(l: CodeLayout) -> bool:
    """Every X stabilizer reflects onto a Z stabilizer and X_L onto Z_L."""
    if not l.fold_pairs:
        return False
    f = l.fold_pairs
    zset = set(l.z_plaquettes)
    return all(frozenset(f[q] for q in s) in zset for s in l.x_plaquettes) and \
        frozenset(f[q] for q in l.logical_x) == l.logical_z


# ---------------------------------------------------------------------------
# deformation to a self-dual code

def _triple_images():
    """Target action on (q, q', a) as (X images, Z images) over the triple."""
    ximg = {0: (0, 2), 1: (1, 2), 2: (0, 1, 2)}
    zimg = {0: (1, 2), 1: (0, 2), 2: (0, 1, 2)}
    return ximg, zimg


def _gl_matrix(images) -> tuple[int, int, int]:
    return tuple(sum(1 << j for j in images[i]) for i in range(3))


_TWO_QUBIT_MOVES = [(name, (a, b)) for name in ("CX", "CXSWAP")
                    for a in range(3) for b in range(3) if a != b]


def _apply_move(rows: tuple[int, ...], move) -> tuple[int, ...]:
    """Heisenberg action of one move on the X images of the three inputs."""
    name, (a, b) = move
    out = []
    for r in rows:
        xa, xb = (r >> a) & 1, (r >> b) & 1
        if name == "CX":
            xb ^= xa
        else:  # CX a->b then CX b->a
            xb ^= xa
            xa ^= xb
        r = (r & ~((1 << a) | (1 << b))) | (xa << a) | (xb << b)
        out.append(r)
    return tuple(out)


@lru_cache(maxsize=None)
def deformation_sequence() -> tuple[tuple[str, tuple[int, int]], ...]:
    """Shortest CX/CXSWAP sequence on (q, q', a) realising the deformation map.

    Breadth-first search over GL(3, 2).  The circuit is CSS, so matching the
    X images fixes the Z images; they are checked anyway by the tests.
    """
    start = (1, 2, 4)
    goal = _gl_matrix(_triple_images()[0])
    prev = {start: None}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if cur == goal:
            break
        for mv in _TWO_QUBIT_MOVES:
            nxt = _apply_move(cur, mv)
            if nxt not in prev:
                prev[nxt] = (cur, mv)
                queue.append(nxt)
    seq = []
    cur = goal
    while prev[cur] is not None:
        cur, mv = prev[cur]
        seq.append(mv)
    return tuple(reversed(seq))


def patch_coord(xy: Coord, d: int) -> Coord:
    """Location of the patch ancilla paired with the off-fold qubit at ``xy`` (x > y)."""
    return (xy[0], xy[1] - d)


def deformed_layout(mid: CodeLayout) -> CodeLayout:
    """Self-dual code obtained from the mid-cycle code by the triple map."""
    if mid.style != MIDCYCLE:
        raise ValueError("deformed_layout expects a mid-cycle layout")
    qm, d = mid.qubits, mid.d
    triples = []
    for q in mid.code_qubits:
        x, y = qm.coord(q)
        if x > y:
            triples.append((q, mid.fold_pairs[q], qm(patch_coord((x, y), d))))
    patch = tuple(t[2] for t in triples)
    n = len(qm)
    gates = deformation_gates(triples)

    def image(p: PauliString) -> PauliString:
        return conjugate_all(p.embed(n, range(p.n)) if p.n != n else p, gates)

    xs, zs = [], []
    for s in mid.x_plaquettes:
        xs.append(frozenset(image(PauliString.from_sets(n, xs=s)).support()))
    for s in mid.z_plaquettes:
        zs.append(frozenset(image(PauliString.from_sets(n, zs=s)).support()))
    lx = frozenset(image(PauliString.from_sets(n, xs=mid.logical_x)).support())
    lz = frozenset(image(PauliString.from_sets(n, zs=mid.logical_z)).support())
    targets = [s for s in zs if len(s) % 4 == 2]
    return CodeLayout(
        d=d, style=DEFORMED, qubits=qm, code_qubits=tuple(mid.code_qubits) + patch,
        x_plaquettes=xs, z_plaquettes=zs, logical_x=lx, logical_z=lz,
        ancilla_patch=patch, z_sign_targets=targets, plaquettes=mid.plaquettes,
        triples=triples, parent=mid,
    )


def deformation_gates(triples) -> list[CliffordGate]:
    seq = deformation_sequence()
    out = []
    for mv, (a, b) in seq:
        for t in triples:
            out.append(CliffordGate(mv, (t[a], t[b])))
    return out


def deformation_layers(triples) -> list[tuple[str, list[tuple[int, int]]]]:
    """The deformation circuit as parallel layers (one per move of the sequence)."""
    return [(mv, [(t[a], t[b]) for t in triples]) for mv, (a, b) in deformation_sequence()]


# ---------------------------------------------------------------------------
# unitary growth

@dataclass
class GrowthPlan:
    """CX network taking a d_from patch to a d_to patch without measurements.

    New qubits start in ``plus`` (|+>) or ``zero`` (|0>); ``layers`` lists the
    CX gates (control, target) layer by layer.
    """

    d_from: int
    d_to: int
    plus: tuple[int, ...]
    zero: tuple[int, ...]
    layers: list[list[tuple[int, int]]]

    @property
    def gates(self) -> list[CliffordGate]:
        return [CliffordGate("CX", pr) for layer in self.layers for pr in layer]


def _vec(s) -> int:
    return sum(1 << q for q in s)


def _hook_orders(basis: str, p: int, rest: list[int], qm: QubitMap | None) -> list[list[int]]:
    """Target orders for one fan-out, hook-safe ones first.

    A fault on the pivot after its first CX leaves the error on the targets
    not yet touched; that pair should run across the logical of the same
    type (horizontal for X, vertical for Z), i.e. the first target shares the
    pivot's row for X and its column for Z.
    """
    orders = [list(o) for o in itertools.permutations(rest)] if len(rest) <= 3 else [rest]
    if qm is None or len(rest) < 3:
        return orders
    axis = 1 if basis == "X" else 0

    def safe(o):
        return qm.coord(o[0])[axis] == qm.coord(p)[axis]
    good = [o for o in orders if safe(o)]
    return good or orders


def _fanout_ops(basis: str, old: list[frozenset[int]], target: list[frozenset[int]],
                new: set[int], qm: QubitMap | None = None) -> tuple[list[tuple[int, int]], set[int]]:
    """Pivot fan-out creating the ``basis`` generators of ``target`` missing from ``old``.

    For X each pivot starts in |+> and is the control of CXs onto the rest of
    its generator (old qubits included); for Z the pivot starts in |0> and is
    the target.  A pivot may appear in a later generator, which then touches
    it only after its own fan-out; the pivot choice must make that order
    acyclic.  Returns the ordered CX list and the pivot set.
    """
    e = Eliminator()
    for s in old:
        e.add(_vec(s))
    gens = [g for g in target if e.add(_vec(g))]
    options = [sorted(g & new) for g in gens]
    best = None
    for choice in itertools.product(*options):
        if len(set(choice)) != len(choice):
            continue
        deps = {i: {j for j, p in enumerate(choice) if j != i and p in gens[i]} for i in range(len(gens))}
        try:
            order = list(TopologicalSorter(deps).static_order())
        except CycleError:
            continue
        pivots = set(choice)
        per_gen = [_hook_orders(basis, choice[i], sorted(gens[i] - {choice[i]}), qm) for i in order]
        for orders in itertools.product(*per_gen):
            ops = []
            for i, rest in zip(order, orders):
                p = choice[i]
                ops += [(p, q) if basis == "X" else (q, p) for q in rest]
            depth = len(_asap(ops))
            if best is None or depth < best[0]:
                best = (depth, ops, pivots)
    if best is None:
        raise ValueError("no acyclic pivot assignment")
    return best[1], best[2]


def _asap(ops: list[tuple[int, int]]) -> list[list[tuple[int, int]]]:
    """Pack gates into layers, keeping program order on every shared qubit."""
    ready: dict[int, int] = {}
    layers: list[list[tuple[int, int]]] = []
    for a, b in ops:
        k = max(ready.get(a, 0), ready.get(b, 0))
        if k == len(layers):
            layers.append([])
        layers[k].append((a, b))
        ready[a] = ready[b] = k + 1
    return layers


def growth_plan(d_from: int, d_to: int, qm: QubitMap) -> GrowthPlan:
    """Grow a rotated patch in place: first rightwards, then downwards.

    The right strip crosses a Z boundary, so its new X checks come from X
    pivots; the bottom strip crosses an X boundary and uses Z pivots.
    """
    if d_to <= d_from:
        raise ValueError("growth must increase the distance")
    ox, _ = rect_stabilizers(d_from, d_from, qm)
    mx, mz = rect_stabilizers(d_to, d_from, qm)
    _, tz = rect_stabilizers(d_to, d_to, qm)
    right = {qm((x, y)) for x in range(d_from, d_to) for y in range(d_from)}
    bottom = {qm((x, y)) for x in range(d_to) for y in range(d_from, d_to)}
    ops1, piv1 = _fanout_ops("X", ox, mx, right, qm)
    ops2, piv2 = _fanout_ops("Z", mz, tz, bottom, qm)
    plus = tuple(sorted(piv1 | (bottom - piv2)))
    zero = tuple(sorted((right - piv1) | piv2))
    return GrowthPlan(d_from, d_to, plus, zero, _asap(ops1 + ops2))


# ---------------------------------------------------------------------------
# checks

def is_self_dual(l: CodeLayout) -> bool:
    """X and Z stabilizer supports span the same GF(2) space."""
    def vec(s):
        return sum(1 << q for q in s)
    xv = [vec(s) for s in l.x_plaquettes]
    zv = [vec(s) for s in l.z_plaquettes]
    r = rank(xv)
    return r == rank(zv) == rank(xv + zv)


def check_code(l: CodeLayout) -> None:
    """Raise ValueError unless the layout describes a valid [[n, 1]] stabilizer code."""
    n = len(l.qubits)
    stabs = l.stabilizers(n)
    for a, b in itertools.combinations(stabs, 2):
        if not a.commutes(b):
            raise ValueError("stabilizers do not commute")
    lx, lz = l.logicals(n)
    for s in stabs:
        if not (s.commutes(lx) and s.commutes(lz)):
            raise ValueError("logical does not commute with a stabilizer")
    if lx.commutes(lz):
        raise ValueError("logical operators commute")
    support = set(l.code_qubits)
    for s in stabs + [lx, lz]:
        if not set(s.support()) <= support:
            raise ValueError("operator leaves the code qubits")
    e = Eliminator()
    for s in stabs:
        e.add(s.x | (s.z << n))
    k = 1 + len(l.ancilla_patch)
    if l.n - e.rank != k:
        raise ValueError(f"expected {k} logical qubits, found {l.n - e.rank}")
    for lg in (lx, lz):
        if e.express(lg.x | (lg.z << n)) is not None:
            raise ValueError("logical lies in the stabilizer group")
    for gx, gz in patch_logicals(l, n):
        if not all(gx.commutes(s) and gz.commutes(s) for s in stabs + [lx, lz]) or gx.commutes(gz):
            raise ValueError("bad patch logical")


def signed_stabilizers(l: CodeLayout, n: int | None = None) -> list[PauliString]:
    """Generators with the signs the transversal check needs.

    X checks are +1, Z checks of weight 2 mod 4 are -1 and the rest +1.
    """
    n = len(l.qubits) if n is None else n
    out = [PauliString.from_sets(n, xs=s) for s in l.x_plaquettes]
    out += [-PauliString.from_sets(n, zs=s) if len(s) % 4 == 2 else PauliString.from_sets(n, zs=s)
            for s in l.z_plaquettes]
    return out


def group_sign(p: PauliString, gens: Sequence[PauliString]) -> int | None:
    """``s`` with ``p == s * g`` for some product ``g`` of ``gens``, else None."""
    n = p.n
    e = Eliminator()
    for g in gens:
        e.add(g.x | (g.z << n))
    combo = e.express(p.x | (p.z << n))
    if combo is None:
        return None
    prod = PauliString.identity(n)
    for i, g in enumerate(gens):
        if combo >> i & 1:
            prod = prod * g
    ratio = p * prod   # gens square to the identity, so p * prod = s * prod * prod = s
    if ratio.x or ratio.z:
        raise AssertionError("group product mismatch")
    return {0: 1, 2: -1}.get(ratio.phase_exponent)


@dataclass
class TransversalAction:
    gate: str
    stabilizers_preserved: bool
    x_to_y_sign: int | None      # X_L -> sign * Y_L modulo the signed group
    z_to_z_sign: int | None      # Z_L -> sign * Z_L
    w: int                       # logical support has 2w + 1 qubits


def transversal_action(l: CodeLayout, gate: str | None = None) -> TransversalAction:
    """Apply ``gate`` (default H_XY for odd d, IZH_XY for even d) to every code qubit."""
    gate = gate or ("H_XY" if l.d % 2 else "IZH_XY")
    n = len(l.qubits)
    gens = signed_stabilizers(l, n)
    layer = [CliffordGate(gate, (q,)) for q in l.code_qubits]
    ok = all(group_sign(conjugate_all(g, layer), gens) == 1 for g in gens)
    lx, lz = l.logicals(n)
    # image = s * g * target with target^2 = 1, so image * target = s * g
    sx = group_sign(conjugate_all(lx, layer) * l.logical_y(n), gens)
    sz = group_sign(conjugate_all(lz, layer) * lz, gens)
    return TransversalAction(gate, ok, sx, sz, (len(l.logical_x) - 1) // 2)


def patch_logicals(l: CodeLayout, n: int | None = None) -> list[tuple[PauliString, PauliString]]:
    """Weight-3 self-dual logical pairs contributed by the ancilla patch."""
    n = len(l.qubits) if n is None else n
    return [(PauliString.from_sets(n, xs=t), PauliString.from_sets(n, zs=t)) for t in l.triples]


def code_distance(l: CodeLayout, max_weight: int | None = None) -> int:
    """Minimum weight of a nontrivial logical operator (brute force, small codes)."""
    n = len(l.qubits)
    qs = list(l.code_qubits)
    stabs = l.stabilizers(n)
    e = Eliminator()
    for s in stabs:
        e.add(s.x | (s.z << n))
    limit = max_weight or len(qs)
    for w in range(1, limit + 1):
        for sub in itertools.combinations(qs, w):
            for letters in itertools.product("XYZ", repeat=w):
                p = PauliString.from_sparse(n, zip(sub, letters))
                if all(p.commutes(s) for s in stabs) and e.express(p.x | (p.z << n)) is None:
                    return w
    return limit + 1


__all__ = [
    "ROTATED", "MIDCYCLE", "DEFORMED", "QubitMap", "Plaquette", "CodeLayout",
    "build_rotated_layout", "schedule_is_valid", "search_schedules", "midcycle_layout",
    "is_fold_dual", "deformed_layout", "deformation_sequence", "deformation_gates",
    "deformation_layers", "is_self_dual", "patch_logicals", "check_code", "code_distance", "fold",
    "GrowthPlan", "growth_plan", "rect_stabilizers",
    "signed_stabilizers", "group_sign", "TransversalAction", "transversal_action",
]
