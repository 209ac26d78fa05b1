"""Stage constructors for cultivation circuits and the end-to-end assembler.

Circuits are written with real T / T_DAG gates; simulation runs on the
Clifford substitute (T -> S), where the injected state is S|+> and the
checked observable is logical Y.  The final readout is an ideal MPP of every
stabilizer and of Y_L.

A :class:`StageContext` carries the things that cross stage boundaries:
the circuit builder, the qubit map, the current layout and, for every
stabilizer whose value is currently predictable, the measurement records
whose parity predicts it.  Detectors are formed against those predictions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import gf2
from .circuit import CULTIVATE, ESCAPE, CircuitBuilder, DetectorCircuit, Instruction, clifford_substitute
from .frame import FrameSimulator
from .layout import (
    DEFORMED, MIDCYCLE, ROTATED, CodeLayout, GrowthPlan, QubitMap, build_rotated_layout,
    deformation_layers, deformed_layout, growth_plan, midcycle_layout,
)
from .noise import NoiseModel, apply_noise_model
from .pauli import CliffordGate, PauliString, conjugate_all
from .simulate import reference_sample, run_tableau

FULL, FIRST_HALF, SECOND_HALF = "FULL", "FIRST_HALF", "SECOND_HALF"
ODD_D, EVEN_D = "ODD_D", "EVEN_D"
DEFAULT_FINAL = {3: 7, 4: 9, 5: 11}

Key = tuple[str, frozenset]


class StageError(ValueError):
    pass


@dataclass
class StagePlan:
    """Which distances to cultivate at and how many full rounds precede each check.

    ``rounds_per_stage[k]`` full syndrome cycles run before the split cycle
    that hosts the k-th stage's checks.  ``d_final=None`` builds the ungrown
    circuit (cultivation followed directly by the ideal readout).
    """

    d_mid: int = 3
    d_final: int | None = 7
    distances: tuple[int, ...] = (3,)
    rounds_per_stage: tuple[int, ...] = (1,)
    checks_per_stage: tuple[int, ...] = (1,)
    escape_rounds: int = 3
    d_start: int = 3
    cat_paths: str = "col-rev"

    def __post_init__(self):
        if self.d_start != 3 or self.distances[0] != 3:
            raise StageError("cultivation starts at distance 3")
        if self.distances[-1] != self.d_mid:
            raise StageError("last stage distance must equal d_mid")
        if not (len(self.distances) == len(self.rounds_per_stage) == len(self.checks_per_stage)):
            raise StageError("per-stage tuples differ in length")
        if any(b <= a for a, b in zip(self.distances, self.distances[1:])):
            raise StageError("stage distances must increase")
        if self.d_mid not in (3, 4, 5):
            raise StageError("d_mid must be 3, 4 or 5")
        if self.d_final is not None and self.d_final < self.d_mid:
            raise StageError("d_final below d_mid")
        if self.escape_rounds < 1 or min(self.rounds_per_stage) < 0 or min(self.checks_per_stage) < 1:
            raise StageError("counts must be positive")


def stage_plan(d: int, d_final: int | None | str = "default", escape_rounds: int = 3) -> StagePlan:
    """The standard plans: d=3; d=4 (one d=3 round, then grow); d=5 (full d=3, then grow)."""
    if d not in DEFAULT_FINAL:
        raise StageError(f"unsupported distance {d}")
    fd = DEFAULT_FINAL[d] if d_final == "default" else d_final
    if d == 3:
        return StagePlan(3, fd, (3,), (1,), (1,), escape_rounds)
    if d == 4:
        return StagePlan(4, fd, (3, 4), (0, 1), (1, 1), escape_rounds)
    return StagePlan(5, fd, (3, 5), (1, 1), (1, 1), escape_rounds)


# ---------------------------------------------------------------------------

def _pauli(n: int, basis: str, support) -> PauliString:
    return PauliString.from_sets(n, xs=support) if basis == "X" else PauliString.from_sets(n, zs=support)


def layout_keys(l: CodeLayout) -> list[Key]:
    return [("X", s) for s in l.x_plaquettes] + [("Z", s) for s in l.z_plaquettes]


@dataclass
class CheckRecord:
    """Where a transversal check happened, for the sign solver and tests."""

    position: int          # instruction index of the first T layer
    layout: CodeLayout
    measurement: int       # index of the central measurement
    flags: list[int]


@dataclass
class StageContext:
    """Mutable state shared by consecutive stage constructors."""

    qubits: QubitMap = field(default_factory=QubitMap)
    builder: CircuitBuilder = field(default_factory=CircuitBuilder)
    layout: CodeLayout | None = None
    known: dict[Key, tuple[int, ...]] = field(default_factory=dict)
    region: str = CULTIVATE
    time: int = 0
    checks: list[CheckRecord] = field(default_factory=list)
    fixups: dict[int, Sequence[int]] = field(default_factory=dict)
    markers: list[tuple[int, str]] = field(default_factory=list)
    t_location: tuple[int, int] | None = None  # (instruction index, qubit) of the injected T
    cat_paths: str = "col-rev"

    # -- small helpers ---------------------------------------------------
    @property
    def b(self) -> CircuitBuilder:
        return self.builder

    def q(self, xy) -> int:
        return self.qubits(xy)

    def mark(self, label: str) -> None:
        self.markers.append((len(self.b.instructions), label))

    def position(self) -> int:
        return len(self.b.instructions)

    def compare(self, key: Key, m: int, coords: Sequence[float]) -> None:
        """Detector for a fresh measurement of ``key``, if its value was predictable."""
        prev = self.known.get(key)
        if prev is not None:
            self.b.detector(list(prev) + [m], region=self.region, coords=coords)
        self.known[key] = (m,)

    def build(self) -> DetectorCircuit:
        body = self.b.build()
        head = [Instruction("QUBIT_COORDS", (q,), xy) for q, xy in enumerate(self.qubits.coords)]
        return DetectorCircuit(head + body.instructions)

    def at(self, pos: int) -> int:
        """Builder position -> instruction index in :meth:`build` output."""
        return pos + len(self.qubits)

    def fragment(self, start: int) -> DetectorCircuit:
        """The circuit so far.  Stage outputs are cumulative because their
        detectors refer back to earlier measurements."""
        return self.build()


# ---------------------------------------------------------------------------
# injection

def _injection_plan(qm: QubitMap):
    """Distance-3 unitary injection.

    The centre qubit carries the logical state; before the T it is copied
    (as a Z-basis repetition) onto its vertical neighbours, so any single X
    fault before the T is caught.  After the T, X-type pivots fan out the
    four X checks.  Returns (plus qubits, zero qubits, gate layers, T qubit,
    index of the T layer).
    """
    c = qm((1, 1))
    n1, n2 = qm((1, 0)), qm((1, 2))
    top, bot, pa, pb = qm((2, 0)), qm((0, 2)), qm((0, 0)), qm((2, 2))
    left, right = qm((0, 1)), qm((2, 1))
    plus = [c, top, bot, pa, pb]
    zero = [n1, n2, left, right]
    layers = [
        [("CX", c, n1), ("CX", bot, n2), ("CX", pa, left), ("CX", pb, right)],
        [("CX", c, n2), ("CX", top, n1)],
        [("T", c), ("CX", pa, n1), ("CX", pb, n2)],
        [("CX", pa, c)],
        [("CX", pb, c)],
    ]
    return plus, zero, layers, c, 2


def build_injection(ctx: StageContext | None = None) -> DetectorCircuit:
    """Unitary injection into the distance-3 rotated code (one T gate)."""
    ctx = ctx or StageContext()
    start = ctx.position()
    ctx.mark("injection")
    l = build_rotated_layout(3, ctx.qubits)
    plus, zero, layers, tq, tlayer = _injection_plan(ctx.qubits)
    b = ctx.b
    b.tick()
    b.append("RESET_X", plus)
    b.append("RESET_Z", zero)
    for k, layer in enumerate(layers):
        b.tick()
        if k == tlayer:
            ctx.t_location = (ctx.position(), tq)
        _emit_layer(b, layer)
    ctx.layout = l
    ctx.known = {k: () for k in layout_keys(l)}
    return ctx.fragment(start)


def _emit_layer(b: CircuitBuilder, layer) -> None:
    groups: dict[str, list[int]] = {}
    for op in layer:
        groups.setdefault(op[0], []).extend(op[1:])
    for name, ts in groups.items():
        b.append(name, ts)


# ---------------------------------------------------------------------------
# syndrome extraction

def build_syndrome_cycle(l: CodeLayout, mode: str, ctx: StageContext | None = None,
                         merge: bool = False) -> DetectorCircuit:
    """One syndrome cycle (or half of one) on a rotated layout.

    FIRST_HALF runs CX layers 0-1 and measures the boundary checks whose CXs
    are all in that half; the state is then the mid-cycle code.  SECOND_HALF
    resets the remaining boundary ancillas, runs layers 2-3 and measures
    everything else.  With ``merge`` the first reset shares the previous
    (gate-free) layer.
    """
    if l.style != ROTATED:
        raise StageError("syndrome cycle needs a rotated layout")
    if mode not in (FULL, FIRST_HALF, SECOND_HALF):
        raise StageError(f"unknown mode {mode!r}")
    if ctx is None:
        ctx = StageContext(qubits=l.qubits, layout=l)
    start = ctx.position()
    ctx.mark(f"cycle {mode} d={l.d}")
    b = ctx.b
    plaqs = l.plaquettes
    early = [p for p in plaqs if p.boundary and p.first_half]
    late = [p for p in plaqs if p.boundary and not p.first_half]
    inner = [p for p in plaqs if not p.boundary]
    if mode == FULL:
        reset, layers, measure = plaqs, range(4), [plaqs]
    elif mode == FIRST_HALF:
        reset, layers, measure = inner + early, range(2), [early]
    else:
        reset, layers, measure = late, range(2, 4), [inner + late]
    if not merge:
        b.tick()
    b.append("RESET_X", [p.ancilla for p in reset if p.basis == "X"])
    b.append("RESET_Z", [p.ancilla for p in reset if p.basis == "Z"])
    for k in layers:
        b.tick()
        pairs = []
        for p in plaqs:
            for q, layer in zip(p.data, p.layers):
                if layer == k:
                    pairs.append((p.ancilla, q) if p.basis == "X" else (q, p.ancilla))
        b.pairs("CX", pairs)
    for group in measure:
        if not group:
            continue
        b.tick()
        ctx.time += 1
        xs = [p for p in group if p.basis == "X"]
        zs = [p for p in group if p.basis == "Z"]
        mx = b.append("MEASURE_X", [p.ancilla for p in xs])
        mz = b.append("MEASURE_Z", [p.ancilla for p in zs])
        for p, m in zip(xs + zs, mx + mz):
            ctx.compare((p.basis, p.support), m, (p.pos[0], p.pos[1], ctx.time))
    return ctx.fragment(start)


# ---------------------------------------------------------------------------
# deformation, sign fixup, check, undeformation

def build_deformation(l: CodeLayout, ctx: StageContext | None = None,
                      flips: Sequence[int] = ()) -> tuple[DetectorCircuit, CodeLayout]:
    """Allocate the ancilla patch and deform the mid-cycle code to a self-dual code.

    The patch starts in T_DAG|+> for odd d and T|+> for even d.  ``flips``
    (mid-cycle qubits, see :func:`midcycle_fixup`) get an X gate in the same
    layer, which sets the Z signs the transversal check needs.
    """
    if l.style != MIDCYCLE:
        raise StageError("deformation needs a mid-cycle layout")
    ctx = ctx or StageContext(qubits=l.qubits)
    start = ctx.position()
    ctx.mark(f"deform d={l.d}")
    dl = deformed_layout(l)
    b = ctx.b
    b.tick()
    patch = list(dl.ancilla_patch)
    b.append("RESET_X", patch)
    b.tick()
    b.append("T_DAG" if l.d % 2 else "T", patch)
    b.append("X", sorted(flips))
    for name, pairs in deformation_layers(dl.triples):
        b.tick()
        b.pairs(name, pairs)
    return ctx.fragment(start), dl


def z_sign_fixup(l: CodeLayout, signs: dict[frozenset, int] | None = None,
                 ctx: StageContext | None = None) -> DetectorCircuit:
    """X gates putting every Z stabilizer of ``l`` on its target sign.

    ``signs`` maps each Z support to its current eigenvalue (+1 / -1).  Targets
    are -1 for weight 2 mod 4 and +1 otherwise.  The flipped set is chosen so
    that it commutes with Z_L.
    """
    if signs is None:
        raise StageError("stabilizer signs unknown: fixup needs a unitarily prepared state")
    qs = fixup_qubits(l, signs)
    ctx = ctx or StageContext(qubits=l.qubits)
    start = ctx.position()
    if qs:
        ctx.b.tick()
        ctx.b.append("X", qs)
    return ctx.fragment(start)


def _sign_flips(l: CodeLayout, signs: dict[frozenset, int]) -> list[int]:
    want = []
    for s in l.z_plaquettes:
        if s not in signs or signs[s] not in (1, -1):
            raise StageError("missing or invalid sign for a Z stabilizer")
        target = -1 if len(s) % 4 == 2 else 1
        want.append(int(signs[s] != target))
    return want


def midcycle_fixup(l: CodeLayout, signs: dict[frozenset, int]) -> list[int]:
    """Mid-cycle qubits whose X flips (before deformation) fix the deformed Z signs.

    The deformation maps the i-th mid-cycle Z stabilizer to the i-th deformed
    one, so flipping in the mid-cycle frame needs no patch qubits.
    """
    if l.style != DEFORMED:
        raise StageError("expects the deformed layout")
    mid = l.parent
    want = _sign_flips(l, signs) + [0]
    rows = list(mid.z_plaquettes) + [mid.logical_z]
    code = list(mid.code_qubits)
    cols = [sum(1 << i for i, r in enumerate(rows) if q in r) for q in code]
    sol = gf2.solve(cols, sum(w << i for i, w in enumerate(want)))
    if sol is None:
        raise StageError("sign targets unreachable with X gates")
    return sorted(code[i] for i in gf2.bits(sol))


def fixup_qubits(l: CodeLayout, signs: dict[frozenset, int]) -> list[int]:
    rows = list(l.z_plaquettes) + [l.logical_z]
    want = _sign_flips(l, signs) + [0]
    code = list(l.code_qubits)
    cols = [sum(1 << i for i, r in enumerate(rows) if q in r) for q in code]
    rhs = sum(w << i for i, w in enumerate(want))
    sol = gf2.solve(cols, rhs)
    if sol is None:
        raise StageError("sign targets unreachable with X gates")
    return sorted(code[i] for i in gf2.bits(sol))


_CAT_PATHS = {
    "row": (lambda x, y: y, lambda x, y: x, False),
    "row-rev": (lambda x, y: y, lambda x, y: x, True),
    "col": (lambda x, y: x, lambda x, y: y, False),
    "col-rev": (lambda x, y: x, lambda x, y: y, True),
    "diag": (lambda x, y: x + y, lambda x, y: x - y, False),
    "diag-rev": (lambda x, y: x + y, lambda x, y: x - y, True),
    "anti": (lambda x, y: x - y, lambda x, y: x + y, False),
    "anti-rev": (lambda x, y: x - y, lambda x, y: x + y, True),
}


def build_hxy_catcheck(l: CodeLayout, parity: str | None = None,
                       ctx: StageContext | None = None) -> DetectorCircuit:
    """Double-checked measurement of transversal H_XY (odd d) or iZH_XY (even d).

    One cat ancilla per line of code qubits (see ``StageContext.cat_paths``)
    sweeps its line with CX gates and the ancillas are merged down to a root,
    which is measured in X and reset to |+>.  The network then runs in
    reverse and every ancilla is measured in X.  Because of the reset the
    flags re-measure the check: flag ``a`` must equal the central outcome
    when the forward image of X_a touches the root and +1 otherwise, so a
    flipped central readout disagrees with the flags.
    """
    if l.style != DEFORMED:
        raise StageError("the check needs the deformed layout")
    parity = parity or (ODD_D if l.d % 2 else EVEN_D)
    pre, post = ("T_DAG", "T") if parity == ODD_D else ("T", "T_DAG")
    ctx = ctx or StageContext(qubits=l.qubits)
    start = ctx.position()
    ctx.mark(f"check d={l.d}")
    qm, b = ctx.qubits, ctx.b
    code = list(l.code_qubits)
    group, along, flip = _CAT_PATHS[ctx.cat_paths]
    rows: dict[float, list[int]] = {}
    for q in code:
        rows.setdefault(group(*qm.coord(q)), []).append(q)
    ys = sorted(rows)
    anc = [qm((-1.0, y)) for y in ys]
    sweeps = []
    for k in range(max(len(r) for r in rows.values())):
        layer = []
        for a, y in zip(anc, ys):
            r = sorted(rows[y], key=lambda q: along(*qm.coord(q)), reverse=flip)
            if k < len(r):
                layer.append((a, r[k]))
        sweeps.append(layer)
    merges = []
    alive = list(anc)
    while len(alive) > 1:
        layer = [(alive[i], alive[i + 1]) for i in range(0, len(alive) - 1, 2)]
        merges.append(layer)
        alive = alive[::2]
    root = alive[0]
    forward = sweeps + merges
    b.tick()
    pos = ctx.position()
    b.append(pre, code)
    b.append("RESET_X", anc)
    for layer in forward:
        b.tick()
        b.pairs("CX", layer)
    b.tick()
    ctx.time += 1
    m = b.append("MEASURE_X", [root])[0]
    b.detector([m], region=ctx.region, coords=(-1.0, 0.0, ctx.time))
    b.tick()
    b.append("RESET_X", [root])
    for layer in reversed(forward):
        b.tick()
        b.pairs("CX", layer)
    b.tick()
    ctx.time += 1
    flags = b.append("MEASURE_X", anc)
    b.append(post, code)
    n = len(qm)
    gates = [CliffordGate("CX", pr) for layer in forward for pr in layer]
    for a, f in zip(anc, flags):
        img = conjugate_all(PauliString.from_sets(n, xs=[a]), gates)
        with_root = (img.x >> root) & 1
        b.detector([f, m] if with_root else [f], region=ctx.region,
                   coords=(-1.0, qm.coord(a)[1], ctx.time))
    ctx.checks.append(CheckRecord(pos, l, m, flags))
    return ctx.fragment(start)


def build_undeformation(l: CodeLayout, ctx: StageContext | None = None,
                        flips: Sequence[int] = ()) -> DetectorCircuit:
    """Reverse the deformation, rotate the patch back and measure it in X.

    After the reversed network the patch is back in its rotated product
    state, so undoing the rotation makes every patch outcome deterministic
    and each one gets a detector.  ``flips`` undoes the sign fixup of
    :func:`build_deformation`.
    """
    if l.style != DEFORMED:
        raise StageError("undeformation needs the deformed layout")
    ctx = ctx or StageContext(qubits=l.qubits)
    start = ctx.position()
    b = ctx.b
    for name, pairs in reversed(deformation_layers(l.triples)):
        b.tick()
        if name == "CXSWAP":
            b.pairs("CXSWAP", [(t, c) for c, t in pairs])
        else:
            b.pairs(name, pairs)
    b.tick()
    patch = list(l.ancilla_patch)
    b.append("T" if l.d % 2 else "T_DAG", patch)
    b.append("X", sorted(flips))
    b.tick()
    ms = b.append("MEASURE_X", patch)
    for q, m in zip(patch, ms):
        x, y = ctx.qubits.coord(q)
        b.detector([m], region=ctx.region, coords=(x, y, ctx.time))
    return ctx.fragment(start)


# ---------------------------------------------------------------------------
# growth and escape

def _pull_back_known(ctx: StageContext, new: CodeLayout, plus: Sequence[int], zero: Sequence[int],
                     gates: Sequence[CliffordGate]) -> None:
    """Re-derive predictions for the stabilizers of ``new`` after a unitary step."""
    n = len(ctx.qubits)
    rows, recs = [], []
    for key, rec in ctx.known.items():
        p = _pauli(n, *key)
        rows.append(p.x | p.z << n)
        recs.append(rec)
    for q in plus:
        rows.append(1 << q)
        recs.append(())
    for q in zero:
        rows.append(1 << (q + n))
        recs.append(())
    e = gf2.Eliminator()
    for r in rows:
        e.add(r)
    inverse = list(reversed(gates))  # CX is self-inverse
    known = {}
    for key in layout_keys(new):
        p = conjugate_all(_pauli(n, *key), inverse)
        combo = e.express(p.x | p.z << n)
        if combo is None:
            continue
        acc: set[int] = set()
        for i in gf2.bits(combo):
            acc ^= set(recs[i])
        known[key] = tuple(sorted(acc))
    ctx.known = known


def build_growth(d_from: int, d_to: int, ctx: StageContext | None = None) -> DetectorCircuit:
    """Measurement-free growth of the corner-anchored patch."""
    if d_from != 3 or d_to not in (4, 5):
        raise StageError("growth is supported from 3 to 4 or 5")
    ctx = ctx or StageContext()
    start = ctx.position()
    ctx.mark(f"grow {d_from}->{d_to}")
    g = growth_plan(d_from, d_to, ctx.qubits)
    b = ctx.b
    b.tick()
    b.append("RESET_X", g.plus)
    b.append("RESET_Z", g.zero)
    for layer in g.layers:
        b.tick()
        b.pairs("CX", layer)
    new = build_rotated_layout(d_to, ctx.qubits)
    if ctx.layout is not None:
        _pull_back_known(ctx, new, g.plus, g.zero, g.gates)
    ctx.layout = new
    return ctx.fragment(start)


def build_escape(l: CodeLayout, d_final: int, rounds: int = 3,
                 ctx: StageContext | None = None) -> DetectorCircuit:
    """Grow to ``d_final`` by fresh |+>/|0> qubits and run ``rounds`` cycles (ESCAPE detectors).

    The old patch stays in the corner: qubits below it start in |+> and
    qubits to its right in |0>, extending X_L (column 0) and Z_L (row 0).
    """
    if l.style != ROTATED:
        raise StageError("escape starts from a rotated layout")
    if d_final < l.d:
        raise StageError("d_final must not be below the current distance")
    ctx = ctx or StageContext(qubits=l.qubits, layout=l)
    start = ctx.position()
    ctx.mark(f"escape {l.d}->{d_final}")
    qm, d = ctx.qubits, l.d
    plus = [qm((x, y)) for y in range(d, d_final) for x in range(d_final)]
    zero = [qm((x, y)) for y in range(d) for x in range(d, d_final)]
    big = build_rotated_layout(d_final, qm)
    ctx.b.tick()
    # new data qubits are reset together with the first round's ancillas
    ctx.b.append("RESET_X", plus)
    ctx.b.append("RESET_Z", zero)
    _pull_back_known(ctx, big, plus, zero, [])
    ctx.layout = big
    ctx.region = ESCAPE
    for r in range(rounds):
        build_syndrome_cycle(big, FULL, ctx, merge=(r == 0))
    return ctx.fragment(start)


def build_readout(ctx: StageContext) -> DetectorCircuit:
    """Ideal MPP of every stabilizer and of Y_L; closes the observable."""
    start = ctx.position()
    l = ctx.layout
    b = ctx.b
    b.tick()
    ctx.time += 1
    keys = layout_keys(l)
    ms = b.mpp([[(basis, q) for q in sorted(s)] for basis, s in keys])
    for (basis, s), m in zip(keys, ms):
        xs = [ctx.qubits.coord(q) for q in s]
        cx = sum(c[0] for c in xs) / len(xs)
        cy = sum(c[1] for c in xs) / len(xs)
        ctx.compare((basis, s), m, (cx, cy, ctx.time))
    ly = [("Y" if q in l.logical_z else "X", q) for q in sorted(l.logical_x)]
    ly += [("Z", q) for q in sorted(l.logical_z - l.logical_x)]
    sign = _letter_sign(l, len(ctx.qubits), ly)
    m = b.mpp([ly])[0]
    b.observable([m])
    if sign != 1:
        raise StageError("Y_L letter form has unexpected sign")
    return ctx.fragment(start)


def _letter_sign(l: CodeLayout, n: int, letters) -> int:
    """Sign relating the MPP letter product to ``i X_L Z_L``."""
    p = PauliString.from_sparse(n, [(q, c) for c, q in letters])
    y = l.logical_y(n)
    return 1 if p == y else -1


# ---------------------------------------------------------------------------
# assembly

def cultivation_stage(ctx: StageContext, rounds: int, checks: int) -> None:
    """Rounds on the current rotated layout, then split cycle(s) hosting the checks."""
    l = ctx.layout
    for _ in range(rounds):
        build_syndrome_cycle(l, FULL, ctx)
    for k in range(checks):
        build_syndrome_cycle(l, FIRST_HALF, ctx)
        mid = midcycle_layout(l)
        fix = ctx.fixups.get(len(ctx.checks), ())
        _, dl = build_deformation(mid, ctx, fix)
        build_hxy_catcheck(dl, ctx=ctx)
        build_undeformation(dl, ctx, fix)
        build_syndrome_cycle(l, SECOND_HALF, ctx, merge=True)


def _skeleton(plan: StagePlan, fixups: dict[int, Sequence[int]] | None = None) -> StageContext:
    ctx = StageContext(fixups=dict(fixups or {}), cat_paths=plan.cat_paths)
    build_injection(ctx)
    for k, (d, rounds, checks) in enumerate(zip(plan.distances, plan.rounds_per_stage, plan.checks_per_stage)):
        if k:
            build_growth(plan.distances[k - 1], d, ctx)
        cultivation_stage(ctx, rounds, checks)
    if plan.d_final is not None:
        build_escape(ctx.layout, plan.d_final, plan.escape_rounds, ctx)
    ctx.mark("readout")
    build_readout(ctx)
    return ctx


@dataclass
class Assembly:
    """An assembled circuit plus the bookkeeping tests and stats need."""

    plan: StagePlan
    circuit: DetectorCircuit          # noiseless, with T gates
    context: StageContext
    flipped: list[int]                # qubits whose first reset became RESET_ONE

    @property
    def clifford(self) -> DetectorCircuit:
        return clifford_substitute(self.circuit)

    def noisy(self, noise: NoiseModel) -> DetectorCircuit:
        return apply_noise_model(self.circuit, noise)


def _candidate_resets(c: DetectorCircuit, qubits: set[int]) -> list[tuple[int, int]]:
    out = []
    for pos, ins in enumerate(c.instructions):
        if ins.name == "RESET_Z":
            out += [(pos, q) for q in ins.targets if q in qubits]
    return out


def _flip_resets(c: DetectorCircuit, flips: set[tuple[int, int]]) -> DetectorCircuit:
    out = []
    for pos, ins in enumerate(c.instructions):
        if ins.name == "RESET_Z" and any((pos, q) in flips for q in ins.targets):
            keep = tuple(q for q in ins.targets if (pos, q) not in flips)
            one = tuple(q for q in ins.targets if (pos, q) in flips)
            if keep:
                out.append(Instruction("RESET_Z", keep))
            out.append(Instruction("RESET_ONE", one))
        else:
            out.append(ins)
    return DetectorCircuit(out)


def _probe_values(c: DetectorCircuit, checks: list[CheckRecord]) -> tuple[list[int], list[tuple[int, int, int]]]:
    """Reference Z-stabilizer signs before each check, as (bits, (check, pos, support-mask))."""
    bits, probes = [], []
    for k, ch in enumerate(checks):
        t = run_tableau(c, stop=ch.position).tableau
        n = t.n
        for s in ch.layout.z_plaquettes:
            v = t.expectation(PauliString.from_sets(n, zs=s))
            if v is None:
                raise StageError("Z stabilizer not deterministic before the check")
            target = -1 if len(s) % 4 == 2 else 1
            bits.append(int(v != target))
            probes.append((k, ch.position, sum(1 << q for q in s)))
    return bits, probes


def _effects(c: DetectorCircuit, cands: list[tuple[int, int]], probes) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Detector/observable/probe flips caused by an X right after each candidate reset."""
    lanes = len(cands)
    by_pos: dict[int, list[tuple[int, int]]] = {}
    for lane, (pos, q) in enumerate(cands):
        by_pos.setdefault(pos, []).append((lane, q))
    probe_at: dict[int, list[int]] = {}
    for i, (_, pos, _) in enumerate(probes):
        probe_at.setdefault(pos, []).append(i)
    instrs = []
    hooks: dict[int, tuple[str, object]] = {}
    stops = sorted(probe_at)
    for pos, ins in enumerate(c.instructions):
        while stops and stops[0] == pos:
            hooks[len(instrs)] = ("probe", stops.pop(0))
            instrs.append(Instruction("X_ERROR", (0,), (0.0,)))
        instrs.append(ins)
        if pos in by_pos:
            hooks[len(instrs)] = ("flip", pos)
            instrs.append(Instruction("X_ERROR", (0,), (0.0,)))
    probe_flips = [0] * len(probes)

    def inject(pos, ins, sim):
        kind, key = hooks[pos]
        if kind == "flip":
            for lane, q in by_pos[key]:
                sim.fx[q, lane // 64] ^= np.uint64(1 << (lane % 64))
        else:
            for i in probe_at[key]:
                mask = probes[i][2]
                acc = np.zeros(sim.w, dtype=np.uint64)
                for q in gf2.bits(mask):
                    acc ^= sim.fx[q]
                probe_flips[i] = acc

    sim = FrameSimulator(DetectorCircuit(instrs), max(lanes, 1))
    sim.run(inject=inject)
    D, O = sim.detector_flips()
    return D, O, probe_flips


def _lane_bits(words: np.ndarray, lanes: int) -> int:
    v = 0
    for lane in range(lanes):
        if (int(words[lane // 64]) >> (lane % 64)) & 1:
            v |= 1 << lane
    return v


def solve_signs(c: DetectorCircuit, checks: list[CheckRecord], data_qubits: set[int]) -> set[tuple[int, int]]:
    """Choose RESET_Z -> RESET_ONE flips making every detector 0, every check's
    Z stabilizers sit on their targets and (if possible) the observable 0."""
    s = clifford_substitute(c)
    cands = _candidate_resets(s, data_qubits)
    ref_bits, probes = _probe_values(s, checks)
    dets, obs = reference_sample(s)
    D, O, P = _effects(s, cands, probes)
    lanes = len(cands)
    rows = [_lane_bits(D[i], lanes) for i in range(len(dets))]
    rows += [_lane_bits(p, lanes) for p in P]
    rhs = [int(v) for v in dets] + ref_bits
    orows = [_lane_bits(O[i], lanes) for i in range(len(obs))]
    for extra in (True, False):
        rr = rows + (orows if extra else [])
        bb = rhs + ([int(v) for v in obs] if extra else [])
        sol = _solve_rows(rr, bb, lanes)
        if sol is not None:
            return {cands[i] for i in gf2.bits(sol)}
    raise StageError("no reset assignment satisfies the detector and sign constraints")


def _solve_rows(rows: list[int], rhs: list[int], lanes: int) -> int | None:
    """Solve rows . v = rhs over GF(2) (rows are bitmasks over lanes)."""
    cols = [0] * lanes
    for i, r in enumerate(rows):
        for j in gf2.bits(r):
            cols[j] |= 1 << i
    target = sum(b << i for i, b in enumerate(rhs))
    return gf2.solve(cols, target)


def assemble_end_to_end(plan: StagePlan, noise: NoiseModel | None = None) -> DetectorCircuit:
    """Full circuit for ``plan``; noisy when ``noise`` is given.  Validated noiselessly."""
    a = assemble(plan)
    return a.noisy(noise) if noise is not None else a.circuit


def _check_signs(c: DetectorCircuit, checks: list[CheckRecord]) -> list[dict[frozenset, int]]:
    s = clifford_substitute(c)
    out = []
    for ch in checks:
        t = run_tableau(s, stop=ch.position).tableau
        out.append({z: t.expectation(PauliString.from_sets(t.n, zs=z)) for z in ch.layout.z_plaquettes})
    return out


def assemble(plan: StagePlan) -> Assembly:
    """Build, choose |1> initializations and sign fixups, and validate.

    Pass one fixes detector signs with reset choices alone; the Z signs seen
    by each check then decide the X fixups, and pass two solves everything
    jointly on the rebuilt circuit.
    """
    fixups: dict[int, list[int]] = {}
    for _ in range(2):
        ctx = _skeleton(plan, fixups)
        c = ctx.build()
        checks = [CheckRecord(ctx.at(ch.position), ch.layout, ch.measurement, ch.flags) for ch in ctx.checks]
        everything = set(range(len(ctx.qubits)))
        try:
            flips = solve_signs(c, checks, everything)
            break
        except StageError:
            if fixups:
                raise
            base = _flip_resets(c, solve_signs(c, [], everything))
            for k, signs in enumerate(_check_signs(base, checks)):
                fixups[k] = midcycle_fixup(checks[k].layout, signs)
    c = _flip_resets(c, flips)
    d, o = reference_sample(clifford_substitute(c))
    if d.any() or o.any():
        raise StageError("assembled circuit has nonzero reference detectors or observable")
    for k, signs in enumerate(_check_signs(c, checks)):
        if any(v != (-1 if len(z) % 4 == 2 else 1) for z, v in signs.items()):
            raise StageError(f"check {k} sees wrong Z signs")
    return Assembly(plan, c, ctx, sorted({q for _, q in flips}))


__all__ = [
    "FULL", "FIRST_HALF", "SECOND_HALF", "ODD_D", "EVEN_D", "StagePlan", "stage_plan", "StageContext",
    "StageError", "build_injection", "build_syndrome_cycle", "build_deformation", "z_sign_fixup",
    "fixup_qubits", "build_hxy_catcheck", "build_undeformation", "build_growth", "build_escape",
    "build_readout", "assemble", "assemble_end_to_end", "Assembly", "solve_signs", "layout_keys",
]
