"""Detector-circuit IR and its line-oriented text format.

A circuit is a flat list of :class:`Instruction`; detectors and observables
live in the same stream (as in the text format) and refer backwards to
measurement records with negative offsets.  ``DetectorCircuit.detectors``
resolves them to absolute measurement indices.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .pauli import SINGLE_QUBIT_GATES, TWO_QUBIT_GATES

CULTIVATE = "CULTIVATE"
ESCAPE = "ESCAPE"
REGIONS = (CULTIVATE, ESCAPE)

NON_CLIFFORD = frozenset({"T", "T_DAG"})
GATES_1Q = SINGLE_QUBIT_GATES | NON_CLIFFORD
GATES_2Q = TWO_QUBIT_GATES
RESETS = frozenset({"RESET_Z", "RESET_X", "RESET_ONE"})
MEASUREMENTS = frozenset({"MEASURE_Z", "MEASURE_X"})
NOISE_1Q = frozenset({"DEPOLARIZE1", "X_ERROR", "Z_ERROR", "FLIP_RESULT"})
NOISE_2Q = frozenset({"DEPOLARIZE2"})
NOISE = NOISE_1Q | NOISE_2Q
ANNOTATIONS = frozenset({"DETECTOR", "OBSERVABLE", "QUBIT_COORDS", "TICK"})
# ideal (noise-free) Pauli-product measurement, used for terminal readout
IDEAL = frozenset({"MPP"})

KNOWN = GATES_1Q | GATES_2Q | RESETS | MEASUREMENTS | NOISE | ANNOTATIONS | IDEAL


class CircuitError(ValueError):
    """Malformed circuit text or structure; ``line`` is 1-based when known."""

    def __init__(self, msg: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {msg}" if line is not None else msg)


@dataclass(frozen=True)
class Instruction:
    name: str
    targets: tuple[int, ...] = ()
    args: tuple[float, ...] = ()
    # MPP: one tuple of (basis, qubit) per measured product
    products: tuple[tuple[tuple[str, int], ...], ...] = ()
    region: str | None = None  # DETECTOR only

    @property
    def num_measurements(self) -> int:
        if self.name in MEASUREMENTS:
            return len(self.targets)
        if self.name == "MPP":
            return len(self.products)
        return 0

    def qubits(self) -> tuple[int, ...]:
        if self.name in ("DETECTOR", "OBSERVABLE", "TICK"):
            return ()
        if self.name == "QUBIT_COORDS":
            return self.targets
        if self.name == "MPP":
            return tuple(q for prod in self.products for _, q in prod)
        return self.targets


@dataclass(frozen=True)
class Detector:
    measurements: tuple[int, ...]  # absolute measurement indices
    region: str
    coords: tuple[float, ...] = ()


@dataclass
class DetectorCircuit:
    instructions: list[Instruction] = field(default_factory=list)

    def __post_init__(self):
        self._resolve()

    # -- derived structure --------------------------------------------
    def _resolve(self) -> None:
        m = 0
        dets: list[Detector] = []
        obs: dict[int, set[int]] = {}
        coords: dict[int, tuple[float, ...]] = {}
        nq = 0
        det_pos: list[int] = []
        for pos, ins in enumerate(self.instructions):
            if ins.name == "DETECTOR" or ins.name == "OBSERVABLE":
                offs = ins.targets if ins.name == "DETECTOR" else ins.targets[1:]
                absolute = []
                for o in offs:
                    if o >= 0 or m + o < 0:
                        raise CircuitError(f"record offset rec[{o}] out of range at instruction {pos}")
                    absolute.append(m + o)
                if ins.name == "DETECTOR":
                    dets.append(Detector(tuple(sorted(absolute)), ins.region or CULTIVATE, ins.args))
                    det_pos.append(pos)
                else:
                    s = obs.setdefault(ins.targets[0], set())
                    s.symmetric_difference_update(absolute)
            elif ins.name == "QUBIT_COORDS":
                coords[ins.targets[0]] = ins.args
            m += ins.num_measurements
            for q in ins.qubits():
                nq = max(nq, q + 1)
        self._num_measurements = m
        self._detectors = dets
        self._detector_positions = det_pos
        k = max(obs) + 1 if obs else 0
        self._observables = [tuple(sorted(obs.get(i, ()))) for i in range(k)]
        self._coords = coords
        self._num_qubits = nq

    @property
    def num_measurements(self) -> int:
        return self._num_measurements

    @property
    def num_qubits(self) -> int:
        return self._num_qubits

    @property
    def detectors(self) -> list[Detector]:
        return self._detectors

    @property
    def num_detectors(self) -> int:
        return len(self._detectors)

    @property
    def observables(self) -> list[tuple[int, ...]]:
        return self._observables

    @property
    def num_observables(self) -> int:
        return len(self._observables)

    @property
    def qubit_coords(self) -> dict[int, tuple[float, ...]]:
        return self._coords

    def detector_indices(self, regions: Iterable[str]) -> list[int]:
        regions = set(regions)
        return [i for i, d in enumerate(self._detectors) if d.region in regions]

    @property
    def is_clifford(self) -> bool:
        return not any(ins.name in NON_CLIFFORD for ins in self.instructions)

    @property
    def is_noisy(self) -> bool:
        return any(ins.name in NOISE for ins in self.instructions)

    def count(self, name: str) -> int:
        return sum(len(ins.targets) if ins.name not in ("TICK",) else 1
                   for ins in self.instructions if ins.name == name)

    def __len__(self) -> int:
        return len(self.instructions)

    def __add__(self, other: "DetectorCircuit") -> "DetectorCircuit":
        return DetectorCircuit(list(self.instructions) + list(other.instructions))

    def __eq__(self, other) -> bool:
        return isinstance(other, DetectorCircuit) and self.instructions == other.instructions

    def without_noise(self) -> "DetectorCircuit":
        return DetectorCircuit([i for i in self.instructions if i.name not in NOISE])

    def layers(self) -> list[list[int]]:
        """Instruction positions grouped into TICK-delimited layers."""
        out: list[list[int]] = [[]]
        for pos, ins in enumerate(self.instructions):
            if ins.name == "TICK":
                out.append([])
            else:
                out[-1].append(pos)
        return out

    # -- text ---------------------------------------------------------
    def to_text(self) -> str:
        return serialize_text(self)

    @classmethod
    def from_text(cls, s: str) -> "DetectorCircuit":
        return parse_text(s)

    def __str__(self) -> str:
        return self.to_text()


# ---------------------------------------------------------------------------
# text format

def _fmt_num(v: float) -> str:
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def format_instruction(ins: Instruction) -> str:
    name = ins.name
    if name == "TICK":
        return "TICK"
    if name == "QUBIT_COORDS":
        return "QUBIT_COORDS " + " ".join([str(ins.targets[0])] + [_fmt_num(a) for a in ins.args])
    if name == "DETECTOR":
        head = f"DETECTOR[{ins.region or CULTIVATE}]"
        if ins.args:
            head += "(" + ", ".join(_fmt_num(a) for a in ins.args) + ")"
        return " ".join([head] + [f"rec[{o}]" for o in ins.targets])
    if name == "OBSERVABLE":
        return " ".join([f"OBSERVABLE {ins.targets[0]}"] + [f"rec[{o}]" for o in ins.targets[1:]])
    if name == "MPP":
        return "MPP " + " ".join("*".join(f"{b}{q}" for b, q in prod) for prod in ins.products)
    head = name
    if ins.args:
        head += "(" + ", ".join(_fmt_num(a) for a in ins.args) + ")"
    return " ".join([head] + [str(t) for t in ins.targets])


def serialize_text(c: DetectorCircuit) -> str:
    return "".join(format_instruction(ins) + "\n" for ins in c.instructions)


_HEAD = re.compile(r"^([A-Z_0-9]+)(?:\[([A-Z]+)\])?(?:\(([^)]*)\))?$")
_REC = re.compile(r"^rec\[(-\d+)\]$")
_PROD = re.compile(r"^([XYZ])(\d+)$")


def parse_text(s: str) -> DetectorCircuit:
    """Parse circuit text; errors carry 1-based line numbers."""
    instrs: list[Instruction] = []
    line_of: list[int] = []
    for lineno, raw in enumerate(s.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        # coordinates may contain spaces after commas: re-join the head
        head = parts[0]
        rest = parts[1:]
        if "(" in head and ")" not in head:
            while rest and ")" not in head:
                head += rest.pop(0)
        m = _HEAD.match(head.replace(" ", ""))
        if not m:
            raise CircuitError(f"cannot parse {parts[0]!r}", lineno)
        name, region, argtext = m.group(1), m.group(2), m.group(3)
        if name not in KNOWN:
            raise CircuitError(f"unknown opcode {name!r}", lineno)
        args: tuple[float, ...] = ()
        if argtext is not None and argtext.strip():
            try:
                args = tuple(float(a) for a in argtext.split(","))
            except ValueError:
                raise CircuitError(f"bad arguments {argtext!r}", lineno) from None
        try:
            ins = _build(name, region, args, rest)
        except CircuitError as e:
            raise CircuitError(str(e), lineno) from None
        instrs.append(ins)
        line_of.append(lineno)
    # validate record references with line numbers
    m_count = 0
    for ins, lineno in zip(instrs, line_of):
        if ins.name in ("DETECTOR", "OBSERVABLE"):
            offs = ins.targets if ins.name == "DETECTOR" else ins.targets[1:]
            for o in offs:
                if m_count + o < 0:
                    raise CircuitError(f"rec[{o}] refers before the first measurement", lineno)
        m_count += ins.num_measurements
    return DetectorCircuit(instrs)


def _build(name: str, region: str | None, args: tuple[float, ...], rest: list[str]) -> Instruction:
    if region is not None and name != "DETECTOR":
        raise CircuitError(f"region tag only allowed on DETECTOR, not {name}")
    if name == "TICK":
        if rest or args:
            raise CircuitError("TICK takes no targets")
        return Instruction("TICK")
    if name == "DETECTOR":
        if region is not None and region not in REGIONS:
            raise CircuitError(f"unknown region {region!r}")
        return Instruction("DETECTOR", tuple(_rec(t) for t in rest), args, region=region or CULTIVATE)
    if name == "OBSERVABLE":
        if not rest:
            raise CircuitError("OBSERVABLE needs an index")
        return Instruction("OBSERVABLE", (int(rest[0]),) + tuple(_rec(t) for t in rest[1:]))
    if name == "QUBIT_COORDS":
        vals = [float(v) for v in rest[1:]]
        return Instruction("QUBIT_COORDS", (int(rest[0]),), tuple(vals))
    if name == "MPP":
        prods = []
        for tok in rest:
            prod = []
            for piece in tok.split("*"):
                pm = _PROD.match(piece)
                if not pm:
                    raise CircuitError(f"bad Pauli product term {piece!r}")
                prod.append((pm.group(1), int(pm.group(2))))
            prods.append(tuple(prod))
        return Instruction("MPP", products=tuple(prods))
    try:
        targets = tuple(int(t) for t in rest)
    except ValueError:
        raise CircuitError(f"bad targets {' '.join(rest)!r}") from None
    return make_instruction(name, targets, args)


def _rec(tok: str) -> int:
    m = _REC.match(tok)
    if not m:
        raise CircuitError(f"expected rec[-k], got {tok!r}")
    return int(m.group(1))


def make_instruction(name: str, targets: Sequence[int], args: Sequence[float] = ()) -> Instruction:
    targets = tuple(int(t) for t in targets)
    args = tuple(float(a) for a in args)
    if name in NOISE:
        if len(args) != 1 or not 0.0 <= args[0] <= 1.0:
            raise CircuitError(f"{name} needs one probability in [0, 1]")
    elif args:
        raise CircuitError(f"{name} takes no arguments")
    if name in GATES_2Q or name in NOISE_2Q:
        if len(targets) % 2:
            raise CircuitError(f"{name} needs an even number of targets")
        for a, b in zip(targets[::2], targets[1::2]):
            if a == b:
                raise CircuitError(f"{name} pair with repeated qubit {a}")
    if any(t < 0 for t in targets):
        raise CircuitError("negative qubit index")
    return Instruction(name, targets, args)


# ---------------------------------------------------------------------------
# builder used by the stage constructors

class CircuitBuilder:
    """Append-only helper that tracks measurement indices for detectors."""

    def __init__(self):
        self.instructions: list[Instruction] = []
        self.num_measurements = 0

    def append(self, name: str, targets: Sequence[int] = (), args: Sequence[float] = ()) -> list[int]:
        targets = list(targets)
        if not targets and name != "TICK":
            return []
        ins = make_instruction(name, targets, args)
        self.instructions.append(ins)
        start = self.num_measurements
        self.num_measurements += ins.num_measurements
        return list(range(start, self.num_measurements))

    def pairs(self, name: str, pairs: Iterable[tuple[int, int]]) -> None:
        flat = [q for pr in pairs for q in pr]
        self.append(name, flat)

    def mpp(self, products: Sequence[Sequence[tuple[str, int]]]) -> list[int]:
        prods = tuple(tuple(p) for p in products if len(p))
        if not prods:
            return []
        ins = Instruction("MPP", products=prods)
        self.instructions.append(ins)
        start = self.num_measurements
        self.num_measurements += len(prods)
        return list(range(start, self.num_measurements))

    def tick(self) -> None:
        if self.instructions and self.instructions[-1].name != "TICK":
            self.instructions.append(Instruction("TICK"))

    def detector(self, measurements: Iterable[int], region: str = CULTIVATE,
                 coords: Sequence[float] = ()) -> None:
        ms = sorted(set(measurements))
        offs = tuple(m - self.num_measurements for m in ms)
        self.instructions.append(Instruction("DETECTOR", offs, tuple(float(c) for c in coords), region=region))

    def observable(self, measurements: Iterable[int], index: int = 0) -> None:
        ms = sorted(measurements)
        offs = tuple(m - self.num_measurements for m in ms)
        self.instructions.append(Instruction("OBSERVABLE", (index,) + offs))

    def coords(self, q: int, xy: Sequence[float]) -> None:
        self.instructions.append(Instruction("QUBIT_COORDS", (q,), tuple(float(v) for v in xy)))

    def extend(self, other: "CircuitBuilder | DetectorCircuit") -> None:
        for ins in other.instructions:
            self.instructions.append(ins)
            self.num_measurements += ins.num_measurements

    def build(self) -> DetectorCircuit:
        while self.instructions and self.instructions[-1].name == "TICK":
            self.instructions.pop()
        return DetectorCircuit(list(self.instructions))


# ---------------------------------------------------------------------------

_SUBSTITUTE = {"T": "S", "T_DAG": "S_DAG"}


def clifford_substitute(c: DetectorCircuit) -> DetectorCircuit:
    """Replace every T by S and T_DAG by S_DAG; everything else untouched."""
    out = []
    for ins in c.instructions:
        if ins.name in _SUBSTITUTE:
            out.append(Instruction(_SUBSTITUTE[ins.name], ins.targets, ins.args))
        else:
            out.append(ins)
    return DetectorCircuit(out)
