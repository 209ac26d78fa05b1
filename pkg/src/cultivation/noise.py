"""The two circuit-level depolarizing noise models and their insertion pass."""
from __future__ import annotations

import bisect
from dataclasses import dataclass

from .circuit import (
    ANNOTATIONS,
    GATES_1Q,
    GATES_2Q,
    MEASUREMENTS,
    NOISE,
    RESETS,
    CircuitError,
    DetectorCircuit,
    Instruction,
)

UNIFORM = "UNIFORM_DEPOLARIZING"
NO_IDLE = "DEPOLARIZING_NO_IDLE"
KINDS = (UNIFORM, NO_IDLE)

_ALIASES = {"uniform": UNIFORM, "no-idle": NO_IDLE, "no_idle": NO_IDLE,
            UNIFORM: UNIFORM, NO_IDLE: NO_IDLE}


@dataclass(frozen=True)
class NoiseModel:
    kind: str
    p: float

    def __post_init__(self):
        kind = _ALIASES.get(self.kind)
        if kind is None:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if not 0.0 <= self.p < 1.0:
            raise ValueError("p must lie in [0, 1)")

    @property
    def label(self) -> str:
        return "uniform" if self.kind == UNIFORM else "no-idle"


@dataclass(frozen=True)
class ChannelPolicy:
    """Per-opcode insertion rules.

    ``gate_1q``/``gate_2q``: depolarizing strength after gates; ``reset``:
    flip probability after every reset (X_ERROR after Z-basis resets,
    Z_ERROR after X-basis ones); ``measure``: classical result flip;
    ``idle``: depolarizing strength on untouched qubits of a layer;
    ``idle_layers``: ``"gate"`` applies it only to layers holding a unitary
    gate, ``"all"`` also to reset and measurement layers.
    """

    name: str
    gate_1q: float
    gate_2q: float
    reset: float
    measure: float
    idle: float
    idle_layers: str = "all"

    def __post_init__(self):
        if self.idle_layers not in ("gate", "all"):
            raise ValueError("idle_layers must be 'gate' or 'all'")

    def covers(self, opcode: str) -> bool:
        return opcode in GATES_1Q or opcode in GATES_2Q or opcode in RESETS \
            or opcode in MEASUREMENTS or opcode in ANNOTATIONS or opcode == "MPP"


def uniform_depolarizing(p: float) -> ChannelPolicy:
    NoiseModel(UNIFORM, p)
    return ChannelPolicy(UNIFORM, p, p, p, p, p)


def depolarizing_no_idle(p: float) -> ChannelPolicy:
    NoiseModel(NO_IDLE, p)
    return ChannelPolicy(NO_IDLE, p, p, p, p, 0.0)


def policy_for(m: NoiseModel) -> ChannelPolicy:
    return uniform_depolarizing(m.p) if m.kind == UNIFORM else depolarizing_no_idle(m.p)


def _live_checker(c: DetectorCircuit):
    """Return ``live(q, pos)``: may an idle error on q after instruction pos matter?

    A qubit is dead before its first reset, when its next touch is a reset,
    and after its last touch; idle noise there provably has no effect.
    """
    events: dict[int, list[tuple[int, bool]]] = {}
    for pos, ins in enumerate(c.instructions):
        if ins.name in ANNOTATIONS:
            continue
        for q in ins.qubits():
            events.setdefault(q, []).append((pos, ins.name in RESETS))
    keys = {q: [e[0] for e in ev] for q, ev in events.items()}

    def live(q: int, pos: int) -> bool:
        ev = events.get(q)
        if not ev:
            return False
        k = bisect.bisect_right(keys[q], pos)
        if k == len(ev) or ev[k][1]:
            return False
        return any(is_reset for _, is_reset in ev[:k])

    return live


def apply_noise_model(c: DetectorCircuit, m: NoiseModel | ChannelPolicy) -> DetectorCircuit:
    """Insert noise channels into a noise-free circuit.

    Idle noise is decided per TICK-delimited layer: a live qubit that is not
    acted on in a layer containing a gate, reset or measurement (only gates
    when ``idle_layers == "gate"``) receives DEPOLARIZE1(idle) at the end of
    that layer.  The ideal ``MPP`` readout stays noise-free.
    """
    if c.is_noisy:
        raise CircuitError("circuit already contains noise channels")
    pol = m if isinstance(m, ChannelPolicy) else policy_for(m)
    live = _live_checker(c)
    touched = sorted({q for ins in c.instructions if ins.name not in ANNOTATIONS for q in ins.qubits()})
    out: list[Instruction] = []
    layer_busy: set[int] = set()
    layer_has_gate = layer_has_op = False

    def close_layer(pos: int):
        if pol.idle > 0 and (layer_has_gate or layer_has_op and pol.idle_layers == "all"):
            idle = [q for q in touched if q not in layer_busy and live(q, pos)]
            if idle:
                out.append(Instruction("DEPOLARIZE1", tuple(idle), (pol.idle,)))

    for pos, ins in enumerate(c.instructions):
        name = ins.name
        if name == "TICK":
            close_layer(pos)
            layer_busy, layer_has_gate, layer_has_op = set(), False, False
            out.append(ins)
            continue
        if name in MEASUREMENTS and pol.measure > 0:
            out.append(Instruction("FLIP_RESULT", ins.targets, (pol.measure,)))
        out.append(ins)
        if name in GATES_1Q:
            layer_has_gate = True
            layer_busy.update(ins.targets)
            if pol.gate_1q > 0:
                out.append(Instruction("DEPOLARIZE1", ins.targets, (pol.gate_1q,)))
        elif name in GATES_2Q:
            layer_has_gate = True
            layer_busy.update(ins.targets)
            if pol.gate_2q > 0:
                out.append(Instruction("DEPOLARIZE2", ins.targets, (pol.gate_2q,)))
        elif name in RESETS:
            layer_has_op = True
            layer_busy.update(ins.targets)
            if pol.reset > 0:
                ch = "Z_ERROR" if name == "RESET_X" else "X_ERROR"
                out.append(Instruction(ch, ins.targets, (pol.reset,)))
        elif name in MEASUREMENTS:
            layer_has_op = True
            layer_busy.update(ins.targets)
    close_layer(len(c.instructions))
    return DetectorCircuit(out)


__all__ = [
    "UNIFORM", "NO_IDLE", "NoiseModel", "ChannelPolicy", "uniform_depolarizing",
    "depolarizing_no_idle", "policy_for", "apply_noise_model", "NOISE",
]
