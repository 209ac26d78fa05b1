"""Monte Carlo orchestration: sampling, postselection, decoding, gap sweeps, volume."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import beta

from .circuit import ANNOTATIONS, CULTIVATE, MEASUREMENTS, NOISE, RESETS, DetectorCircuit, clifford_substitute
from .decoder import DetectorGraph, decode_syndromes, detector_graph_for
from .frame import ShotBatch, frame_sample
from .noise import NoiseModel
from .stages import StagePlan, assemble

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RateEstimate:
    k: int
    n: int
    low: float
    high: float

    @property
    def rate(self) -> float:
        return self.k / self.n if self.n else float("nan")


def clopper_pearson(k: int, n: int, alpha: float = 0.05) -> RateEstimate:
    """Exact binomial interval for ``k`` successes out of ``n``."""
    if n <= 0:
        return RateEstimate(k, n, 0.0, 1.0)
    lo = 0.0 if k == 0 else float(beta.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta.ppf(1 - alpha / 2, k + 1, n - k))
    return RateEstimate(k, n, lo, hi)


# ---------------------------------------------------------------------------
# sampling

def sampling_circuit(plan: StagePlan, noise: NoiseModel) -> DetectorCircuit:
    """Noisy, Clifford-substituted circuit for ``plan``."""
    return clifford_substitute(assemble(plan).noisy(noise))


def run_pipeline(plan: StagePlan, noise: NoiseModel, shots: int, seed: int = 0,
                 batch: int = 1 << 16) -> ShotBatch:
    return frame_sample(sampling_circuit(plan, noise), shots, seed=seed, batch=batch)


def cultivation_stats(b: ShotBatch) -> tuple[RateEstimate, ShotBatch]:
    """Discard iff any CULTIVATE detector fired; returns the discard estimate and kept shots."""
    if b.shots == 0:
        raise ValueError("empty batch")
    fired = b.any_fired(CULTIVATE)
    return clopper_pearson(int(fired.sum()), b.shots), b.select(~fired)


@dataclass
class DecodeResults:
    """Per kept shot: gap (decibans), predicted and actual observable, error flag."""

    gaps: np.ndarray
    errors: np.ndarray
    total_shots: int            # shots before cultivation postselection
    overflow: int = 0

    def __len__(self) -> int:
        return self.gaps.size

    @staticmethod
    def concatenate(parts: Sequence["DecodeResults"]) -> "DecodeResults":
        return DecodeResults(np.concatenate([p.gaps for p in parts]),
                             np.concatenate([p.errors for p in parts]),
                             sum(p.total_shots for p in parts), sum(p.overflow for p in parts))


def decode_batch(kept: ShotBatch, g: DetectorGraph, total_shots: int | None = None) -> DecodeResults:
    if kept.regions and len(kept.regions) <= max(g.detector_ids, default=-1):
        raise ValueError("graph does not match batch detectors")
    D = kept.unpack_detectors()[list(g.detector_ids)].astype(bool)
    obs = kept.unpack_observables()[0].astype(np.uint8)
    r = decode_syndromes(g, D)
    return DecodeResults(r.gap, r.predicted != obs, kept.shots if total_shots is None else total_shots,
                         int(r.overflow.sum()))


def stream_end_to_end(plan: StagePlan, noise: NoiseModel, shots: int, seed: int = 0,
                      chunk: int = 1 << 20,
                      on_chunk: Callable[[int, DecodeResults], None] | None = None,
                      skip: Iterable[int] = ()) -> DecodeResults:
    """Sample and decode ``shots`` in chunks with independent seed streams.

    Chunk ``k`` always uses the seed stream ``(seed, k)``, so a run can be
    resumed by passing finished chunk indices in ``skip`` and merging.
    """
    c = sampling_circuit(plan, noise)
    g = detector_graph_for(c)
    skip = set(skip)
    parts = []
    n = (shots + chunk - 1) // chunk
    for k in range(n):
        size = min(chunk, shots - k * chunk)
        if k in skip:
            continue
        s = int(np.random.SeedSequence([seed, k]).generate_state(1)[0])
        b = frame_sample(c, size, seed=s)
        _, kept = cultivation_stats(b)
        r = decode_batch(kept, g, total_shots=size)
        if on_chunk is not None:
            on_chunk(k, r)
        parts.append(r)
    if not parts:
        return DecodeResults(np.zeros(0), np.zeros(0, dtype=bool), 0)
    return DecodeResults.concatenate(parts)


# ---------------------------------------------------------------------------
# gap sweeps

@dataclass
class SweepRow:
    cutoff_deciban: float
    kept_shots: int
    discarded: int
    errors: int
    discard_rate: float
    error_rate_raw: float
    error_rate_doubled: float
    ci_low: float
    ci_high: float

    @property
    def ci_low_doubled(self) -> float:
        return 2 * self.ci_low

    @property
    def ci_high_doubled(self) -> float:
        return 2 * self.ci_high


@dataclass
class GapSweep:
    rows: list[SweepRow]
    total_shots: int
    meta: dict = field(default_factory=dict)

    def check(self) -> None:
        """Raise if the bookkeeping invariants are violated."""
        for a, b in zip(self.rows, self.rows[1:]):
            if b.cutoff_deciban < a.cutoff_deciban or b.discard_rate < a.discard_rate:
                raise AssertionError("discard rate must not decrease with the cutoff")
        for r in self.rows:
            if r.kept_shots + r.discarded != self.total_shots:
                raise AssertionError("kept + discarded != total")

    def to_csv(self) -> str:
        buf = io.StringIO()
        names = list(SweepRow.__dataclass_fields__)
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(names)
        for r in self.rows:
            w.writerow([repr(getattr(r, k)) if isinstance(getattr(r, k), float) else getattr(r, k)
                        for k in names])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"schema": SCHEMA_VERSION, "total_shots": self.total_shots,
                           "meta": self.meta, "rows": [asdict(r) for r in self.rows]}, sort_keys=True)


def gap_sweep(results: DecodeResults, cutoffs: Sequence[float], meta: dict | None = None) -> GapSweep:
    """One row per cutoff; a shot is kept when its gap is at least the cutoff."""
    order = np.argsort(results.gaps, kind="stable")
    g = results.gaps[order]
    err_cum = np.concatenate([[0], np.cumsum(results.errors[order])])
    total_err = int(err_cum[-1])
    rows = []
    for cut in sorted(cutoffs):
        first = int(np.searchsorted(g, cut, side="left"))
        kept = g.size - first
        errors = total_err - int(err_cum[first])
        ci = clopper_pearson(errors, kept)
        raw = errors / kept if kept else float("nan")
        rows.append(SweepRow(float(cut), kept, results.total_shots - kept, errors,
                             (results.total_shots - kept) / results.total_shots, raw, 2 * raw,
                             ci.low, ci.high))
    return GapSweep(rows, results.total_shots, dict(meta or {}))


def cutoff_for_discard(results: DecodeResults, discard: float) -> float:
    """Smallest observed gap cutoff whose total discard rate reaches ``discard``."""
    keep = int(np.floor((1 - discard) * results.total_shots))
    g = np.sort(results.gaps)[::-1]
    if keep >= g.size:
        return 0.0
    if keep <= 0:
        return float("inf")
    # g[keep] is the (keep+1)-th largest gap; anything at or below it keeps too many
    return float(np.nextafter(g[keep], np.inf))


# ---------------------------------------------------------------------------
# spacetime volume

@dataclass
class VolumeReport:
    active: np.ndarray
    survival: np.ndarray
    success: float
    volume: float
    ticks_per_cycle: int = 1

    def to_json(self) -> str:
        return json.dumps({"schema": SCHEMA_VERSION, "volume": self.volume, "success": self.success,
                           "ticks_per_cycle": self.ticks_per_cycle,
                           "active": self.active.tolist(), "survival": self.survival.tolist()})


def spacetime_volume(active: Sequence[float], survival: Sequence[float],
                     success: float | None = None) -> VolumeReport:
    """Expected qubit-cycles per success: sum(active * survival) / success.

    ``success`` defaults to the last survival value.
    """
    a = np.asarray(active, dtype=float)
    s = np.asarray(survival, dtype=float)
    if a.shape != s.shape:
        raise ValueError(f"curve lengths differ: {a.shape} vs {s.shape}")
    ok = float(s[-1]) if success is None else float(success)
    if ok <= 0:
        raise ValueError("overall success rate is zero")
    return VolumeReport(a, s, ok, float((a * s).sum() / ok))


def tick_layers(c: DetectorCircuit) -> list[range]:
    """Instruction index ranges of TICK-delimited layers that contain operations.

    The ideal MPP readout is not part of the physical protocol and is dropped.
    """
    out, start = [], 0
    ins = c.instructions
    for i in range(len(ins) + 1):
        if i == len(ins) or ins[i].name == "TICK":
            if any(x.name not in ANNOTATIONS and x.name != "MPP" and x.name not in NOISE for x in ins[start:i]):
                out.append(range(start, i))
            start = i + 1
    return out


def active_qubits(c: DetectorCircuit, layers: list[range]) -> np.ndarray:
    """Per layer, qubits between a reset and the measurement that retires them."""
    live: set[int] = set()
    out = np.zeros(len(layers), dtype=np.int64)
    for k, lay in enumerate(layers):
        ended = set()
        for i in lay:
            x = c.instructions[i]
            if x.name in RESETS:
                live.update(x.qubits())
            elif x.name in MEASUREMENTS:
                ended.update(x.qubits())
        out[k] = len(live | ended)
        live -= ended
    return out


def survival_curve(c: DetectorCircuit, b: ShotBatch, layers: list[range]) -> np.ndarray:
    """Fraction of shots still running in each layer.

    A shot stops after the layer that completes its first fired CULTIVATE
    detector.  The final gap cut only enters through the success rate.
    """
    meas_layer = []
    for k, lay in enumerate(layers):
        for i in lay:
            meas_layer += [k] * c.instructions[i].num_measurements
    cult = c.detector_indices([CULTIVATE])
    known = np.array([max(meas_layer[m] for m in c.detectors[i].measurements) for i in cult])
    D = b.unpack_detectors()[cult].astype(bool)
    stop = np.full(b.shots, len(layers), dtype=np.int64)
    for j in range(D.shape[0]):
        hit = D[j]
        stop[hit] = np.minimum(stop[hit], known[j] + 1)
    layer_idx = np.arange(len(layers))
    return (stop[None, :] > layer_idx[:, None]).mean(axis=1)


def full_round_ticks(a) -> int:
    """TICK layers in the last unmerged full syndrome round of an assembly."""
    nq = len(a.context.qubits)
    ms = a.context.markers + [(len(a.circuit.instructions) - nq, "end")]
    best = 0
    for (p, label), (q, _) in zip(ms, ms[1:]):
        if label.startswith("cycle FULL"):
            best = sum(1 for x in a.circuit.instructions[p + nq:q + nq] if x.name == "TICK")
    if best == 0:
        raise ValueError("assembly has no full syndrome round")
    return best


def measure_volume(plan: StagePlan, noise: NoiseModel, shots: int = 1 << 16, seed: int = 0,
                   success: float | None = None) -> VolumeReport:
    """Spacetime volume with one cycle = the TICK depth of a full syndrome round.

    Each TICK layer counts as ``1 / ticks_per_cycle`` of a cycle.  ``success``
    is the overall keep rate (end-to-end, after the gap cut); it defaults to
    the cultivation keep rate.
    """
    a = assemble(plan)
    c = clifford_substitute(a.noisy(noise))
    layers = tick_layers(c)
    b = frame_sample(c, shots, seed=seed)
    act = active_qubits(c, layers)
    surv = survival_curve(c, b, layers)
    k = full_round_ticks(a)
    r = spacetime_volume(act / k, surv, success)
    r.ticks_per_cycle = k
    return r


__all__ = [
    "SCHEMA_VERSION", "RateEstimate", "clopper_pearson", "sampling_circuit", "run_pipeline",
    "cultivation_stats", "DecodeResults", "decode_batch", "stream_end_to_end", "SweepRow", "GapSweep",
    "gap_sweep", "cutoff_for_discard", "VolumeReport", "spacetime_volume", "tick_layers",
    "active_qubits", "survival_curve", "full_round_ticks", "measure_volume",
]
