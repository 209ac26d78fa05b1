"""Command-line front end: ``cultivation {gen,enumerate,sample,sweep}``."""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, dataclass
from importlib import metadata

from .circuit import CULTIVATE
from .faults import enumerate_undetected, extract_fault_model, leading_order_rate
from .noise import NO_IDLE, UNIFORM, NoiseModel
from .stages import DEFAULT_FINAL, StageError, assemble, stage_plan
from .stats import cultivation_stats, decode_batch, gap_sweep, run_pipeline, stream_end_to_end



class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    d: int = 3
    final_d: int | None = None      # None: ungrown
    noise: str = UNIFORM
    p: float = 1e-3
    shots: int = 100_000
    seed: int = 0
    max_weight: int = 4
    gap_grid: tuple[float, ...] = tuple(float(x) for x in range(0, 101))
    out: str | None = None
    workers: int = 0

    def __post_init__(self):
        if self.d not in DEFAULT_FINAL:
            raise ConfigError(f"--d must be one of {sorted(DEFAULT_FINAL)}")
        if self.final_d is not None and self.final_d < self.d:
            raise ConfigError("--final-d must be at least --d")
        if not 0 <= self.p < 1:
            raise ConfigError("--p must lie in [0, 1)")
        if self.shots < 1 or self.max_weight < 1 or self.workers < 0:
            raise ConfigError("--shots and --max-weight must be positive")
        if self.noise not in (UNIFORM, NO_IDLE):
            raise ConfigError(f"unknown noise model {self.noise}")

    def plan(self):
        return stage_plan(self.d, self.final_d)

    def noise_model(self) -> NoiseModel:
        return NoiseModel(self.noise, self.p)

    def digest(self) -> str:
        """Hash of everything that can change results (not output path or thread count)."""
        key = {k: v for k, v in asdict(self).items() if k not in ("out", "workers")}
        return hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:16]

    def provenance(self) -> dict:
        try:
            version = metadata.version("artifact")
        except metadata.PackageNotFoundError:
            version = "unknown"
        return {"config": asdict(self), "config_hash": self.digest(), "seed": self.seed,
                "code_version": version, "noise": {"kind": self.noise, "p": self.p}}


def parse_grid(text: str) -> tuple[float, ...]:
    """``a:b:step`` (inclusive of b) or a comma list."""
    try:
        if ":" in text:
            a, b, step = (float(x) for x in text.split(":"))
            if step <= 0 or b < a:
                raise ValueError
            n = int(round((b - a) / step))
            return tuple(round(a + k * step, 10) for k in range(n + 1) if a + k * step <= b + 1e-9)
        vals = tuple(float(x) for x in text.split(",") if x.strip())
        if not vals:
            raise ValueError
        return tuple(sorted(vals))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad gap grid {text!r}")


UNGROWN = "none"
NOISE_FLAGS = {"uniform": UNIFORM, "no-idle": NO_IDLE}


def _final(text: str) -> int | str:
    if text.lower() in (UNGROWN, "0", "ungrown"):
        return UNGROWN
    return int(text)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cultivation", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in [("gen", "write the circuit"), ("enumerate", "fault-set enumeration rate report"),
                        ("sample", "Monte Carlo discard (and error at gap 0)"),
                        ("sweep", "end-to-end gap-cutoff sweep")]:
        s = sub.add_parser(name, help=help_)
        s.add_argument("--d", type=int, default=3, choices=sorted(DEFAULT_FINAL))
        s.add_argument("--final-d", type=_final, default=None,
                       help="escape distance; 'none' for the ungrown circuit")
        s.add_argument("--noise", choices=sorted(NOISE_FLAGS), default="uniform")
        s.add_argument("--p", type=float, default=1e-3)
        s.add_argument("--shots", type=int, default=100_000)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--max-weight", type=int, default=4)
        s.add_argument("--gap-grid", type=parse_grid, default=parse_grid("0:100:1"))
        s.add_argument("--out", default=None)
        s.add_argument("--workers", type=int, default=0, help="decoder threads (0: all)")
    return ap


def config_from_args(argv=None) -> RunConfig:
    ns = _parser().parse_args(argv)
    final = ns.final_d
    if final is None:
        # enumeration refers to the ungrown circuit
        final = UNGROWN if ns.command == "enumerate" else DEFAULT_FINAL[ns.d]
    return RunConfig(ns.command, ns.d, None if final == UNGROWN else final, NOISE_FLAGS[ns.noise],
                     ns.p, ns.shots, ns.seed, ns.max_weight, tuple(ns.gap_grid), ns.out, ns.workers)


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_gen(cfg: RunConfig) -> str:
    a = assemble(cfg.plan())
    c = a.noisy(cfg.noise_model()) if cfg.p > 0 else a.circuit
    return c.to_text()


def cmd_enumerate(cfg: RunConfig) -> str:
    a = assemble(stage_plan(cfg.d, None))
    m = extract_fault_model(a.noisy(cfg.noise_model()), regions=(CULTIVATE,))
    res = enumerate_undetected(m, cfg.max_weight)
    rep = leading_order_rate(m, res.sets, res.complete)
    body = json.loads(rep.to_json())
    body.update({"max_weight": cfg.max_weight, "fault_locations": len(m), "nodes": res.nodes,
                 "sets": len(res.sets), "provenance": cfg.provenance()})
    if not res.complete:
        body["note"] = f"enumeration budget exceeded; weights up to {cfg.max_weight} are partial"
    return json.dumps(body, sort_keys=True) + "\n"


def cmd_sample(cfg: RunConfig) -> str:
    b = run_pipeline(cfg.plan(), cfg.noise_model(), cfg.shots, seed=cfg.seed)
    disc, kept = cultivation_stats(b)
    cols = {"d": cfg.d, "final_d": cfg.final_d or "", "noise": cfg.noise, "p": cfg.p, "shots": b.shots,
            "discarded": disc.k, "discard_rate": disc.rate, "ci_low": disc.low, "ci_high": disc.high,
            "errors_gap0": "", "error_rate_gap0": "", "config_hash": cfg.digest(), "seed": cfg.seed}
    if cfg.final_d is not None and kept.shots:
        from .decoder import detector_graph_for
        from .stats import sampling_circuit
        g = detector_graph_for(sampling_circuit(cfg.plan(), cfg.noise_model()))
        r = decode_batch(kept, g, total_shots=b.shots)
        cols["errors_gap0"] = int(r.errors.sum())
        cols["error_rate_gap0"] = float(r.errors.mean())
    head = ",".join(cols)
    row = ",".join(repr(v) if isinstance(v, float) else str(v) for v in cols.values())
    return head + "\n" + row + "\n"


def cmd_sweep(cfg: RunConfig) -> str:
    if cfg.final_d is None:
        raise ConfigError("sweep needs an escape stage (--final-d)")
    r = stream_end_to_end(cfg.plan(), cfg.noise_model(), cfg.shots, seed=cfg.seed)
    sw = gap_sweep(r, cfg.gap_grid, meta=cfg.provenance())
    lines = [f"# config_hash={cfg.digest()} seed={cfg.seed} overflow={r.overflow}"]
    return "\n".join(lines) + "\n" + sw.to_csv()


COMMANDS = {"gen": cmd_gen, "enumerate": cmd_enumerate, "sample": cmd_sample, "sweep": cmd_sweep}


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
        if cfg.workers:
            import numba
            numba.set_num_threads(min(cfg.workers, numba.config.NUMBA_NUM_THREADS))
        cfg.plan()  # validates against the stage-plan rules
    except SystemExit as e:
        return int(e.code or 0)
    except (ConfigError, StageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        _emit(cfg, COMMANDS[cfg.command](cfg))
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
