"""Resumable end-to-end run: sample, postselect, decode, sweep the gap cutoff.

Each chunk is saved as ``chunk_<k>.npz`` under ``--dir``; rerunning skips
finished chunks and merges everything into ``sweep.csv``.

    python scripts/end_to_end.py --d 3 --shots 3e7 --dir runs/d3
"""

import argparse
import json
import pathlib

import numpy as np

from cultivation.noise import NoiseModel
from cultivation.stages import stage_plan
from cultivation.stats import DecodeResults, cutoff_for_discard, gap_sweep, stream_end_to_end


def _load(path: pathlib.Path) -> DecodeResults:
    z = np.load(path)
    return DecodeResults(z["gaps"], z["errors"], int(z["total"]), int(z["overflow"]))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--noise", default="uniform", choices=["uniform", "no-idle"])
    ap.add_argument("--p", type=float, default=1e-3)
    ap.add_argument("--shots", type=float, default=1e7)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--chunk", type=int, default=1 << 20)
    ap.add_argument("--dir", type=pathlib.Path, required=True)
    ap.add_argument("--discard", type=float, nargs="*", default=[0.5, 0.6, 0.66, 0.7, 0.8, 0.9])
    a = ap.parse_args()
    a.dir.mkdir(parents=True, exist_ok=True)
    meta = {"d": a.d, "noise": a.noise, "p": a.p, "shots": int(a.shots), "seed": a.seed, "chunk": a.chunk}
    mfile = a.dir / "meta.json"
    if mfile.exists() and json.loads(mfile.read_text()) != meta:
        raise SystemExit(f"{a.dir} holds a run with different settings")
    mfile.write_text(json.dumps(meta, sort_keys=True))

    done = {int(p.stem.split("_")[1]) for p in a.dir.glob("chunk_*.npz")}

    def save(k, r):
        np.savez(a.dir / f"chunk_{k}.npz", gaps=r.gaps, errors=r.errors, total=r.total_shots, overflow=r.overflow)
        print(f"chunk {k}: kept {len(r)} of {r.total_shots}, errors {int(r.errors.sum())}", flush=True)

    stream_end_to_end(stage_plan(a.d), NoiseModel(a.noise, a.p), int(a.shots), seed=a.seed,
                      chunk=a.chunk, on_chunk=save, skip=done)
    r = DecodeResults.concatenate([_load(p) for p in sorted(a.dir.glob("chunk_*.npz"))])
    cuts = sorted({cutoff_for_discard(r, x) for x in a.discard} | set(np.arange(0.0, 101.0, 5.0)))
    sweep = gap_sweep(r, [c for c in cuts if np.isfinite(c)], meta)
    sweep.check()
    (a.dir / "sweep.csv").write_text(sweep.to_csv())
    for row in sweep.rows:
        print(f"cut {row.cutoff_deciban:6.1f} dB  discard {row.discard_rate:.4f}  errors {row.errors:4d}  "
              f"doubled {row.error_rate_doubled:.3g}")
    print(f"overflow shots (gap 0): {r.overflow}")


if __name__ == "__main__":
    main()
