"""Cultivation-only discard rates (ungrown circuits) with 95% intervals.

    python scripts/discard_table.py --shots 1e5
"""

import argparse

from cultivation.noise import NoiseModel
from cultivation.stages import stage_plan
from cultivation.stats import cultivation_stats, run_pipeline


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--shots", type=float, default=1e5)
    ap.add_argument("--p", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    print("noise,d,discard,ci_low,ci_high")
    for kind in ("uniform", "no-idle"):
        for d in (3, 4, 5):
            b = run_pipeline(stage_plan(d, None), NoiseModel(kind, a.p), int(a.shots), seed=a.seed + d)
            r, _ = cultivation_stats(b)
            print(f"{kind},{d},{r.rate:.4f},{r.low:.4f},{r.high:.4f}", flush=True)


if __name__ == "__main__":
    main()
