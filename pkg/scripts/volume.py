"""Expected spacetime volume per kept state, given an end-to-end keep rate.

    python scripts/volume.py --d 3 --success 0.34
"""

import argparse

from cultivation.noise import NoiseModel
from cultivation.stages import stage_plan
from cultivation.stats import measure_volume


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--noise", default="uniform", choices=["uniform", "no-idle"])
    ap.add_argument("--p", type=float, default=1e-3)
    ap.add_argument("--success", type=float, default=None,
                    help="overall keep rate; defaults to the cultivation keep rate")
    ap.add_argument("--shots", type=int, default=1 << 18)
    a = ap.parse_args()
    r = measure_volume(stage_plan(a.d), NoiseModel(a.noise, a.p), shots=a.shots, success=a.success)
    print(f"d={a.d} {a.noise}: volume {r.volume:.0f} qubit-rounds, success {r.success:.4f}, "
          f"peak active {r.active.max() * r.ticks_per_cycle:.0f}, {r.ticks_per_cycle} ticks per round")


if __name__ == "__main__":
    main()
