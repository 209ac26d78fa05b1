"""Leading-order logical error rates of the ungrown circuits by exact enumeration.

    python scripts/fault_rates.py --d 3 4 --max-weight 5
"""

import argparse
import time

from cultivation.faults import enumerate_undetected, extract_fault_model, leading_order_rate
from cultivation.noise import NoiseModel
from cultivation.stages import assemble, stage_plan


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--d", type=int, nargs="+", default=[3])
    ap.add_argument("--noise", nargs="+", default=["uniform", "no-idle"])
    ap.add_argument("--p", type=float, default=1e-3)
    ap.add_argument("--max-weight", type=int, default=5)
    a = ap.parse_args()
    print("d,noise,faults,doubled,complete,seconds,count_per_weight")
    for d in a.d:
        circ = assemble(stage_plan(d, None))
        for kind in a.noise:
            t = time.time()
            m = extract_fault_model(circ.noisy(NoiseModel(kind, a.p)))
            r = enumerate_undetected(m, a.max_weight)
            rep = leading_order_rate(m, r.sets, r.complete)
            counts = " ".join(f"{w}:{n}" for w, n in sorted(rep.count_per_weight.items()))
            print(f"{d},{kind},{len(m)},{rep.doubled:.4g},{rep.complete},{time.time() - t:.0f},{counts}", flush=True)


if __name__ == "__main__":
    main()
