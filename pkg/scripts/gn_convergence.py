"""GN constant estimates under grid refinement and box growth.

For s=1, d=1 the estimate is compared with pi^2/4; for other orders the table
shows how the estimate settles as the box grows at fixed spacing.
"""

import argparse
import math
import time

from ltlab.grid_core import BoxSpec
from ltlab.gn_solver import OptimizerParams, minimize_gn


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--s", type=float, nargs="+", default=[1.0, 0.5])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    grids = [(256, 20.0), (512, 20.0), (1024, 40.0), (2048, 40.0), (4096, 80.0)]
    print(f"{'s':>4} {'points':>7} {'box':>6} {'estimate':>14} {'rel. to pi^2/4':>15} {'sec':>6}")
    for s in args.s:
        for n, L in grids:
            t0 = time.perf_counter()
            r = minimize_gn(s, 1, BoxSpec.cube(1, L, n), OptimizerParams(seed=args.seed))
            rel = f"{r.value / (math.pi**2 / 4) - 1:+.2e}" if s == 1.0 else "-"
            print(f"{s:4.2f} {n:7d} {L:6.1f} {r.value:14.10f} {rel:>15} "
                  f"{time.perf_counter() - t0:6.2f}")


if __name__ == "__main__":
    main()
