"""Certified factor and coupling threshold as delta decreases (s=1, d=1).

Writes a CSV (delta, lambda*, factor) and prints the ratio of each factor to
the GN constant.  The factor should rise towards the GN constant.
"""

import argparse
import csv

from ltlab.certifier import Calibration, sweep_delta


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--deltas", type=float, nargs="+", default=[0.3, 0.2, 0.1, 0.05, 0.025])
    ap.add_argument("--calibration", help="calibration JSON; computed in-run if absent")
    ap.add_argument("--csv", default="sweep_delta.csv")
    args = ap.parse_args()
    cal = Calibration.load(args.calibration) if args.calibration else Calibration(1.0, 1)
    rows = sweep_delta(args.deltas, 1.0, 1, cal)
    gn = cal.gn_constant
    with open(args.csv, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["delta", "lambda_star", "factor"])
        w.writerows(rows)
    print(f"{'delta':>7} {'lambda*':>12} {'factor':>9} {'factor/gn':>10}")
    for delta, lam, f in rows:
        print(f"{delta:7.3f} {lam:12.4e} {f:9.5f} {f / gn:10.4f}")
    print(f"wrote {args.csv}")


if __name__ == "__main__":
    main()
