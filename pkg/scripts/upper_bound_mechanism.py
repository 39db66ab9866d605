"""Trial states that push the energy quotient down to the one-body constants.

Two far-apart copies of the GN minimizer approach C_GN as the separation
grows; in d=3 a Hardy-GN minimizer at the origin paired with a spread-out,
distant second particle approaches C_HGN.
"""

import argparse
import warnings

import numpy as np

from ltlab.grid_core import BoxSpec, GridFunction
from ltlab.gn_solver import OptimizerParams, minimize_gn, minimize_hgn
from ltlab.nbody import QuotientParams, lt_quotient, trial_hardy_pair, trial_separated


def embed(u, box):
    out = np.zeros(box.shape)
    sl = tuple(slice((N - n) // 2, (N - n) // 2 + n) for N, n in zip(box.points, u.box.points))
    out[sl] = np.real(u.values)
    return GridFunction(box, out)


def separated(lam):
    r = minimize_gn(1.0, 1, BoxSpec.cube(1, 40.0, 2048))
    big = BoxSpec.cube(1, 80.0, 4096)
    u = embed(r.minimizer, big)
    print(f"C_GN estimate {r.value:.8f}")
    print(f"{'D':>6} {'quotient':>12} {'/C_GN':>8}")
    for D in (2.0, 5.0, 10.0, 20.0, 30.0, 40.0):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            st = trial_separated([u, u], [-D / 2, D / 2], big)
        q = lt_quotient(st, QuotientParams(1.0, lam=lam))
        print(f"{D:6.1f} {q:12.6f} {q / r.value:8.4f}")


def hardy_pair(lam):
    small = BoxSpec.cube(3, 24.0, 64)
    p = OptimizerParams(restarts=1, max_iters=800)
    hu, gv = minimize_hgn(1.0, 3, small, p), minimize_gn(1.0, 3, small, p)
    box = BoxSpec.cube(3, 48.0, 128)
    U, V = embed(hu.minimizer, box), embed(gv.minimizer, box)
    print(f"C_HGN estimate {hu.value:.5f}  (C_GN {gv.value:.5f})")
    print(f"{'ell':>6} {'|z|':>6} {'quotient':>10} {'/C_HGN':>8}")
    for ell, z in ((0.5, 14.0), (0.35, 16.0), (0.25, 16.0), (0.2, 16.0)):
        st = trial_hardy_pair(U, V, (z, 0.0, 0.0), ell)
        q = lt_quotient(st, QuotientParams(1.0, lam=lam, hardy=True))
        print(f"{ell:6.2f} {z:6.1f} {q:10.5f} {q / hu.value:8.4f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--skip-3d", action="store_true")
    args = ap.parse_args()
    separated(args.lam)
    if not args.skip_3d:
        hardy_pair(args.lam)


if __name__ == "__main__":
    main()
