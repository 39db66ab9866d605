"""Acceptance criteria 1-10; each test records one PASS/FAIL line."""

import json
import math
import time
import warnings

import numpy as np
import pytest

from ltlab import io
from ltlab.analytic_constants import hardy_constant
from ltlab.certifier import Calibration, CertifyParams, certify
from ltlab.cli import main
from ltlab.covering import CoveringParams, decompose, resolution_level, verify
from ltlab.exclusion import build_ball_families, exclusion_lower_bound
from ltlab.grid_core import (
    BoundaryDecayWarning,
    BoxSpec,
    DomainMask,
    GridFunction,
    SeminormSpec,
    frac_laplacian_apply,
    gaussian,
    kinetic_form,
    seminorm_domain,
    seminorm_global,
)
from ltlab.gn_solver import OptimizerParams, estimate_local_constant, minimize_gn
from ltlab.nbody import (
    QuotientParams,
    bosonic_floor,
    density,
    dilate,
    interaction_energy,
    lt_quotient,
    random_state,
    trial_hardy_pair,
    trial_separated,
)

GN = math.pi**2 / 4


def test_criterion_1_gn_oracle(tmp_path, capsys, acceptance):
    t0 = time.perf_counter()
    code = main(["gn", "--s", "1", "--d", "1", "--points", "2048", "--box", "40",
                 "--threads", "1", "--out", str(tmp_path)])
    dt = time.perf_counter() - t0
    capsys.readouterr()
    value = json.loads((tmp_path / "gn.report.json").read_text())["result"]["value"]
    rel = abs(value / GN - 1)
    ok = code == 0 and rel < 0.01 and dt < 60
    acceptance(1, ok, f"gn={value:.9f} rel.err={rel:.1e} time={dt:.1f}s")
    assert ok


def test_criterion_2_hardy_constants(d3_minimizers, acceptance):
    e1 = abs(hardy_constant(1.0, 3).value - 0.25)
    e2 = abs(hardy_constant(0.5, 3).value - 2 / math.pi)
    pairs = {s: (d3_minimizers[("hgn", s)].value, d3_minimizers[("gn", s)].value)
             for s in (0.5, 1.0)}
    # solver tolerance: the descent stops at 1e-11 relative change
    order = all(h <= g * (1 + 1e-8) for h, g in pairs.values())
    ok = e1 < 1e-10 and e2 < 1e-10 and order
    acceptance(2, ok, f"|C(1,3)-1/4|={e1:.1e} |C(1/2,3)-2/pi|={e2:.1e} "
               + " ".join(f"s={s}: hgn={h:.4f}<=gn={g:.4f}" for s, (h, g) in pairs.items()))
    assert ok


def test_criterion_3_exclusion_soundness(acceptance):
    rng = np.random.default_rng(2024)
    violations, worst, count = 0, math.inf, 0
    for N, n, cnt in ((2, 64, 200), (3, 32, 50)):
        box = BoxSpec(1, 0.0, 1.0, n)
        for _ in range(cnt):
            st = random_state(N, box, rng, width_range=(0.01, 0.1))
            rho = density(st)
            dec = decompose(rho, CoveringParams(2, 0.1, max_level=resolution_level(n, 2)))
            fams = build_ball_families(dec, rho)
            for s in (0.5, 1.0):
                bound = exclusion_lower_bound(fams, s)
                inter = interaction_energy(st, s)
                slack = (inter - bound) / inter
                worst = min(worst, slack)
                violations += slack < -1e-6
                count += 1
    ok = violations == 0
    acceptance(3, ok, f"{count} checks, {violations} violations, min relative slack {worst:.3f}")
    assert ok


def _random_density(rng, d, n, centered):
    lo = -0.5 if centered else 0.0
    box = BoxSpec(d, (lo,) * d, (lo + 1.0,) * d, (n,) * d)
    X = box.mesh()
    out = np.zeros(box.shape)
    for _ in range(rng.integers(1, 5)):
        c = rng.uniform(lo + 0.15, lo + 0.85, d)
        w = rng.uniform(0.02, 0.12)
        m = rng.uniform(0.2, 2.5)
        r2 = sum((x - cc) ** 2 for x, cc in zip(X, c))
        out = out + m * np.exp(-r2 / (2 * w * w)) / (2 * np.pi * w * w) ** (d / 2)
    return GridFunction(box, out)


def test_criterion_4_covering_invariants(acceptance):
    rng = np.random.default_rng(77)
    failures, kinds = [], {}
    for k in range(100):
        d = 1 + k % 2
        n0 = (2, 3)[(k // 2) % 2]
        hardy = n0 == 3 and k % 8 in (2, 3)
        n = 256 if d == 1 else 64
        delta = (0.1, 0.2, 0.3)[k % 3]
        rho = _random_density(rng, d, n, hardy)
        dec = decompose(rho, CoveringParams(n0, delta, max_level=resolution_level(n, n0),
                                            hardy_mode=hardy))
        res = verify(dec, rho)
        kinds[hardy] = kinds.get(hardy, 0) + 1
        if not res["all"]:
            failures.append((k, res))
    ok = not failures
    acceptance(4, ok, f"100 densities ({kinds.get(True, 0)} in hardy mode), "
               f"{len(failures)} failing")
    assert ok, failures[:3]


def test_criterion_5_local_constant_scaling(acceptance):
    vals = {}
    for L in (1, 2, 4):
        box = BoxSpec(1, -1.5 * L, 2.5 * L, 128 * L)
        x = box.axes()[0]
        om = DomainMask(box, (x > 0) & (x < L))
        omt = DomainMask(box, (x > -L / 4) & (x < 5 * L / 4))
        vals[L] = estimate_local_constant(1.0, 0.1, om, omt,
                                          OptimizerParams(max_iters=500, restarts=4),
                                          modes=8).value
    errs = {L: abs(vals[L] / vals[1] * L**2 - 1) for L in (2, 4)}
    ok = vals[1] > 0 and all(e < 0.05 for e in errs.values())
    acceptance(5, ok, f"C(1)={vals[1]:.4f} " + " ".join(
        f"L={L}: ratio*L^2-1={e:.1e}" for L, e in errs.items()))
    assert ok


def _embed(u, box):
    """Zero-pad a centered field into a larger box with the same spacing."""
    out = np.zeros(box.shape, dtype=np.result_type(u.values, float))
    sl = tuple(slice((N - n) // 2, (N - n) // 2 + n) for N, n in zip(box.points, u.box.points))
    out[sl] = u.values
    return GridFunction(box, out)


def test_criterion_6_upper_bound_mechanism(gn_1d, d3_minimizers, acceptance):
    # separated two-body trials built from the solver's minimizer
    big = BoxSpec.cube(1, 80.0, 4096)
    u = _embed(gn_1d.minimizer, big)
    seps = [10.0, 15.0, 20.0, 25.0, 30.0]
    qs = []
    for D in seps:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            st = trial_separated([u, u], [-D / 2, D / 2], big)
        qs.append(lt_quotient(st, QuotientParams(1.0, lam=1.0)))
    sep_ok = qs[-1] <= 1.02 * gn_1d.value and all(b < a for a, b in zip(qs, qs[1:]))

    # Hardy pair: u near the origin, v dilated and moved away
    hgn = d3_minimizers[("hgn", 1.0)]
    gn3 = d3_minimizers[("gn", 1.0)]
    box3 = BoxSpec.cube(3, 48.0, 128)
    U = _embed(hgn.minimizer, box3)
    V = _embed(gn3.minimizer, box3)
    pair = trial_hardy_pair(U, V, (16.0, 0.0, 0.0), 0.2)
    qh = lt_quotient(pair, QuotientParams(1.0, lam=1.0, hardy=True))
    hardy_rel = abs(qh / hgn.value - 1)

    # scaling identities of the dilation v -> ell^(d/2) v(ell x) at s = 1
    gbox = BoxSpec.cube(3, 32.0, 64)
    g = gaussian(gbox, 0.0, 1.0)
    ell = 0.5
    gl = dilate(g, gbox, 0.0, ell)
    p = 1 + 2 / 3
    e_kin = abs(kinetic_form(gl, gbox, 1.0) / (ell**2 * kinetic_form(g.values, gbox, 1.0)) - 1)
    e_pot = abs(np.sum(np.abs(gl) ** (2 * p)) / (ell**2 * np.sum(np.abs(g.values) ** (2 * p)))
                - 1)
    ok = sep_ok and hardy_rel < 0.03 and e_kin < 1e-6 and e_pot < 1e-6
    acceptance(6, ok, "separated " + ", ".join(f"{q:.5f}" for q in qs)
               + f" vs gn {gn_1d.value:.5f}; hardy pair {qh:.4f} vs hgn {hgn.value:.4f} "
               f"({hardy_rel:.2%}); scaling errors {e_kin:.1e}, {e_pot:.1e}")
    assert ok


def test_criterion_7_certificate(tmp_path, capsys, acceptance):
    cal = Calibration(1.0, 1)
    box = BoxSpec.cube(1, 8.0, 128)
    rng = np.random.default_rng(7)
    bad, invalid, gap = 0, 0, math.inf
    for _ in range(50):
        st = random_state(2, box, rng)
        r = certify(st, CertifyParams(1.0, delta=0.1), cal)
        if not r.valid:
            invalid += 1
            continue
        q = r.measured["quotient"]
        bad += not (r.factor <= q + 1e-6)
        gap = min(gap, q - r.factor)
    code = main(["sweep-delta", "--s", "1", "--d", "1", "--deltas", "0.3", "0.2", "0.1", "0.05",
                 "--out", str(tmp_path), "--csv"])
    capsys.readouterr()
    rows = json.loads((tmp_path / "sweep-delta.report.json").read_text())["table"]
    factors = [r[2] for r in rows]
    trend = all(b > a for a, b in zip(factors, factors[1:])) and factors[-1] >= 0.75 * GN
    ok = code == 0 and bad == 0 and invalid == 0 and trend
    acceptance(7, ok, f"50 states: {invalid} invalid, {bad} unsound, min(quotient-factor)="
               f"{gap:.3f}; sweep factors " + ", ".join(f"{f:.4f}" for f in factors)
               + f" (last/gn={factors[-1] / GN:.3f})")
    assert ok


def test_criterion_8_spectral_substrate(acceptance):
    # plane waves
    pw = 0.0
    for d in (1, 2, 3):
        box = BoxSpec.cube(d, 2 * math.pi, 16)
        k = np.array([3, -2, 1][:d], float)
        u = GridFunction(box, np.exp(1j * sum(kk * x for kk, x in zip(k, box.mesh()))))
        for s in (0.25, 0.5, 1.0, 1.7):
            out = frac_laplacian_apply(u, s).values
            pw = max(pw, float(np.max(np.abs(out - np.sum(k**2) ** s * u.values))))
    # Parseval on smooth fixtures
    par = 0.0
    cases = [(1, 256, 20.0, 1.0, s) for s in (0.3, 0.5, 1.0, 1.5, 2.3)]
    cases += [(2, 64, 16.0, 1.2, s) for s in (0.3, 0.5, 1.0, 1.5)]
    cases += [(3, 32, 12.0, 1.2, 0.5)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryDecayWarning)
        for d, n, L, w, s in cases:
            box = BoxSpec.cube(d, L, n)
            g = gaussian(box, 0.0, w)
            full = DomainMask(box, np.ones(box.shape, bool))
            a = seminorm_global(g, s)
            b = seminorm_domain(g, SeminormSpec(s, d), full)
            par = max(par, abs(a - b) / a)
    # disjoint-union monotonicity
    rng = np.random.default_rng(8)
    worst = math.inf
    for _ in range(60):
        d = int(rng.integers(1, 3))
        box = BoxSpec.cube(d, 8.0, 64 if d == 1 else 32)
        X = box.mesh()
        v = sum(rng.normal() * np.exp(-sum((x - c) ** 2 for x, c in
                                          zip(X, rng.uniform(-2, 2, d))) / (2 * rng.uniform(0.4, 1.2) ** 2))
                for _ in range(3)) * np.ones(box.shape)
        u = GridFunction(box, v)
        s = float(rng.choice([0.3, 0.5, 0.8, 1.0, 1.4]))
        x0 = X[0] * np.ones(box.shape)
        cut = rng.uniform(-2.5, 2.0)
        A, B = x0 < cut, (x0 >= cut + 0.5) & (x0 < 3.5)
        spec = SeminormSpec(s, d)
        eu = seminorm_domain(u, spec, A | B)
        rel = (eu - seminorm_domain(u, spec, A) - seminorm_domain(u, spec, B)) / max(1.0, abs(eu))
        worst = min(worst, rel)
    ok = pw < 1e-10 and par < 1e-4 and worst >= -1e-9
    acceptance(8, ok, f"plane wave {pw:.1e}, Parseval {par:.1e}, "
               f"min union slack {worst:.1e}")
    assert ok


def test_criterion_9_bosonic_floor(gn_1d, acceptance):
    consts = {1.0: gn_1d.value,
              0.5: minimize_gn(0.5, 1, BoxSpec.cube(1, 40.0, 2048),
                               OptimizerParams(restarts=2)).value}
    rng = np.random.default_rng(9)
    fails, worst, total = 0, math.inf, 0
    # states must decay at the box edge: on the periodic cell no GN bound holds
    for N, n, cnt in ((1, 128, 40), (2, 128, 40), (3, 64, 20)):
        box = BoxSpec.cube(1, 16.0, n)
        for _ in range(cnt):
            st = random_state(N, box, rng, width_range=(0.02, 0.06))
            for s, c in consts.items():
                ok, lhs, rhs = bosonic_floor(st, s, c)
                fails += not ok
                worst = min(worst, lhs / rhs - 1)
                total += 1
    ok = fails == 0
    acceptance(9, ok, f"{total} checks, {fails} failures, min lhs/rhs-1={worst:.3f} "
               f"(C_GN s=1: {consts[1.0]:.6f}, s=1/2: {consts[0.5]:.6f})")
    assert ok


def test_criterion_10_determinism(tmp_path, capsys, acceptance):
    box = BoxSpec.cube(1, 8.0, 128)
    io.save_state(tmp_path / "st.bin", random_state(2, box, np.random.default_rng(10)))
    runs = [
        ["gn", "--points", "1024", "--restarts", "2"],
        ["cover", "--input", tmp_path / "st.bin", "--max-level", "5"],
        ["exclusion", "--input", tmp_path / "st.bin", "--max-level", "5"],
        ["sweep-lambda", "--input", tmp_path / "st.bin"],
        ["certify", "--input", tmp_path / "st.bin"],
        ["sweep-delta", "--deltas", "0.3", "0.1"],
    ]
    outputs = []
    for rep in range(2):
        out = tmp_path / f"run{rep}"
        blobs = {}
        for argv in runs:
            code = main([str(a) for a in argv] + ["--out", str(out), "--csv", "--seed", "3"])
            assert code == 0, capsys.readouterr().err
            for f in sorted(out.iterdir()):
                blobs[f.name] = f.read_bytes()
        outputs.append(blobs)
    capsys.readouterr()
    same = outputs[0] == outputs[1]
    acceptance(10, same, f"{len(outputs[0])} report/CSV files compared byte for byte")
    assert same
