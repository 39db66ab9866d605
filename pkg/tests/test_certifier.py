import json
import math
from fractions import Fraction
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ltlab.certifier import (
    Calibration,
    CertifyParams,
    ball_overlap_bound,
    branch_factors,
    calibrate_interp,
    certificate_factor,
    certify,
    exclusion_constant,
    gaussian_mixture,
    interp_inequality_check,
    interp_ratio,
    lambda_threshold,
    ledger_lower_bound,
    random_mixture_theta,
    recompute_factor,
    shape_key,
    sweep_delta,
    _q0_disjoint,
)
from ltlab.covering import Cube
from ltlab.grid_core import BoxSpec, GridFunction, gaussian
from ltlab.gn_solver import OptimizerParams, minimize_gn, minimize_hgn
from ltlab.nbody import dilate, random_state, trial_hardy_pair

GN = math.pi**2 / 4


def test_factor_examples():
    _, second = branch_factors(0.1, 1.0, 1, 1.0, GN)
    assert second == pytest.approx(0.81 / 1.21 * GN, rel=1e-12)
    # 0.669421 * 2.467401 = 1.651731
    assert certificate_factor(0.1, 1.0, 1, 1.0, GN) == pytest.approx(1.651731, abs=1e-6)
    assert certificate_factor(0.5, 1.0, 2, 1.0, 1.0) == pytest.approx(0.097631, abs=1e-6)
    # small C leaves the second branch active, large C the first
    assert certificate_factor(0.5, 1.0, 2, 1e6, 1.0) == pytest.approx(1 / (1e6 * math.sqrt(0.5)))


@given(st.floats(1e-6, 1e-3))
def test_second_branch_tends_to_gn(delta):
    _, second = branch_factors(delta, 1.0, 1, 1.0, GN)
    assert second == pytest.approx(GN, rel=5 * math.sqrt(delta))


def test_factor_errors():
    with pytest.raises(ValueError, match="delta"):
        certificate_factor(1.0, 1.0, 1, 1.0, GN)
    with pytest.raises(ValueError, match="C_emp"):
        certificate_factor(0.1, 1.0, 1, 0.0, GN)


def test_overlap_and_exclusion_constant():
    assert ball_overlap_bound(1, 0.1) == 25
    assert ball_overlap_bound(2, 0.5) > ball_overlap_bound(1, 0.5)
    c = exclusion_constant(0.1, 1.0, 1, 2)
    A = 2 * 12
    assert c == pytest.approx(2 * 4 * 25 * A**2 / (0.1 * 0.75 * 0.25))
    assert c == pytest.approx(6.144e6)


def test_lambda_threshold():
    with pytest.raises(ValueError, match="missing calibration: lup1"):
        lambda_threshold(0.1, 1.0, 1, {"local": []})
    with pytest.raises(ValueError, match="missing calibration: hardy_terms"):
        lambda_threshold(0.1, 0.5, 3, {"lup1": 1, "local": [], "lup1_hardy": 1}, 3, True)
    th = lambda_threshold(0.1, 1.0, 1, {"lup1": 1.3, "local": [0.8]})
    cd = th["c_delta"]
    assert cd == exclusion_constant(0.1, 1.0, 1, 2)
    assert th["lambda_star"] == pytest.approx(cd * max(1.3 * 0.1, cd))
    assert th["branches"] == {"g0": pytest.approx(cd * 1.3 * 0.1), "clusters": cd * cd}
    big = lambda_threshold(0.1, 1.0, 1, {"lup1": 1.3, "local": [2 * cd]})
    assert big["c_delta"] == 2 * cd


def test_shape_key_translation_invariant():
    assert shape_key(0.1, [(3,), (4,)]) == shape_key(0.1, [(0,), (1,)])
    assert shape_key(0.1, [(1, 1)], (1, 1)).endswith("origin=(0, 0)")


def test_certify_params_validation():
    with pytest.raises(ValueError):
        CertifyParams(0.0)
    with pytest.raises(ValueError, match="delta"):
        CertifyParams(1.0, delta=0.0)
    with pytest.raises(ValueError, match="coupling"):
        CertifyParams(1.0, lam=-1.0)
    assert CertifyParams(0.5, hardy=True).epsilon_inv == 3


def test_calibration_round_trip(tmp_path, cal_1d):
    cal_1d.ensure_gn()
    p = tmp_path / "cal.json"
    cal_1d.save(p)
    back = Calibration.load(p)
    assert back.gn_constant == cal_1d.gn_constant and back.local == cal_1d.local
    assert back.source == "in-run" or back.source == str(p)
    with pytest.raises(ValueError, match="different"):
        back.check(0.5, 1)


@pytest.fixture(scope="module")
def two_body_reports(cal_1d):
    box = BoxSpec.cube(1, 8.0, 128)
    rng = np.random.default_rng(0)
    out = []
    for _ in range(4):
        st_ = random_state(2, box, rng)
        out.append((st_, certify(st_, CertifyParams(1.0), cal_1d)))
    return out


def test_two_body_certificates_sound(two_body_reports):
    for _, r in two_body_reports:
        assert r.valid, r.reasons
        assert r.sound
        assert r.factor <= r.measured["quotient"] + 1e-6
        assert r.diagnostics["ball_bound_ok"]
        assert r.diagnostics["covering_checks"]["all"]


def test_recompute_and_schema(two_body_reports):
    _, r = two_body_reports[0]
    assert recompute_factor(r) == r.factor
    js = json.loads(json.dumps(r.to_json()))
    assert recompute_factor(js) == r.factor
    assert js["schema"] == 1
    assert math.isfinite(ledger_lower_bound(js))
    for lv in js["ledger"].values():
        for e in lv["uncertainty_I"] + lv["uncertainty_II"]:
            assert all(math.isfinite(e[k]) for k in ("positive", "negative", "credit"))
            assert e["credit"] >= e["negative"] * (1 - 1e-12)


def test_monotone_validity(two_body_reports, cal_1d):
    st_, r = two_body_reports[1]
    lam_star = r.thresholds["lambda_star"]
    low = certify(st_, CertifyParams(1.0, lam=0.5 * lam_star), cal_1d)
    assert not low.valid and "lambda below threshold" in low.reasons
    assert low.ledger and low.sound is None
    for k in (1.0, 2.0, 100.0):
        hi = certify(st_, CertifyParams(1.0, lam=k * lam_star), cal_1d)
        assert hi.valid and hi.sound


def test_uniform_low_mass_uses_first_bound_only(cal_1d):
    box = BoxSpec(1, 0.0, 1.0, 64)
    rho = GridFunction(box, np.full(64, 0.15))
    r = certify(rho, CertifyParams(1.0), cal_1d)
    assert r.valid and r.measured is None and r.sound is None
    assert all(not lv["uncertainty_II"] for lv in r.ledger.values())
    assert r.totals["effective_factor"] == r.branches["uncertainty_I"]
    assert r.totals["positive_clusters"] == 0.0


def test_certify_errors(cal_1d):
    box = BoxSpec(1, 0.0, 1.0, 64)
    rho = GridFunction(box, np.full(64, 0.15))
    with pytest.raises(ValueError, match="params.d"):
        certify(rho, CertifyParams(1.0, d=2), cal_1d)
    with pytest.raises(ValueError, match="origin-centered"):
        certify(GridFunction(BoxSpec(3, (0,) * 3, (1,) * 3, (8,) * 3), np.ones((8,) * 3)),
                CertifyParams(0.5, hardy=True), Calibration(0.5, 3))
    with pytest.raises(TypeError):
        certify(np.ones(4), CertifyParams(1.0), cal_1d)
    with pytest.raises(ValueError, match="different"):
        certify(rho, CertifyParams(0.5), cal_1d)


def test_sweep_delta_trend(cal_1d):
    rows = sweep_delta([0.3, 0.2, 0.1, 0.05], 1.0, 1, cal_1d)
    factors = [r[2] for r in rows]
    assert all(b > a for a, b in zip(factors, factors[1:]))
    assert factors[-1] >= 0.75 * GN


def test_q0_disjointness_geometry():
    Q = Cube(1, (1, 1), 3)
    near = Cube(2, (4, 3), 3)
    far = Cube(1, (2, 1), 3)

    def dec_with(cubes):
        K = SimpleNamespace(cubes=cubes)
        return SimpleNamespace(box=SimpleNamespace(d=2),
                               levels={1: SimpleNamespace(light=[K])})

    assert _q0_disjoint(dec_with([far]), Q)
    assert not _q0_disjoint(dec_with([near]), Q)


def test_hardy_origin_cube_in_g0():
    box = BoxSpec.cube(2, 6.0, 64)
    rho = GridFunction(box, np.full(box.shape, 0.05 / 36))
    cal = Calibration(0.5, 2, gn_constant=2.157, hgn_constant=1.05, lup1=1.3, lup1_hardy=1.7)
    r = certify(rho, CertifyParams(0.5, hardy=True), cal)
    assert r.diagnostics["origin_cube_in_g0"] and r.diagnostics["q0_disjoint"]
    assert r.valid


@pytest.mark.slow
def test_hardy_certificate_sound():
    box = BoxSpec.cube(2, 16.0, 64)
    p = OptimizerParams(restarts=1)
    pu, pv = minimize_hgn(0.5, 2, box, p), minimize_gn(0.5, 2, box, p)
    cal = Calibration(0.5, 2, gn_constant=pv.value, hgn_constant=pu.value)
    st_ = trial_hardy_pair(pu.minimizer, pv.minimizer, (4.0, 0.0), 1.0)
    r = certify(st_, CertifyParams(0.5, hardy=True), cal)
    assert r.valid, r.reasons
    assert r.sound and r.factor <= r.measured["quotient"]
    assert r.diagnostics["covering_checks"]["hardy_origin"]
    assert r.constants["hardy_constant"] > 0


def test_interp_checks():
    box = BoxSpec.cube(3, 16.0, 32)
    with pytest.raises(ValueError, match="2s < d"):
        interp_ratio(gaussian(BoxSpec.cube(1, 8.0, 32)), 0.5)
    with pytest.raises(ValueError, match="dimension"):
        interp_inequality_check(gaussian(box), 0.5, 2, 1.0)
    with pytest.raises(ValueError, match="positive"):
        interp_inequality_check(gaussian(box), 0.5, 3, 0.0)
    rng = np.random.default_rng(2)
    cal = calibrate_interp(0.5, box, rng, starts=2, terms=1)
    assert cal["value"] == pytest.approx(0.5 * cal["raw_min"])
    # spread-out function away from the origin: the Hardy term is negligible
    far = gaussian(box, (4.0, 0.0, 0.0), 1.2)
    ok, margin = interp_inequality_check(far, 0.5, 3, cal["value"])
    assert ok and margin > 0


def test_interp_ratio_dilation_invariant():
    box = BoxSpec.cube(3, 16.0, 64)
    u = gaussian(box, (1.0, 0.0, 0.0), 1.4)
    v = GridFunction(box, dilate(u, box, 0.0, 2.0))
    assert interp_ratio(v, 0.5) == pytest.approx(interp_ratio(u, 0.5), rel=2e-2)


def test_gaussian_mixture_shapes():
    box = BoxSpec.cube(2, 8.0, 16)
    th = random_mixture_theta(box, np.random.default_rng(0), terms=3)
    assert th.shape == (3, 4)
    assert gaussian_mixture(box, th).values.shape == box.shape
