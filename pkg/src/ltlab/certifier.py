"""Numeric lower-bound certificates for interacting energy quotients.

The covering of a density is turned into a ledger of local bounds:

* every G^{n,0} cube contributes the first local uncertainty bound with the
  small-mass simplification,
* every light cluster contributes the second local uncertainty bound with an
  empirical constant for its shape,
* the pair interaction is bounded below by exclusion credits proportional to
  the G^{n,0} masses and light-closure masses at each scale.

Once lambda reaches the threshold lambda* every negative ledger term is paid
for by the exclusion credits and

    quotient >= min{1 / (C delta^(s/d)),
                    C_GN (1 - delta)(1 - delta^(s/d)) / (1 + delta)^(2s/d)}.

All constants in the chain are floating-point estimates; the certificate is a
reproducible numeric statement, not a proof.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
from scipy import optimize

from ltlab.analytic_constants import gn_reference_1d, hardy_constant
from ltlab.covering import CoveringParams, Decomposition, MassGrid, decompose, verify
from ltlab.exclusion import build_ball_families, exclusion_lower_bound
from ltlab.gn_solver import (
    OptimizerParams,
    estimate_local_constant,
    estimate_lup1_constant,
    gn_exponent,
    minimize_gn,
    minimize_hgn,
    unit_cluster_masks,
)
from ltlab.grid_core import BoxSpec, GridFunction, hardy_weight, kinetic_form

SCHEMA = 1

#: grid and search settings for constants computed in-run, per dimension
_GN_GRID = {1: (2048, 40.0), 2: (128, 24.0), 3: (64, 24.0)}
_LUP1_GRID = {1: (32, 6), 2: (16, 4), 3: (8, 3)}
_LOCAL_GRID = {1: (16, 8), 2: (8, 4), 3: (4, 3)}


# ------------------------------------------------------------------ factors

def branch_factors(delta: float, s: float, d: int, C_emp: float, gn_constant: float):
    """The two branches of the certificate factor."""
    ds = delta ** (s / d)
    first = 1.0 / (C_emp * ds)
    second = gn_constant * (1 - delta) * (1 - ds) / (1 + delta) ** (2 * s / d)
    return first, second


def certificate_factor(delta: float, s: float, d: int, C_emp: float, gn_constant: float) -> float:
    """min{1/(C delta^(s/d)), C_GN (1-delta)(1-delta^(s/d))/(1+delta)^(2s/d)}."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not C_emp > 0:
        raise ValueError("C_emp must be positive")
    return min(branch_factors(delta, s, d, C_emp, gn_constant))


def ball_overlap_bound(d: int, delta: float) -> int:
    """Lattice points of Z^d within sqrt(d)(1/delta + 2) + sqrt(d)/2 of 0.

    Bounds the number of unit-spaced cube centers in any ball of radius
    sqrt(d)(1/delta + 2), i.e. the overlap of the exclusion balls.
    """
    r = math.sqrt(d) * (1 / delta + 2) + math.sqrt(d) / 2
    k = int(math.floor(r))
    g = np.arange(-k, k + 1)
    mesh = np.meshgrid(*([g] * d), indexing="ij", sparse=True)
    return int(np.count_nonzero(sum(x * x for x in mesh) <= r * r))


def exclusion_constant(delta: float, s: float, d: int, epsilon_inv: int) -> float:
    """C_delta of the scale-summed exclusion bound.

    With A = 2 sqrt(d)(1/delta + 2), C_max from ``ball_overlap_bound`` and
    eps = 1/epsilon_inv the heavy-cube balls give, for levels m >= 2,

        I >= sum_m delta (1 - eps^2s) eps^2s / (4 C_max A^2s) (eps^m L)^(-2s) X_m

    with X_m the G^{m,0} masses plus the light-closure masses; level 1 uses
    I >= N(N-1)/2 (sqrt(d) L)^(-2s) >= eps^2s d^(-s) / 4 (eps L)^(-2s) X_1.
    Both bounds use the same I, which costs another factor 2.
    """
    eps = 1.0 / epsilon_inv
    A = 2 * math.sqrt(d) * (1 / delta + 2)
    cmax = ball_overlap_bound(d, delta)
    deep = 4 * cmax * A ** (2 * s) / (delta * (1 - eps ** (2 * s)) * eps ** (2 * s))
    top = 4 * d**s / eps ** (2 * s)
    return 2 * max(deep, top)


# -------------------------------------------------------------- calibration

@dataclass
class Calibration:
    """Empirical constants with their provenance.

    ``local`` maps shape keys (see ``shape_key``) to local constants at unit
    cube side.  Missing entries are computed by the ``ensure_*`` methods and recorded.
    """

    s: float
    d: int
    gn_constant: float | None = None
    hgn_constant: float | None = None
    lup1: float | None = None
    lup1_hardy: float | None = None
    interp: float | None = None
    local: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)
    seed: int = 0
    source: str = "in-run"

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict, source: str = "file") -> "Calibration":
        obj = dict(obj)
        obj.setdefault("source", source)
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in obj.items() if k in known})

    @classmethod
    def load(cls, path) -> "Calibration":
        with open(path) as fh:
            return cls.from_json(json.load(fh), source=str(path))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)

    def check(self, s: float, d: int):
        if abs(self.s - s) > 1e-12 or self.d != d:
            raise ValueError("calibration was made for a different (s, d)")

    def _record(self, name, info):
        self.provenance[name] = info

    def ensure_gn(self) -> float:
        if self.gn_constant is None:
            if (self.s, self.d) == (1.0, 1):
                self.gn_constant = gn_reference_1d().value
                self._record("gn_constant", {"method": "closed form (d=1, s=1)"})
            else:
                n, L = _GN_GRID[self.d]
                res = minimize_gn(self.s, self.d, BoxSpec.cube(self.d, L, n),
                                  OptimizerParams(restarts=2, seed=self.seed))
                self.gn_constant = res.value
                self._record("gn_constant", {"method": "minimize_gn", "points": n,
                                             "box": L, "seed": self.seed})
        return self.gn_constant

    def ensure_hgn(self) -> float:
        if self.hgn_constant is None:
            n, L = _GN_GRID[self.d]
            res = minimize_hgn(self.s, self.d, BoxSpec.cube(self.d, L, n),
                               OptimizerParams(restarts=2, seed=self.seed))
            self.hgn_constant = res.value
            self._record("hgn_constant", {"method": "minimize_hgn", "points": n,
                                          "box": L, "seed": self.seed})
        return self.hgn_constant

    def ensure_lup1(self, hardy: bool = False) -> float:
        name = "lup1_hardy" if hardy else "lup1"
        if getattr(self, name) is None:
            cells, modes = _LUP1_GRID[self.d]
            res = estimate_lup1_constant(self.s, self.d,
                                         OptimizerParams(max_iters=400, restarts=3,
                                                         seed=self.seed),
                                         cells_per_side=cells, modes=modes, hardy=hardy)
            setattr(self, name, res.value)
            self._record(name, {"method": "estimate_lup1_constant", "cells_per_side": cells,
                                "modes": modes, "seed": self.seed})
        return getattr(self, name)

    def ensure_local(self, delta: float, cubes_rel, origin=None) -> float:
        key = shape_key(delta, cubes_rel, origin)
        if key not in self.local:
            cells, modes = _LOCAL_GRID[self.d]
            box, om, omt = unit_cluster_masks(cubes_rel, self.d, cells_per_side=cells,
                                              origin_cube=origin)
            hardy = origin is not None
            gn = self.ensure_hgn() if hardy else self.ensure_gn()
            res = estimate_local_constant(self.s, delta, om, omt,
                                          OptimizerParams(max_iters=300, restarts=3,
                                                          seed=self.seed),
                                          gn_constant=gn, modes=modes, hardy_center=hardy)
            self.local[key] = res.value
            self._record("local:" + key, {"method": "estimate_local_constant",
                                          "cells_per_side": cells, "modes": modes,
                                          "seed": self.seed})
        return self.local[key]


def shape_key(delta: float, cubes_rel, origin=None) -> str:
    """Translation-normalized key of a cluster shape."""
    cubes = sorted(tuple(int(v) for v in c) for c in cubes_rel)
    lo = tuple(min(c[a] for c in cubes) for a in range(len(cubes[0])))
    rel = [tuple(v - l for v, l in zip(c, lo)) for c in cubes]
    key = f"delta={delta!r};cubes={rel}"
    if origin is not None:
        key += f";origin={tuple(int(v) - l for v, l in zip(origin, lo))}"
    return key


def _relative(cubes, origin=None):
    lo = [min(c.index[a] for c in cubes) for a in range(len(cubes[0].index))]
    rel = [tuple(i - l for i, l in zip(c.index, lo)) for c in cubes]
    orel = None if origin is None else tuple(i - l for i, l in zip(origin.index, lo))
    return rel, orel


# ---------------------------------------------------------------- threshold

def lambda_threshold(delta: float, s: float, d: int, calibrated_constants: dict,
                     epsilon_inv: int = 2, hardy: bool = False) -> dict:
    """lambda* and the constants behind it.

    ``calibrated_constants`` needs ``lup1`` and ``local`` (a list of local
    constants at unit side, possibly empty).  Hardy thresholds also need
    ``lup1_hardy`` and ``hardy_terms`` (further negative-term constants).
    """
    for k in ("lup1", "local") + (("lup1_hardy", "hardy_terms") if hardy else ()):
        if calibrated_constants.get(k) is None:
            raise ValueError(f"missing calibration: {k}")
    c_excl = exclusion_constant(delta, s, d, epsilon_inv)
    C = float(calibrated_constants["lup1"])
    locs = [float(v) for v in calibrated_constants["local"]]
    ds = delta ** (s / d)
    if hardy:
        extra = [float(v) for v in calibrated_constants["hardy_terms"]]
        c_delta = max([c_excl, C] + locs + extra)
        g0_branch = c_delta * c_delta
    else:
        c_delta = max([c_excl] + locs)
        g0_branch = c_delta * C * ds
    cluster_branch = c_delta * c_delta
    return {"lambda_star": max(g0_branch, cluster_branch), "c_delta": c_delta,
            "c_exclusion": c_excl, "branches": {"g0": g0_branch, "clusters": cluster_branch}}


# ------------------------------------------------------------------- report

@dataclass
class CertifyParams:
    s: float
    delta: float = 0.1
    epsilon_inv: int | None = None
    lam: float | None = None
    hardy: bool = False
    max_level: int | None = None
    d: int | None = None
    tol: float = 1e-6

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("order s must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.epsilon_inv is None:
            self.epsilon_inv = 3 if self.hardy else 2
        if self.lam is not None and self.lam < 0:
            raise ValueError("coupling must be nonnegative")


@dataclass
class CertificateReport:
    params: dict
    constants: dict
    calibration: dict
    thresholds: dict
    factor: float
    branches: dict
    valid: bool
    reasons: list
    ledger: dict
    totals: dict
    diagnostics: dict
    measured: dict | None = None
    sound: bool | None = None
    schema: int = SCHEMA

    def to_json(self):
        return asdict(self)


def recompute_factor(report) -> float:
    """The certificate factor rebuilt from the constants stored in a report."""
    r = report.to_json() if isinstance(report, CertificateReport) else report
    p, c = r["params"], r["constants"]
    gn = c["hgn_constant"] if p["hardy"] else c["gn_constant"]
    return certificate_factor(p["delta"], p["s"], p["d"], c["C"], gn)


def ledger_lower_bound(report) -> float:
    """Sum of positive parts plus (credit - negative) over all ledger entries."""
    return float(sum(e["positive"] + e["credit"] - e["negative"] for e in _entries(report)))


def _entries(report):
    r = report.to_json() if isinstance(report, CertificateReport) else report
    return itertools.chain.from_iterable(
        lv["uncertainty_I"] + lv["uncertainty_II"] for lv in r["ledger"].values())


def _density_of(obj):
    from ltlab.nbody import NBodyState, density

    if isinstance(obj, NBodyState):
        return obj, density(obj)
    if isinstance(obj, GridFunction):
        return None, obj
    raise TypeError("expected an NBodyState or a density GridFunction")


def _q0_disjoint(dec: Decomposition, origin_cube) -> bool:
    """|x| >= side(Q)/8 + side(Q')/4 for every cube Q' of every light cluster.

    This is the literal geometric argument that Q0 = Q/(4 sqrt d), contained
    in the ball of radius side(Q)/8, misses every light closure.
    """
    origin = (Fraction(1, 2),) * dec.box.d
    for rec in dec.levels.values():
        for K in rec.light:
            for Q in K.cubes:
                need = origin_cube.side / 8 + Q.side / 4
                if Q.dist2_to(origin) < need * need:
                    return False
    return True


def certify(state_or_density, params: CertifyParams,
            calibration: Calibration | None = None) -> CertificateReport:
    """Assemble the certificate for a state (or a density alone)."""
    from ltlab.nbody import QuotientParams, lt_quotient, quotient_parts

    state, rho = _density_of(state_or_density)
    box = rho.box
    d, s, delta, hardy = box.d, float(params.s), float(params.delta), params.hardy
    if params.d is not None and params.d != d:
        raise ValueError("params.d does not match the grid")
    if hardy:
        hardy_constant(s, d)
        if any(abs(a + b) > 1e-9 * box.lengths[0] for a, b in zip(box.lo, box.hi)):
            raise ValueError("hardy certification requires an origin-centered box")
    cal = calibration or Calibration(s, d)
    cal.check(s, d)

    cov = CoveringParams(params.epsilon_inv, delta, params.max_level, hardy_mode=hardy)
    dec = decompose(rho, cov)
    checks = verify(dec, rho)
    n0, L = dec.n0, box.lengths[0]
    p = gn_exponent(s, d)
    vals = np.clip(np.real(np.asarray(rho.values)), 0.0, None)
    rp_grid = MassGrid(box, vals**p, n0, dec.depth)
    rho_p_total = float(np.sum(vals**p) * box.cell_volume)
    ds = delta ** (s / d)

    gn = cal.ensure_gn()
    C_lup = cal.ensure_lup1()
    ch = hardy_constant(s, d).value if hardy else 0.0
    if hardy:
        hgn = cal.ensure_hgn()
        C_h1 = cal.ensure_lup1(hardy=True)
        far = ch * 2 ** (2 * s)
        # uniform constant of the first uncertainty bound on every cube
        C1 = max(C_lup + far, C_h1)
        origin_g0 = C_h1 * (4 * math.sqrt(d)) ** (2 * s) + ch * (8 * math.sqrt(d)) ** (2 * s)
        C_fac, gn_fac = C1, hgn
    else:
        C1, C_fac, gn_fac = C_lup, C_lup, gn
    first, second = branch_factors(delta, s, d, C_fac, gn_fac)
    factor = min(first, second)

    # local constants for every light-cluster shape present
    origin = (Fraction(1, 2),) * d
    cluster_consts = {}
    for n, rec in sorted(dec.levels.items()):
        for i, K in enumerate(rec.light):
            ocube = None
            if hardy:
                ocube = next((Q for Q in K.cubes if Q.center == origin), None)
            rel, orel = _relative(K.cubes, ocube)
            c = cal.ensure_local(delta, rel, orel)
            if hardy and ocube is None:
                c += far
            cluster_consts[(n, i)] = (c, shape_key(delta, rel, orel))
    hardy_terms = []
    origin_in_g0 = None
    if hardy:
        hardy_terms = [C1, far, origin_g0]
        for n, rec in dec.levels.items():
            for Q in rec.g0:
                if Q.center == origin:
                    origin_in_g0 = Q
    th = lambda_threshold(delta, s, d, {
        "lup1": C1, "local": [v[0] for v in cluster_consts.values()],
        "lup1_hardy": C1 if hardy else None, "hardy_terms": hardy_terms,
    }, n0, hardy)
    c_delta = th["c_delta"]
    lam = th["lambda_star"] if params.lam is None else float(params.lam)

    ledger, reasons = {}, []
    pos_g0 = pos_cl = neg_total = credit_total = 0.0
    for n, rec in sorted(dec.levels.items()):
        scale = (L / n0**n) ** (-2 * s)
        rp_n = rp_grid.level(n)
        credit_rate = lam / c_delta * scale
        e1, e2 = [], []
        for Q, m in zip(rec.g0, rec.g0_masses):
            rq = float(rp_n[Q.index])
            if hardy:
                c4 = origin_g0 if Q.center == origin else far
                neg = (ds * C1 + (1 - ds) * c4) * m * scale
            else:
                neg = C1 * ds * m * scale
            e1.append({"cube": list(Q.index), "mass": m, "rho_p": rq,
                       "positive": rq / (C_fac * ds), "negative": neg,
                       "credit": credit_rate * m})
        for i, K in enumerate(rec.light):
            c_loc, key = cluster_consts[(n, i)]
            rk = float(sum(rp_n[Q.index] for Q in K.cubes))
            neg = (1 - ds) * c_loc * K.closure_mass * scale
            if hardy:
                # first-bound negatives of the cubes of K, charged to the closure
                neg += ds * C1 * K.support_mass * scale
            e2.append({"cubes": [list(Q.index) for Q in K.cubes], "shape": key,
                       "local_constant": c_loc, "support_mass": K.support_mass,
                       "closure_mass": K.closure_mass, "rho_p": rk, "positive": second * rk,
                       "negative": neg, "credit": credit_rate * K.closure_mass})
        for e in e1:
            pos_g0 += e["positive"]
        for e in e2:
            pos_cl += e["positive"]
        for e in e1 + e2:
            neg_total += e["negative"]
            credit_total += e["credit"]
        ledger[str(n)] = {"scale": scale, "uncertainty_I": e1, "uncertainty_II": e2}

    covered = sum(e["rho_p"] for lv in ledger.values()
                  for e in lv["uncertainty_I"] + lv["uncertainty_II"])
    if lam < th["lambda_star"]:
        reasons.append("lambda below threshold")
    if dec.residual:
        reasons.append("covering left a residual")
    if not checks["all"]:
        reasons.append("covering checks failed")
    unpaid = [e for lv in ledger.values() for e in lv["uncertainty_I"] + lv["uncertainty_II"]
              if e["credit"] < e["negative"] * (1 - 1e-12)]
    if unpaid and lam >= th["lambda_star"]:
        reasons.append("exclusion credits do not cover negative terms")
    diagnostics = {"covering_checks": checks, "rho_p_total": rho_p_total,
                   "rho_p_covered": covered, "residual_cubes": len(dec.residual)}
    if hardy:
        diagnostics["origin_cube_in_g0"] = origin_in_g0 is not None
        if origin_in_g0 is not None:
            ok = _q0_disjoint(dec, origin_in_g0)
            diagnostics["q0_disjoint"] = ok
            if not ok:
                reasons.append("Q0 meets a light-cluster closure")
    fams = build_ball_families(dec, rho, delta)
    diagnostics["ball_bound"] = exclusion_lower_bound(fams, s)
    diagnostics["dropped_balls"] = len(fams.dropped)

    constants = {"C": C_fac, "lup1": C_lup, "gn_constant": gn,
                 "hgn_constant": cal.hgn_constant if hardy else None,
                 "hardy_constant": ch if hardy else None,
                 "local": {v[1]: v[0] for v in cluster_consts.values()}}
    present = ([first] if any(lv["uncertainty_I"] for lv in ledger.values()) else []) + \
              ([second] if any(lv["uncertainty_II"] for lv in ledger.values()) else [])
    totals = {"positive_g0": pos_g0, "positive_clusters": pos_cl, "negative": neg_total,
              "credit": credit_total, "effective_factor": min(present) if present else factor}
    out = CertificateReport(
        params={"s": s, "d": d, "delta": delta, "epsilon_inv": n0, "lambda": lam,
                "hardy": hardy, "max_level": params.max_level, "tol": params.tol},
        constants=constants,
        calibration={"source": cal.source, "seed": cal.seed, "provenance": dict(cal.provenance)},
        thresholds=th, factor=factor, branches={"uncertainty_I": first, "uncertainty_II": second},
        valid=not reasons, reasons=reasons, ledger=ledger, totals=totals,
        diagnostics=diagnostics)
    if state is not None:
        qp = QuotientParams(s, lam, hardy)
        parts = quotient_parts(state, qp)
        q = lt_quotient(state, qp, parts)
        out.measured = {"quotient": q, **parts}
        diagnostics["ball_bound_ok"] = bool(
            diagnostics["ball_bound"] <= parts["interaction"] * (1 + 1e-6) + 1e-12)
        out.sound = bool(factor <= q + params.tol) if out.valid else None
    return out


def sweep_delta(deltas, s: float, d: int, calibration: Calibration, epsilon_inv: int = 2,
                shapes=None) -> list:
    """Rows (delta, lambda*, factor) for the single-cube shape or given shapes."""
    shapes = shapes or [[(0,) * d]]
    gn = calibration.ensure_gn()
    C = calibration.ensure_lup1()
    rows = []
    for delta in deltas:
        locs = [calibration.ensure_local(delta, sh) for sh in shapes]
        th = lambda_threshold(delta, s, d, {"lup1": C, "local": locs}, epsilon_inv)
        rows.append((float(delta), th["lambda_star"], certificate_factor(delta, s, d, C, gn)))
    return rows


# ------------------------------------------------------ interpolation check

def _interp_parts(u: GridFunction, s: float):
    from ltlab.nbody import _pair_product

    box, d = u.box, u.box.d
    hd = box.cell_volume
    a2 = np.abs(np.asarray(u.values)) ** 2
    kin = kinetic_form(u.values, box, s)
    pot = hardy_constant(s, d).value * float(np.sum(a2 * hardy_weight(box, s)) * hd)
    coul = _pair_product(a2, a2, box, s)
    lp = float(np.sum(a2 ** gn_exponent(s, d)) * hd)
    return kin - pot, coul, lp


def interp_ratio(u: GridFunction, s: float) -> float:
    """<u,(H)u>^(1-2s/d) (double integral)^(2s/d) / int |u|^(2(1+2s/d))."""
    d = u.box.d
    if not 0 < 2 * s < d:
        raise ValueError("interpolation check requires 0 < 2s < d")
    e, coul, lp = _interp_parts(u, s)
    q = 2 * s / d
    return max(e, 0.0) ** (1 - q) * coul**q / lp


def interp_inequality_check(u: GridFunction, s: float, d: int, C: float) -> tuple:
    """(holds, margin) with margin = ratio / C - 1."""
    if u.box.d != d:
        raise ValueError("u does not live in dimension d")
    if not C > 0:
        raise ValueError("C must be positive")
    r = interp_ratio(u, s)
    return bool(r >= C), r / C - 1


def gaussian_mixture(box: BoxSpec, theta) -> GridFunction:
    """Real sum of isotropic Gaussians; theta rows are (amp, log width, center...)."""
    X = box.mesh()
    out = np.zeros(box.shape)
    for row in np.asarray(theta, float).reshape(-1, box.d + 2):
        a, lw, c = row[0], row[1], row[2:]
        w = math.exp(lw)
        out = out + a * np.exp(-sum((x - cc) ** 2 for x, cc in zip(X, c)) / (2 * w * w))
    return GridFunction(box, out)


def random_mixture_theta(box: BoxSpec, rng, terms: int = 3):
    L = box.lengths[0]
    rows = []
    for _ in range(terms):
        c = [rng.uniform(-L / 4, L / 4) for _ in range(box.d)]
        rows.append([rng.normal(), math.log(L * rng.uniform(0.03, 0.12))] + c)
    return np.array(rows)


def calibrate_interp(s: float, box: BoxSpec, rng, starts: int = 6, safety: float = 0.5,
                     terms: int = 2) -> dict:
    """Adversarial C(s, d): minimize the ratio over Gaussian mixtures, times ``safety``."""
    if not 0 < 2 * s < box.d:
        raise ValueError("interpolation check requires 0 < 2s < d")
    L = box.lengths[0]
    lo, hi = math.log(3 * box.h), math.log(L / 8)

    def f(theta):
        th = np.asarray(theta).reshape(-1, box.d + 2).copy()
        th[:, 1] = np.clip(th[:, 1], lo, hi)
        th[:, 2:] = np.clip(th[:, 2:], -L / 4, L / 4)
        u = gaussian_mixture(box, th)
        if not np.any(u.values):
            return 1e6
        return interp_ratio(u, s)

    best, values = math.inf, []
    for _ in range(starts):
        th0 = random_mixture_theta(box, rng, terms)
        res = optimize.minimize(f, th0.ravel(), method="Nelder-Mead",
                                options={"maxiter": 200 * th0.size, "xatol": 1e-6,
                                         "fatol": 1e-10})
        values.append(float(res.fun))
        best = min(best, float(res.fun))
    return {"value": safety * best, "raw_min": best, "safety": safety, "values": values}

