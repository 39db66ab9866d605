"""Variational estimates of interpolation and local uncertainty constants.

The global Gagliardo-Nirenberg quotient

    J(u) = <u, (-Delta)^s u> * (int |u|^2)^(2s/d) / int |u|^(2 + 4s/d)

is scale and amplitude invariant.  Its infimum is approached by preconditioned
gradient descent on log J with an Armijo backtracking line search, renormalizing
after every step.  The Hardy variant subtracts C_{s,d} int |u|^2 |x|^(-2s) from
the kinetic term.

Local constants are empirical: they are suprema of explicit deficit functionals
over a trial family of band-limited fields, computed with L-BFGS from several
starting points.  They are lower estimates of the true constants and are
reported as empirical everywhere they are used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.sparse.linalg import LinearOperator, eigsh

from ltlab.analytic_constants import gn_reference_1d, hardy_constant
from ltlab.grid_core import (
    BoxSpec,
    DomainForm,
    DomainMask,
    GridFunction,
    SeminormSpec,
    _mask_array,
    fftn,
    hardy_weight,
    ifftn,
    kinetic_form,
    symbol,
)


@dataclass
class OptimizerParams:
    """Descent / adversarial search settings."""

    max_iters: int = 2000
    step_size: float = 1.0
    tol_rel: float = 1e-11
    restarts: int = 3
    seed: int = 0

    def __post_init__(self):
        if not self.tol_rel > 0:
            raise ValueError("tol_rel must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class QuotientResult:
    value: float
    minimizer: GridFunction
    iterations: int
    converged: bool
    restart_values: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"value": self.value, "iterations": self.iterations,
                "converged": self.converged, "restart_values": self.restart_values,
                "trace": self.trace}


def gn_exponent(s: float, d: int) -> float:
    """p = 1 + 2s/d, so that the potential term is int |u|^(2p)."""
    return 1.0 + 2.0 * s / d


class _Quotient:
    """Objective and gradient for the (Hardy-)GN quotient on one box.

    J is flat along dilations u -> mu^(d/2) u(mu x) on R^d, but on the torus
    spreading towards the constant field lowers it to 0.  The objective is
    therefore log J + pin * (log(T/N2) - log T0)^2 with T the kinetic energy:
    the penalty vanishes on the dilation orbit's point of scale T0 and fixes
    the scale without changing the infimum over R^d.
    """

    def __init__(self, box: BoxSpec, s: float, hardy: bool, pin: float = 1.0):
        self.box, self.s = box, s
        self.p = gn_exponent(s, box.d)
        self.sym = symbol(box, s)
        self.hd = box.cell_volume
        self.pin = pin
        self.log_t0 = None
        self.vw = None
        if hardy:
            self.vw = hardy_constant(s, box.d).value * hardy_weight(box, s)

    def parts(self, u):
        Tu = ifftn(self.sym * fftn(u))
        if np.isrealobj(u):
            Tu = Tu.real
        a2 = np.abs(u) ** 2
        T = float(np.real(np.vdot(u, Tu)) * self.hd)
        K, Lu = T, Tu
        if self.vw is not None:
            Lu = Tu - self.vw * u
            K = T - float(np.sum(self.vw * a2) * self.hd)
        N2 = float(np.sum(a2) * self.hd)
        up = a2 ** (self.p - 1)
        P = float(np.sum(up * a2) * self.hd)
        return K, N2, P, Lu, up, T, Tu

    def value(self, u) -> float:
        K, N2, P = self.parts(u)[:3]
        return K * N2 ** (self.p - 1) / P

    def log_and_grad(self, u):
        K, N2, P, Lu, up, T, Tu = self.parts(u)
        J = K * N2 ** (self.p - 1) / P
        if K <= 0 or T <= 0:
            return -np.inf, None, J
        if self.log_t0 is None:
            self.log_t0 = math.log(T / N2)
        f = math.log(K) + (self.p - 1) * math.log(N2) - math.log(P)
        g = 2 * self.hd * (Lu / K + (self.p - 1) * u / N2 - self.p * up * u / P)
        dev = math.log(T / N2) - self.log_t0
        f += self.pin * dev * dev
        g = g + 2 * self.pin * dev * 2 * self.hd * (Tu / T - u / N2)
        return f, g, J

    def precondition(self, g, u):
        K, N2 = self.parts(u)[:2]
        pre = K / (2 * self.hd) / (self.sym + K / N2)
        out = ifftn(fftn(g) * pre)
        return out.real if np.isrealobj(g) else out


def _normalize(u, hd):
    return u / math.sqrt(float(np.sum(np.abs(u) ** 2)) * hd)


def _descend(q: _Quotient, u, params: OptimizerParams, trace: list):
    hd = q.hd
    u = _normalize(u, hd)
    f, g, J = q.log_and_grad(u)
    if g is None:
        return u, J, 0, False
    step = params.step_size
    converged = False
    it = 0
    for it in range(1, params.max_iters + 1):
        dvec = -q.precondition(g, u)
        slope = float(np.real(np.vdot(g, dvec)))
        if slope >= 0:
            dvec, slope = -g, -float(np.real(np.vdot(g, g)))
        accepted = False
        while step > 1e-14:
            un = _normalize(u + step * dvec, hd)
            fn, gn, Jn = q.log_and_grad(un)
            if gn is not None and fn <= f + 1e-4 * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        rel = (f - fn) / max(abs(f), 1.0)
        u, f, g, J = un, fn, gn, Jn
        trace.append(J)
        step = min(step * 1.5, 10.0)
        if rel < params.tol_rel:
            converged = True
            break
    return u, J, it, converged


def _bump(box: BoxSpec, center, width):
    r2 = sum((x - c) ** 2 for x, c in zip(box.mesh(), center))
    return np.exp(-r2 / (2 * width**2)) * np.ones(box.shape)


def _initial_fields(box: BoxSpec, params: OptimizerParams, near_origin: bool):
    rng = np.random.default_rng(params.seed)
    L = min(box.lengths)
    # optimizers with algebraic tails (s < 1) feel their periodic images at
    # relative order width/L, so start as narrow as eight cells allow
    w0 = min(L / 24, max(L / 128, 8 * box.h))
    mid = np.array([(a + b) / 2 for a, b in zip(box.lo, box.hi)])
    out = [_bump(box, np.zeros(box.d) if near_origin else mid, w0)]
    for _ in range(params.restarts - 1):
        scale = L / 12 if near_origin else L / 6
        c = (np.zeros(box.d) if near_origin else mid) + rng.uniform(-scale, scale, box.d) / 2
        w = w0 * rng.uniform(0.6, 1.2)
        f = _bump(box, c, w)
        if rng.random() < 0.5:
            c2 = c + rng.uniform(-scale, scale, box.d) / 2
            f = f + rng.uniform(0.2, 1.0) * _bump(box, c2, w * rng.uniform(0.7, 1.4))
        out.append(f)
    return out


def _minimize(s, d, box, params, hardy, init=None):
    if box.d != d:
        raise ValueError("box dimension does not match d")
    if not s > 0:
        raise ValueError("order s must be positive")
    q = _Quotient(box, s, hardy)
    starts = [np.asarray(init.values if isinstance(init, GridFunction) else init)] \
        if init is not None else _initial_fields(box, params, near_origin=hardy)
    best = None
    values, total_it, all_conv, best_trace = [], 0, True, []
    for u0 in starts:
        trace: list = []
        q.log_t0 = None
        u, J, it, conv = _descend(q, np.array(u0, dtype=float if np.isrealobj(u0) else complex),
                                  params, trace)
        values.append(float(J))
        total_it += it
        all_conv &= conv
        if best is None or J < best[1]:
            best = (u, J, it, conv)
            best_trace = trace
    u, J, it, conv = best
    return QuotientResult(float(J), GridFunction(box, _normalize(u, q.hd)), it, conv,
                          values, [float(v) for v in best_trace])


def minimize_gn(s: float, d: int, box: BoxSpec, params: OptimizerParams | None = None,
                init=None) -> QuotientResult:
    """Estimate C_GN(s, d) by descent on J over normalized grid fields.

    The result is an upper bound for the discrete infimum: every evaluated
    trial has quotient at least ``value`` minus the stopping tolerance.
    """
    return _minimize(s, d, box, params or OptimizerParams(), hardy=False, init=init)


def minimize_hgn(s: float, d: int, box: BoxSpec, params: OptimizerParams | None = None,
                 init=None) -> QuotientResult:
    """Estimate C_HGN(s, d); requires 0 < 2s < d and no cell center at 0."""
    hardy_constant(s, d)
    return _minimize(s, d, box, params or OptimizerParams(), hardy=True, init=init)


def gn_quotient(u: GridFunction, s: float) -> float:
    return _Quotient(u.box, s, False).value(u.values)


def hgn_quotient(u: GridFunction, s: float) -> float:
    """Hardy-GN quotient with the numerator as computed (not clamped)."""
    return _Quotient(u.box, s, True).value(u.values)


def soliton_1d(box: BoxSpec) -> GridFunction:
    """Q(x) = 3^(1/4) sech^(1/2)(2x), the s=1, d=1 optimizer (unnormalized)."""
    x = box.axes()[0]
    return GridFunction(box, 3**0.25 / np.sqrt(np.cosh(2 * x)))


# ------------------------------------------------------------ band-limited trials

class BandBasis:
    """Real fields spanned by Fourier modes with |j_a| <= modes on every axis.

    The mode index counts periods per box, so dilating the box together with
    its grid leaves the trial space unchanged as a space of functions of x/L.
    """

    def __init__(self, box: BoxSpec, modes: int):
        self.box = box
        idx = []
        for n in box.points:
            if 2 * modes + 1 > n:
                raise ValueError("band exceeds grid resolution")
            idx.append(np.r_[0:modes + 1, n - modes:n])
        self.sel = np.ix_(*idx)
        self.bshape = tuple(len(i) for i in idx)
        self.size = 2 * int(np.prod(self.bshape))

    def to_field(self, c):
        z = c[: self.size // 2] + 1j * c[self.size // 2:]
        full = np.zeros(self.box.shape, complex)
        full[self.sel] = z.reshape(self.bshape)
        return (ifftn(full) * self.box.size).real

    def grad_back(self, G):
        z = fftn(G)[self.sel].ravel()
        return np.concatenate([z.real, z.imag])

    def project(self, field):
        """Band coefficients of the truncated Fourier series of ``field``."""
        z = fftn(field)[self.sel].ravel() / self.box.size
        return np.concatenate([z.real, z.imag])

    def random(self, rng):
        k2 = 0.0
        for ax in range(self.box.d):
            i = np.r_[0:(self.bshape[ax] + 1) // 2, -(self.bshape[ax] // 2):0]
            shape = [1] * self.box.d
            shape[ax] = -1
            k2 = k2 + (i.reshape(shape)) ** 2
        w = (1.0 / (1.0 + k2)) * np.ones(self.bshape)
        z = w * (rng.standard_normal(self.bshape) + 1j * rng.standard_normal(self.bshape))
        z = z.ravel()
        return np.concatenate([z.real, z.imag])


def _local_pieces(box, spec, omega, omega_tilde, hardy_center):
    m_in, m_out = _mask_array(omega), _mask_array(omega_tilde)
    form = DomainForm(box, spec, m_out)
    vw = None
    if hardy_center:
        vw = hardy_constant(spec.s, box.d).value * hardy_weight(box, spec.s) * m_in
    return m_in.astype(float), m_out.astype(float), form, vw


def _kinetic(form, vw, u, hd):
    Au = form.apply(u).real
    K = float(np.sum(u * Au) * hd)
    if vw is not None:
        K -= float(np.sum(vw * u * u) * hd)
        Au = Au - vw * u
    return K, 2 * hd * Au


def _check_margin(box, omega, omega_tilde):
    m_in, m_out = _mask_array(omega), _mask_array(omega_tilde)
    if np.any(m_in & ~m_out):
        raise ValueError("Omega must be compactly contained in Omega_tilde")
    from scipy import ndimage
    grown = ndimage.binary_dilation(m_in, structure=np.ones((3,) * box.d, bool))
    if np.any(grown & ~m_out):
        raise ValueError("Omega must be compactly contained in Omega_tilde")
    # a cell touching the box edge would wrap around periodically
    if any(np.take(m_out, 0, axis=a).any() or np.take(m_out, -1, axis=a).any()
           for a in range(box.d)):
        raise ValueError("Omega_tilde must not touch the box boundary")


def _adversarial(objective, basis, starts, params):
    best, vals = -np.inf, []
    for c0 in starts:
        res = optimize.minimize(objective, c0, jac=True, method="L-BFGS-B",
                                options={"maxiter": params.max_iters, "ftol": params.tol_rel,
                                         "gtol": 1e-10})
        val = -float(res.fun)
        vals.append(val)
        if val > best:
            best, bestc = val, res.x
    return best, bestc, vals


def _starts(basis: BandBasis, box: BoxSpec, params, centers_frac, widths_frac):
    """Constant field, bumps (fractional box coordinates) and random band fields."""
    rng = np.random.default_rng(params.seed)
    out = []
    const = np.zeros(basis.size)
    const[0] = 1.0
    out.append(const)
    L = box.lengths[0]
    for c, w in zip(centers_frac, widths_frac):
        cen = [lo + cc * L for lo, cc in zip(box.lo, c)]
        out.append(basis.project(_bump(box, cen, w * L)))
    for _ in range(params.restarts):
        out.append(basis.random(rng))
    return out


@dataclass
class LocalConstantResult:
    value: float
    raw_sup: float
    restart_values: list
    minimizer: GridFunction

    def to_json(self):
        return {"value": self.value, "raw_sup": self.raw_sup,
                "restart_values": self.restart_values, "empirical": True}


def estimate_local_constant(s: float, delta: float, omega, omega_tilde,
                            params: OptimizerParams | None = None, gn_constant=None,
                            modes: int = 8, hardy_center: bool = False) -> LocalConstantResult:
    """Empirical C_{delta, Omega, Omega~}.

    Maximizes the deficit

        [a int_Omega |u|^(2p) / M^(2s/d) - ||u||^2_{H^s(Omega~)}] / M,
        M = int_Omega~ |u|^2,  a = C_GN (1 - delta),

    over band-limited real fields on the mask box and returns max(0, sup).
    With ``hardy_center`` the Hardy term C_{s,d} int_Omega |u|^2 |x|^(-2s) is
    subtracted from the seminorm and ``gn_constant`` should be C_HGN.
    """
    params = params or OptimizerParams(max_iters=400, restarts=4)
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    box = omega.box if isinstance(omega, DomainMask) else omega_tilde.box
    d = box.d
    _check_margin(box, omega, omega_tilde)
    if gn_constant is None:
        if (s, d) != (1.0, 1) or hardy_center:
            raise ValueError("gn_constant must be supplied for this (s, d)")
        gn_constant = gn_reference_1d().value
    spec = SeminormSpec(s, d)
    f_in, f_out, form, vw = _local_pieces(box, spec, omega, omega_tilde, hardy_center)
    hd, p, q = box.cell_volume, gn_exponent(s, d), 2 * s / d
    a = float(gn_constant) * (1 - delta)
    basis = BandBasis(box, modes)

    def objective(c):
        u = basis.to_field(c)
        M = float(np.sum(f_out * u * u) * hd)
        if M < 1e-12:
            return 1e6, np.zeros_like(c)
        up = np.abs(u) ** (2 * p - 2) * u * f_in
        P = float(np.sum(up * u) * hd)
        K, dK = _kinetic(form, vw, u, hd)
        dP, dM = 2 * p * hd * up, 2 * hd * u * f_out
        D = (a * P * M**-q - K) / M
        dD = (a * (dP * M**-q - q * P * M ** (-q - 1) * dM) - dK) / M - D * dM / M
        lm = math.log(M)
        f = -D + 1e-3 * lm * lm
        g = -dD + 2e-3 * lm * dM / M
        return f, basis.grad_back(g)

    centers = _cluster_centers_frac(box, _mask_array(omega))
    starts = _starts(basis, box, params, centers, [0.05] * len(centers))
    best, bestc, vals = _adversarial(objective, basis, starts, params)
    u = GridFunction(box, basis.to_field(bestc))
    return LocalConstantResult(max(0.0, best), best, vals, u)


def _cluster_centers_frac(box, mask):
    """A few deterministic points of the mask in fractional box coordinates."""
    idx = np.argwhere(mask)
    pick = idx[np.linspace(0, len(idx) - 1, min(3, len(idx))).astype(int)]
    return [tuple((i + 0.5) / n for i, n in zip(row, box.points)) for row in pick]


def unit_cluster_masks(cubes_rel, d: int, cells_per_side: int = 16, collar: float = 0.25,
                       origin_cube=None):
    """Box and (Omega, Omega~) masks for a union of unit cubes.

    ``cubes_rel`` are integer multi-indices of unit cubes; Omega~ is the open
    ``collar``-neighbourhood of their union.  The box has side at least 1.5
    times the extent of Omega~.  With ``origin_cube`` the origin sits at the
    center of that cube; otherwise at the corner of cube 0.
    """
    cubes = np.array([tuple(c) for c in cubes_rel], dtype=int).reshape(-1, d)
    h = 1.0 / cells_per_side
    lo_c, hi_c = cubes.min(0), cubes.max(0) + 1
    extent = float((hi_c - lo_c).max()) + 2 * collar
    n = 8
    while n * h < 1.5 * extent:
        n *= 2
    shift = np.zeros(d) if origin_cube is None else np.asarray(origin_cube, float) + 0.5
    # center the cube union, snapped to whole cells
    mid = (lo_c + hi_c) / 2.0 - shift
    lo = np.round((mid - n * h / 2) / h) * h
    box = BoxSpec(d, tuple(lo), tuple(lo + n * h), (n,) * d)
    X = np.meshgrid(*box.axes(), indexing="ij")
    pos = [x + sh for x, sh in zip(X, shift)]
    inside = np.zeros(box.shape, bool)
    dist2 = np.full(box.shape, np.inf)
    for c in cubes:
        in_c = np.ones(box.shape, bool)
        dd = 0.0
        for x, ci in zip(pos, c):
            in_c &= (x > ci) & (x < ci + 1)
            dd = dd + np.maximum(np.maximum(ci - x, x - ci - 1), 0.0) ** 2
        inside |= in_c
        dist2 = np.minimum(dist2, dd)
    return box, DomainMask(box, inside), DomainMask(box, dist2 < collar**2)


@dataclass
class Lup1Result:
    value: float
    restart_values: list
    worst: GridFunction
    cells_per_side: int
    hardy: bool

    def to_json(self):
        return {"value": self.value, "restart_values": self.restart_values,
                "cells_per_side": self.cells_per_side, "hardy": self.hardy,
                "empirical": True}


def lup1_box(d: int, cells_per_side: int, side: float = 1.0):
    """Cube Q = [-side/2, side/2]^d inside a box of twice its side."""
    box = BoxSpec.cube(d, 2 * side, 2 * cells_per_side)
    X = np.meshgrid(*box.axes(), indexing="ij")
    m = np.ones(box.shape, bool)
    for x in X:
        m &= np.abs(x) < side / 2
    return box, DomainMask(box, m)


def lup1_required_constant(u: np.ndarray, box, spec, cube, vw=None, form=None):
    """Smallest C with K >= P'/C - C M' for this trial, and its gradient in u."""
    hd, d = box.cell_volume, box.d
    q, p = 2 * spec.s / d, gn_exponent(spec.s, d)
    m = _mask_array(cube).astype(float)
    vol = float(m.sum() * hd)
    form = form or DomainForm(box, spec, cube)
    K, dK = _kinetic(form, vw, u, hd)
    MQ = float(np.sum(m * u * u) * hd)
    up = np.abs(u) ** (2 * p - 2) * u * m
    PQ = float(np.sum(up * u) * hd)
    Pp, Mp = PQ * MQ**-q, MQ / vol**q
    S = math.sqrt(K * K + 4 * Mp * Pp)
    c = (-K + S) / (2 * Mp)
    dMQ, dPQ = 2 * hd * u * m, 2 * p * hd * up
    dPp = dPQ * MQ**-q - q * PQ * MQ ** (-q - 1) * dMQ
    dMp = dMQ / vol**q
    dc = (-1 + K / S) / (2 * Mp) * dK + dPp / S + (Pp / S - c) / Mp * dMp
    return c, dc


def estimate_lup1_constant(s: float, d: int, params: OptimizerParams | None = None,
                           cells_per_side: int = 32, modes: int = 6, hardy: bool = False,
                           side: float = 1.0) -> Lup1Result:
    """Empirical C of the first local uncertainty bound on a cube.

    Per trial u the smallest admissible C solves C^2 M' + C K - P' = 0 with
    K the seminorm on Q, P' = P_Q / M_Q^(2s/d), M' = M_Q / |Q|^(2s/d); the
    positive root is maximized over band-limited fields plus the constant.
    With ``hardy`` the cube is centered at 0 and C_{s,d} int_Q |u|^2/|x|^(2s)
    is subtracted from K.
    """
    params = params or OptimizerParams(max_iters=400, restarts=4)
    box, cube = lup1_box(d, cells_per_side, side)
    spec = SeminormSpec(s, d)
    form = DomainForm(box, spec, cube)
    vw = hardy_constant(s, d).value * hardy_weight(box, s) * cube.mask if hardy else None
    basis = BandBasis(box, modes)

    def objective(c):
        u = basis.to_field(c)
        if float(np.sum(cube.mask * u * u)) < 1e-14:
            return 1e6, np.zeros_like(c)
        val, g = lup1_required_constant(u, box, spec, cube, vw, form)
        return -val, basis.grad_back(-g)

    centers = [tuple([0.5] * d), tuple([0.3] * d), tuple([0.7] + [0.5] * (d - 1))]
    starts = _starts(basis, box, params, centers, [0.04, 0.06, 0.03])
    best, bestc, vals = _adversarial(objective, basis, starts, params)
    best = max(best, 1.0)
    return Lup1Result(best, vals, GridFunction(box, basis.to_field(bestc)), cells_per_side, hardy)


def lup1_violation(C: float, u: GridFunction, s: float, cube, hardy: bool = False) -> float:
    """RHS - LHS of the first local uncertainty bound (positive = violated)."""
    spec = SeminormSpec(s, u.box.d)
    vw = hardy_constant(s, u.box.d).value * hardy_weight(u.box, s) * _mask_array(cube) \
        if hardy else None
    form = DomainForm(u.box, spec, cube)
    v = np.real(u.values)
    K, _ = _kinetic(form, vw, v, u.box.cell_volume)
    m = _mask_array(cube)
    hd, q = u.box.cell_volume, 2 * s / u.box.d
    MQ = float(np.sum(v[m] ** 2) * hd)
    PQ = float(np.sum(np.abs(v[m]) ** (2 * gn_exponent(s, u.box.d))) * hd)
    vol = float(m.sum() * hd)
    return PQ / MQ**q / C - C * MQ / vol**q - K


# ------------------------------------------------------ improved Hardy bound

def _frank_operator(box: BoxSpec, s: float, t: float, ell: float):
    ch = hardy_constant(s, box.d).value
    mult = ell ** (s - t) * symbol(box, t) - symbol(box, s)
    pot = ch * hardy_weight(box, s)

    def mv(x):
        x = x.reshape(box.shape)
        return (ifftn(fftn(x) * mult).real + pot * x).ravel()

    return LinearOperator((box.size, box.size), matvec=mv, dtype=float)


def calibrate_frank(s: float, t: float, box: BoxSpec, ells=(0.1, 1.0, 10.0),
                    safety: float = 1e-6) -> dict:
    """C_{d,s,t} = max over ell of lambda_max(ell^(s-t)(-Delta)^t - (-Delta)^s + C|x|^(-2s)) / ell^s.

    The top eigenvalue of the discretized operator is computed with a Lanczos
    solver, so the constant is exact for the discretization on ``box`` and the
    calibrated ell values; ``safety`` is a relative margin.
    """
    _check_frank_range(s, t, box.d)
    per = {}
    for ell in ells:
        lam = eigsh(_frank_operator(box, s, t, ell), k=1, which="LA", tol=1e-10,
                    return_eigenvectors=False)[0]
        per[float(ell)] = float(lam) / ell**s
    c = max(per.values())
    return {"value": c * (1 + safety) if c > 0 else c * (1 - safety), "per_ell": per,
            "box": box.to_json()}


def _check_frank_range(s, t, d):
    if not (0 < t < s and 2 * s < d):
        raise ValueError("requires 0 < t < s < d/2")


def check_frank_improvement(s: float, t: float, ell: float, u: GridFunction, c_dst: float,
                            tol: float = 1e-9):
    """Evaluate (-Delta)^s - C|x|^(-2s) >= ell^(s-t)(-Delta)^t - C_{d,s,t} ell^s on u.

    Returns (holds, margin) with margin = LHS - RHS.
    """
    _check_frank_range(s, t, u.box.d)
    if not ell > 0:
        raise ValueError("ell must be positive")
    box = u.box
    ch = hardy_constant(s, box.d).value
    n2 = u.norm2()
    lhs = kinetic_form(u.values, box, s) - ch * float(
        np.sum(np.abs(u.values) ** 2 * hardy_weight(box, s)) * box.cell_volume)
    rhs = ell ** (s - t) * kinetic_form(u.values, box, t) - c_dst * ell**s * n2
    margin = lhs - rhs
    return bool(margin >= -tol * max(1.0, abs(lhs), abs(rhs))), float(margin)
