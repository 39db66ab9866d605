"""Periodic tensor grids and spectral fractional Sobolev energies.

Samples sit at cell centers ``lo + (i + 1/2) h`` so that on a box symmetric
about the origin with an even point count no sample coincides with 0.  The
operator (-Delta)^s is the Fourier multiplier |p|^(2s) on the periodic grid.

Domain-restricted seminorms use spectral derivatives followed by masking.  For
fractional order the Gagliardo double integral is a midpoint sum over cell
pairs with the diagonal removed; the missing near-diagonal mass is restored by
a lattice-zeta term proportional to |grad g|^2 in every cell of the domain.
The pair kernel is periodized over the box to match the periodic FFT
realization of the operator.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from scipy import integrate, ndimage, special

from ltlab.analytic_constants import epstein_zeta, frac_norm_constant

_WORKERS = 1
DECAY_TOL = 1e-8


def set_workers(n: int) -> None:
    """Cap the number of threads used by the FFT backend."""
    global _WORKERS
    _WORKERS = max(1, int(n))


def fftn(a, axes=None):
    return sfft.fftn(a, axes=axes, workers=_WORKERS)


def ifftn(a, axes=None):
    return sfft.ifftn(a, axes=axes, workers=_WORKERS)


class BoundaryDecayWarning(UserWarning):
    """Field does not decay at the box boundary; periodic wrap-around may matter."""


class Energy(float):
    """A float carrying a boundary-decay flag."""

    decay_ok: bool = True

    def __new__(cls, value, decay_ok=True):
        obj = super().__new__(cls, value)
        obj.decay_ok = bool(decay_ok)
        return obj


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class BoxSpec:
    """Uniform tensor grid over an axis-aligned box.

    Parameters
    ----------
    d : int
        Spatial dimension, 1, 2 or 3.
    lo, hi : sequence of float
        Per-axis bounds.
    points : sequence of int
        Per-axis sample count; each a power of two, at least 8.
    """

    d: int
    lo: tuple
    hi: tuple
    points: tuple

    def __post_init__(self):
        d = int(self.d)
        lo = tuple(float(v) for v in np.broadcast_to(self.lo, (d,)))
        hi = tuple(float(v) for v in np.broadcast_to(self.hi, (d,)))
        pts = tuple(int(v) for v in np.broadcast_to(self.points, (d,)))
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "points", pts)
        if d not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        for a, b, n in zip(lo, hi, pts):
            if not b > a:
                raise ValueError("hi must exceed lo on every axis")
            if n < 8 or not _is_pow2(n):
                raise ValueError(f"grid size {n} is not a power of two >= 8")
        hs = [(b - a) / n for a, b, n in zip(lo, hi, pts)]
        if max(hs) - min(hs) > 1e-12 * max(hs):
            raise ValueError("grid spacing must agree across axes")

    @classmethod
    def cube(cls, d: int, length: float, points: int, center=0.0) -> "BoxSpec":
        c = np.broadcast_to(np.asarray(center, float), (d,))
        return cls(d, tuple(c - length / 2), tuple(c + length / 2), (points,) * d)

    @property
    def h(self) -> float:
        return (self.hi[0] - self.lo[0]) / self.points[0]

    @property
    def shape(self) -> tuple:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def lengths(self) -> tuple:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    def axes(self) -> list:
        """Cell-center coordinates along each axis."""
        return [a + (np.arange(n) + 0.5) * self.h for a, n in zip(self.lo, self.points)]

    def mesh(self) -> list:
        """Sparse open mesh of cell centers, broadcastable to ``shape``."""
        return np.meshgrid(*self.axes(), indexing="ij", sparse=True)

    def radius(self) -> np.ndarray:
        """|x| at every cell center."""
        return np.sqrt(sum(x**2 for x in self.mesh()))

    def wavevectors(self) -> list:
        return [2 * np.pi * sfft.fftfreq(n, self.h) for n in self.points]

    def scaled(self, factor: float) -> "BoxSpec":
        """Same sample count on the box dilated about the origin."""
        return BoxSpec(self.d, tuple(factor * v for v in self.lo),
                       tuple(factor * v for v in self.hi), self.points)

    def to_json(self) -> dict:
        return {"d": self.d, "lo": list(self.lo), "hi": list(self.hi),
                "points": list(self.points)}


@dataclass
class GridFunction:
    """Complex (or real) field sampled on the cells of ``box``."""

    box: BoxSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.size != self.box.size:
            raise ValueError("values length must equal points^d")
        v = v.reshape(self.box.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite grid values")
        self.values = v

    def norm2(self) -> float:
        """Squared L^2 norm by the rectangle rule."""
        return float(np.sum(np.abs(self.values) ** 2) * self.box.cell_volume)

    def normalized(self) -> "GridFunction":
        return GridFunction(self.box, self.values / math.sqrt(self.norm2()))

    def integral(self, power: float = 1.0, mask=None) -> float:
        """int |u|^power over the box or over a mask."""
        a = np.abs(self.values) ** power
        if mask is not None:
            a = a[_mask_array(mask)]
        return float(np.sum(a) * self.box.cell_volume)

    def copy(self) -> "GridFunction":
        return GridFunction(self.box, self.values.copy())


@dataclass
class DomainMask:
    """Membership of grid cells in a domain."""

    box: BoxSpec
    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.size != self.box.size:
            raise ValueError("mask length must equal points^d")
        self.mask = m.reshape(self.box.shape)
        if not self.mask.any():
            raise ValueError("empty domain")

    @property
    def volume(self) -> float:
        return float(self.mask.sum() * self.box.cell_volume)

    @classmethod
    def from_predicate(cls, box: BoxSpec, pred) -> "DomainMask":
        return cls(box, pred(*np.meshgrid(*box.axes(), indexing="ij")))


def _mask_array(omega) -> np.ndarray:
    m = omega.mask if isinstance(omega, DomainMask) else np.asarray(omega, dtype=bool)
    if not m.any():
        raise ValueError("empty domain")
    return m


@dataclass(frozen=True)
class SeminormSpec:
    """Order s = m + sigma of a homogeneous Sobolev seminorm in dimension d."""

    s: float
    d: int
    m: int = field(default=-1)
    sigma: float = field(default=-1.0)
    c_norm: float = field(default=float("nan"))

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("order s must be positive")
        m = int(math.floor(self.s + 1e-12))
        sigma = self.s - m
        if abs(sigma) < 1e-12:
            sigma = 0.0
        if self.m >= 0 and (self.m != m or abs(self.sigma - sigma) > 1e-12):
            raise ValueError("s must equal m + sigma")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "sigma", float(sigma))
        c = frac_norm_constant(self.d, sigma) if sigma > 0 else 1.0
        object.__setattr__(self, "c_norm", c)

    def multi_indices(self) -> list:
        """(alpha, m!/alpha!) for every multi-index with |alpha| = m."""
        out = []
        for combo in itertools.combinations_with_replacement(range(self.d), self.m):
            alpha = tuple(combo.count(a) for a in range(self.d))
            w = math.factorial(self.m) / math.prod(math.factorial(k) for k in alpha)
            out.append((alpha, w))
        return out


# ---------------------------------------------------------------- spectral ops

@lru_cache(maxsize=32)
def _ksq(box: BoxSpec) -> np.ndarray:
    ks = np.meshgrid(*box.wavevectors(), indexing="ij", sparse=True)
    return sum(k**2 for k in ks)


@lru_cache(maxsize=64)
def symbol(box: BoxSpec, s: float) -> np.ndarray:
    """|p|^(2s) on the discrete periodic wavevectors of ``box``."""
    k2 = _ksq(box)
    out = np.zeros(k2.shape) if s > 0 else np.ones(k2.shape)
    nz = k2 > 0
    out[nz] = k2[nz] ** s
    return out


def spectral_derivative(values: np.ndarray, box: BoxSpec, alpha) -> np.ndarray:
    """D^alpha by Fourier multiplication with prod (i k_a)^alpha_a."""
    if sum(alpha) == 0:
        return values
    mult = 1.0
    for a, (k, order) in enumerate(zip(box.wavevectors(), alpha)):
        if order:
            shape = [1] * box.d
            shape[a] = -1
            mult = mult * ((1j * k) ** order).reshape(shape)
    return ifftn(fftn(values) * mult)


def frac_laplacian_apply(u: GridFunction, s: float) -> GridFunction:
    """(-Delta)^s u via the FFT symbol |p|^(2s)."""
    if not s > 0:
        raise ValueError("order s must be positive")
    out = ifftn(fftn(u.values) * symbol(u.box, s))
    if np.isrealobj(u.values):
        out = out.real
    return GridFunction(u.box, out)


def kinetic_form(values: np.ndarray, box: BoxSpec, s: float) -> float:
    """<u, (-Delta)^s u> on the grid (Parseval)."""
    uh = fftn(values)
    return float(np.sum(symbol(box, s) * np.abs(uh) ** 2) * box.cell_volume / box.size)


def boundary_decay_ok(values: np.ndarray, tol: float = DECAY_TOL) -> bool:
    """True when |u| on the outer cell layer is below ``tol`` times max |u|."""
    a = np.abs(values)
    top = a.max()
    if top == 0:
        return True
    edge = 0.0
    for ax in range(a.ndim):
        edge = max(edge, np.take(a, 0, axis=ax).max(), np.take(a, -1, axis=ax).max())
    return edge <= tol * top


def seminorm_global(u: GridFunction, spec) -> Energy:
    """<u, (-Delta)^s u> in Fourier space, with a boundary-decay flag.

    ``spec`` may be a :class:`SeminormSpec` or a bare order s.
    """
    s = spec.s if isinstance(spec, SeminormSpec) else float(spec)
    ok = boundary_decay_ok(u.values)
    if not ok:
        warnings.warn("field does not decay at the box boundary", BoundaryDecayWarning,
                      stacklevel=2)
    return Energy(max(kinetic_form(u.values, u.box, s), 0.0), ok)


# ---------------------------------------------------- domain-restricted forms

def _tail_integral(d: int, a: float) -> float:
    """int over |y|_inf > 1 of |y|^(-a) dy, for a > d."""
    if d == 1:
        return 2.0 / (a - 1)
    f = (lambda x: (1 + x * x) ** (-a / 2)) if d == 2 else None
    if d == 2:
        face = integrate.quad(f, -1, 1)[0]
    else:
        face = integrate.dblquad(lambda y, x: (1 + x * x + y * y) ** (-a / 2),
                                 -1, 1, -1, 1)[0]
    return 2 * d * face / (a - d)


@lru_cache(maxsize=16)
def periodic_kernel(box: BoxSpec, sigma: float, images: int = 3) -> np.ndarray:
    """Periodized |x|^(-d-2 sigma) at lattice offsets in FFT order, zero at offset 0."""
    d, a = box.d, box.d + 2 * sigma
    L = box.lengths[0]
    if any(abs(l - L) > 1e-12 * L for l in box.lengths):
        raise ValueError("periodized kernel requires equal side lengths")
    n = box.points[0]
    if d == 1:
        j = np.arange(n)
        W = np.zeros(n)
        q = j[1:] / n
        W[1:] = L**-a * (special.zeta(a, q) + special.zeta(a, 1 - q))
        return W
    offs = [np.where(np.arange(n) < n // 2, np.arange(n), np.arange(n) - n) * box.h] * d
    X = np.meshgrid(*offs, indexing="ij", sparse=True)
    W = np.zeros(box.shape)
    for img in itertools.product(range(-images, images + 1), repeat=d):
        r2 = sum((x + i * L) ** 2 for x, i in zip(X, img))
        with np.errstate(divide="ignore"):
            W += np.where(r2 > 0, r2 ** (-a / 2), 0.0)
    R = (images + 0.5) * L
    W += R ** (d - a) * _tail_integral(d, a) / L**d
    W.flat[0] = 0.0
    return W


@lru_cache(maxsize=16)
def _kernel_hat(box: BoxSpec, sigma: float) -> np.ndarray:
    return fftn(periodic_kernel(box, sigma))


def diagonal_weight(d: int, sigma: float, h: float) -> float:
    """Coefficient of h^d sum |grad g|^2 restoring the excluded diagonal cells.

    The diagonal-free midpoint sum of the Gagliardo form misses, to leading
    order in h, -(1/d) Z_d(d + 2 sigma - 2) h^(2 - 2 sigma) |k|^2 per Fourier
    mode, where Z_d is the Epstein zeta function of Z^d.
    """
    return -epstein_zeta(d, d + 2 * sigma - 2) / d * h ** (2 - 2 * sigma)


class DomainForm:
    """Quadratic form u -> ||u||^2_{H^s(Omega)} as a linear operator.

    ``energy(u)`` equals ``h^d Re sum conj(u) * apply(u)``, so that the real
    gradient of the energy with respect to the samples is ``2 h^d apply(u)``.
    """

    def __init__(self, box: BoxSpec, spec: SeminormSpec, omega):
        self.box = box
        self.spec = spec
        self.mask = _mask_array(omega)
        self.fmask = self.mask.astype(float)
        self.terms = spec.multi_indices()
        if spec.sigma > 0:
            self.What = _kernel_hat(box, spec.sigma)
            self.V = ifftn(self.What * fftn(self.fmask)).real * self.fmask
            self.kappa = diagonal_weight(box.d, spec.sigma, box.h)

    def _conv(self, f):
        return ifftn(self.What * fftn(f))

    def _grad(self, g):
        return [spectral_derivative(g, self.box, tuple(int(b == a) for b in range(self.box.d)))
                for a in range(self.box.d)]

    def _frac_apply(self, g):
        hd = self.box.cell_volume
        out = 2 * hd * (self.V * g - self.fmask * self._conv(self.fmask * g))
        for a, dg in enumerate(self._grad(g)):
            e = tuple(int(b == a) for b in range(self.box.d))
            out = out - self.kappa * spectral_derivative(self.fmask * dg, self.box, e)
        return self.spec.c_norm * out

    def _frac_energy(self, g):
        hd = self.box.cell_volume
        pair = np.sum(self.V * np.abs(g) ** 2) - np.real(
            np.sum(np.conj(g) * self.fmask * self._conv(self.fmask * g)))
        diag = sum(np.sum(self.fmask * np.abs(dg) ** 2) for dg in self._grad(g))
        return self.spec.c_norm * (2 * hd * hd * pair + self.kappa * hd * diag)

    def energy(self, values: np.ndarray) -> float:
        hd = self.box.cell_volume
        total = 0.0
        for alpha, w in self.terms:
            g = spectral_derivative(values, self.box, alpha)
            if self.spec.sigma == 0:
                total += w * hd * np.sum(self.fmask * np.abs(g) ** 2)
            else:
                total += w * self._frac_energy(g)
        return float(total)

    def apply(self, values: np.ndarray) -> np.ndarray:
        out = np.zeros(self.box.shape, complex)
        for alpha, w in self.terms:
            g = spectral_derivative(values, self.box, alpha)
            ag = self.fmask * g if self.spec.sigma == 0 else self._frac_apply(g)
            # adjoint of D^alpha is (-1)^|alpha| D^alpha
            out += w * (-1) ** sum(alpha) * spectral_derivative(ag, self.box, alpha)
        return out


def seminorm_domain(u: GridFunction, spec: SeminormSpec, omega) -> float:
    """||u||^2_{H^s(Omega)}: sum over |alpha| = m of (m!/alpha!) times the
    local L^2 norm (sigma = 0) or c_{d,sigma} times the Gagliardo double
    integral over Omega x Omega (sigma > 0) of D^alpha u."""
    if not 0 <= spec.sigma < 1:
        raise ValueError("sigma must lie in [0, 1)")
    return DomainForm(u.box, spec, omega).energy(u.values)


def hardy_energy(u: GridFunction, s: float) -> float:
    """int |u|^2 / |x|^(2s) by the rectangle rule on cell centers."""
    if not 0 < 2 * s < u.box.d:
        raise ValueError("Hardy regime requires 2s < d")
    r = u.box.radius()
    if r.min() <= 0:
        raise ValueError("a cell center coincides with the origin")
    return float(np.sum(np.abs(u.values) ** 2 * r ** (-2 * s)) * u.box.cell_volume)


def hardy_weight(box: BoxSpec, s: float) -> np.ndarray:
    r = box.radius()
    if r.min() <= 0:
        raise ValueError("a cell center coincides with the origin")
    return r ** (-2 * s)


def ims_defect(u: GridFunction, chi: GridFunction, spec: SeminormSpec, omega) -> float:
    """| ||u||^2 - ||chi u||^2 - ||eta u||^2 | on omega with eta = sqrt(1 - chi^2)."""
    c = np.asarray(chi.values)
    if np.iscomplexobj(c):
        if np.abs(c.imag).max() > 1e-12:
            raise ValueError("chi must be real")
        c = c.real
    if c.min() < -1e-12 or c.max() > 1 + 1e-12:
        raise ValueError("chi must take values in [0, 1]")
    c = np.clip(c, 0.0, 1.0)
    eta = np.sqrt(np.clip(1.0 - c**2, 0.0, None))
    form = DomainForm(u.box, spec, omega)
    v = u.values
    return abs(form.energy(v) - form.energy(c * v) - form.energy(eta * v))


# -------------------------------------------------------------- utilities

def smoothstep(t):
    """C-infinity monotone step from 0 (t <= 0) to 1 (t >= 1)."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        g = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1 - t, 1.0)), 0.0)
    return f / (f + g)


def partition_of_unity(omega, omega_tilde):
    """Smooth (chi, eta) with chi^2 + eta^2 = 1, chi = 1 on omega, supp chi in omega_tilde."""
    m_in, m_out = _mask_array(omega), _mask_array(omega_tilde)
    box = omega.box if isinstance(omega, DomainMask) else omega_tilde.box
    d_in = ndimage.distance_transform_edt(~m_in) * box.h
    d_out = ndimage.distance_transform_edt(m_out) * box.h
    t = np.where(m_in, 0.0, d_in / np.maximum(d_in + d_out, 1e-300))
    t = np.where(m_out, t, 1.0)
    theta = 0.5 * np.pi * smoothstep(t)
    return GridFunction(box, np.cos(theta)), GridFunction(box, np.sin(theta))


def shift(u: GridFunction, a) -> GridFunction:
    """u(. - a) by Fourier phase multiplication."""
    ph = 1.0
    for ax, (k, aa) in enumerate(zip(u.box.wavevectors(), np.broadcast_to(a, (u.box.d,)))):
        shape = [1] * u.box.d
        shape[ax] = -1
        ph = ph * np.exp(-1j * k * aa).reshape(shape)
    out = ifftn(fftn(u.values) * ph)
    if np.isrealobj(u.values):
        out = out.real
    return GridFunction(u.box, out)


def gaussian(box: BoxSpec, center=0.0, width=1.0) -> GridFunction:
    """exp(-|x - c|^2 / (2 w^2)), normalized in L^2."""
    c = np.broadcast_to(np.asarray(center, float), (box.d,))
    r2 = sum((x - cc) ** 2 for x, cc in zip(box.mesh(), c))
    return GridFunction(box, np.exp(-r2 / (2 * width**2)) * np.ones(box.shape)).normalized()
