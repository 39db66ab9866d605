"""Few-body states on tensor grids and their energy quotients.

A state is either a full tensor over the N*d particle coordinates (particle i
owns axes i*d .. i*d + d - 1) or a product of N one-body factors.  Product
states keep the d = 3 two-body trial constructions within desk-scale memory.
No symmetry is imposed on either representation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from ltlab.analytic_constants import hardy_constant
from ltlab.exclusion import pair_kernel
from ltlab.grid_core import (
    BoxSpec,
    GridFunction,
    _ksq,
    fftn,
    hardy_weight,
    kinetic_form,
    shift,
)
from ltlab import grid_core

MAX_TENSOR = 1 << 25


class OverlapWarning(UserWarning):
    """Trial factors overlap more than the separation tolerance."""


@dataclass
class NBodyState:
    """Normalized N-body wave function on the N-fold product of ``box``."""

    N: int
    box: BoxSpec
    values: np.ndarray | None = None
    factors: list | None = None

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")
        if (self.values is None) == (self.factors is None):
            raise ValueError("give exactly one of values or factors")
        hd = self.box.cell_volume
        if self.values is not None:
            shape = self.box.shape * self.N
            if int(np.prod(shape)) > MAX_TENSOR:
                raise ValueError("tensor grid too large; use a product state")
            v = np.asarray(self.values).reshape(shape)
            if not np.all(np.isfinite(v)):
                raise ValueError("non-finite state values")
            nrm = float(np.sum(np.abs(v) ** 2)) * hd**self.N
            self.values = v
        else:
            if len(self.factors) != self.N:
                raise ValueError("need one factor per particle")
            fs = [np.asarray(f).reshape(self.box.shape) for f in self.factors]
            nrm = 1.0
            for f in fs:
                nrm *= float(np.sum(np.abs(f) ** 2)) * hd
            self.factors = fs
        if abs(nrm - 1) > 1e-10:
            raise ValueError("state is not normalized")

    @classmethod
    def from_values(cls, N, box, values):
        v = np.asarray(values)
        v = v / math.sqrt(float(np.sum(np.abs(v) ** 2)) * box.cell_volume**N)
        return cls(N, box, values=v)

    @classmethod
    def product(cls, factors, box, full=False):
        fs = [np.asarray(f.values if isinstance(f, GridFunction) else f) for f in factors]
        fs = [f / math.sqrt(float(np.sum(np.abs(f) ** 2)) * box.cell_volume) for f in fs]
        st = cls(len(fs), box, factors=fs)
        return st.to_full() if full else st

    @property
    def is_product(self) -> bool:
        return self.factors is not None

    def to_full(self) -> "NBodyState":
        if not self.is_product:
            return self
        v = self.factors[0]
        for f in self.factors[1:]:
            v = np.multiply.outer(v, f)
        return NBodyState(self.N, self.box, values=v)


def _particle_axes(i, d):
    return tuple(range(i * d, (i + 1) * d))


def density(state: NBodyState) -> GridFunction:
    """One-body density sum_j int |Psi|^2 over all coordinates but x_j."""
    box, d, hd = state.box, state.box.d, state.box.cell_volume
    if state.is_product:
        rho = sum(np.abs(f) ** 2 for f in state.factors)
    else:
        a2 = np.abs(state.values) ** 2
        rho = 0.0
        for j in range(state.N):
            others = tuple(ax for i in range(state.N) if i != j for ax in _particle_axes(i, d))
            rho = rho + a2.sum(axis=others) * hd ** (state.N - 1)
    return GridFunction(box, np.asarray(rho, float))


def kinetic_expectation(state: NBodyState, s: float) -> float:
    """sum_i <Psi, (-Delta_{x_i})^s Psi>."""
    box = state.box
    if state.is_product:
        return float(sum(kinetic_form(f, box, s) for f in state.factors))
    k2 = _ksq(box)
    w = 0.0
    for i in range(state.N):
        shape = [1] * (state.N * box.d)
        for a in range(box.d):
            shape[i * box.d + a] = box.points[a]
        w = w + (k2**s).reshape(shape)
    vh = sfft.fftn(state.values, workers=grid_core._WORKERS)
    ntot = state.values.size
    return float(np.sum(w * np.abs(vh) ** 2) * box.cell_volume**state.N / ntot)


def hardy_potential_expectation(state: NBodyState, s: float) -> float:
    """C_{s,d} sum_i <|x_i|^(-2s)> = C_{s,d} int rho |x|^(-2s)."""
    box = state.box
    ch = hardy_constant(s, box.d).value
    rho = density(state).values
    return ch * float(np.sum(rho * hardy_weight(box, s)) * box.cell_volume)


def hardy_expectation(state: NBodyState, s: float) -> float:
    """sum_i <(-Delta_{x_i})^s - C_{s,d} |x_i|^(-2s)>."""
    return kinetic_expectation(state, s) - hardy_potential_expectation(state, s)


def _offset_kernel(box: BoxSpec, s: float) -> np.ndarray:
    """Kernel on all cell-center offsets, laid out for zero-padded convolution."""
    h = box.h
    axes = []
    for n in box.points:
        o = np.arange(2 * n)
        axes.append(np.where(o < n, o, o - 2 * n) * h)
    X = np.meshgrid(*axes, indexing="ij", sparse=True)
    return pair_kernel(np.sqrt(sum(x**2 for x in X)), s, h)


def _pair_product(a: np.ndarray, b: np.ndarray, box: BoxSpec, s: float) -> float:
    """sum_x sum_y a(x) b(y) k(x - y) h^(2d), by zero-padded FFT convolution."""
    shp = tuple(2 * n for n in box.points)
    w = grid_core._WORKERS
    kh = sfft.rfftn(_offset_kernel(box, s), shp, workers=w)
    conv = sfft.irfftn(sfft.rfftn(b, shp, workers=w) * kh, shp, workers=w)
    sl = tuple(slice(0, n) for n in box.points)
    return float(np.sum(a * conv[sl]) * box.cell_volume**2)


def interaction_energy(state: NBodyState, s: float) -> float:
    """sum_{i<j} <|x_i - x_j|^(-2s)> with the half-cell regularized kernel."""
    box, d = state.box, state.box.d
    if state.is_product:
        dens = [np.abs(f) ** 2 for f in state.factors]
        return float(sum(_pair_product(dens[i], dens[j], box, s)
                         for i in range(state.N) for j in range(i + 1, state.N)))
    a2 = np.abs(state.values) ** 2
    n1 = box.size
    X = np.stack([x.ravel() for x in np.meshgrid(*box.axes(), indexing="ij")], axis=1)
    dist = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
    K = pair_kernel(dist, s, box.h)
    total = 0.0
    for i in range(state.N):
        for j in range(i + 1, state.N):
            others = tuple(ax for m in range(state.N) if m not in (i, j)
                           for ax in _particle_axes(m, d))
            pm = a2.sum(axis=others) if others else a2
            pm = pm.reshape(n1, n1) * box.cell_volume ** (state.N - 2)
            total += float(np.sum(pm * K)) * box.cell_volume**2
    return total


@dataclass
class QuotientParams:
    s: float
    lam: float = 1.0
    hardy: bool = False

    def __post_init__(self):
        if not self.s > 0:
            raise ValueError("order s must be positive")
        if self.lam < 0:
            raise ValueError("coupling must be nonnegative")


def quotient_parts(state: NBodyState, params: QuotientParams) -> dict:
    """Numerator pieces and denominator of the energy quotient."""
    s, d = params.s, state.box.d
    p = 1 + 2 * s / d
    kin = kinetic_expectation(state, s)
    hard = hardy_potential_expectation(state, s) if params.hardy else 0.0
    inter = interaction_energy(state, s) if state.N > 1 else 0.0
    rho = density(state).values
    den = float(np.sum(np.abs(rho) ** p) * state.box.cell_volume)
    return {"kinetic": kin, "hardy": hard, "interaction": inter, "denominator": den}


def lt_quotient(state: NBodyState, params: QuotientParams, parts: dict | None = None) -> float:
    """[kinetic (- Hardy) + lambda * interaction] / int rho^(1 + 2s/d)."""
    parts = parts or quotient_parts(state, params)
    if not parts["denominator"] > 0:
        raise ValueError("zero denominator")
    num = parts["kinetic"] - parts["hardy"] + params.lam * parts["interaction"]
    return num / parts["denominator"]


# -------------------------------------------------------------- trial states

def trial_separated(u_list, centers, box: BoxSpec | None = None, tol: float = 1e-6
                    ) -> NBodyState:
    """Product of translated one-body functions u_i(x_i - c_i)."""
    box = box or u_list[0].box
    fs = []
    for u, c in zip(u_list, centers):
        if u.box != box:
            raise ValueError("all factors must live on the target box")
        f = shift(u, c).values
        fs.append(f / math.sqrt(float(np.sum(np.abs(f) ** 2)) * box.cell_volume))
    hd = box.cell_volume
    for i in range(len(fs)):
        for j in range(i + 1, len(fs)):
            ov = float(np.sum(np.abs(fs[i]) * np.abs(fs[j])) * hd)
            if ov > tol:
                warnings.warn(f"factors {i} and {j} overlap by {ov:.3g}", OverlapWarning,
                              stacklevel=2)
    return NBodyState(len(fs), box, factors=fs)


def rms_width(u: GridFunction) -> float:
    a2 = np.abs(u.values) ** 2
    m = a2.sum()
    X = u.box.mesh()
    c = [float(np.sum(a2 * x) / m) for x in X]
    return math.sqrt(float(sum(np.sum(a2 * (x - cc) ** 2) for x, cc in zip(X, c)) / m))


def _trig_eval_matrix(box: BoxSpec, axis: int, t: np.ndarray) -> np.ndarray:
    """Rows evaluate the trigonometric interpolant along one axis at points t."""
    n, lo, L = box.points[axis], box.lo[axis], box.lengths[axis]
    k = 2 * np.pi * sfft.fftfreq(n, box.h)
    # Nyquist mode split symmetrically so real data gives real values
    E = np.exp(1j * np.outer(t - lo - box.h / 2, k)) / n
    E[:, n // 2] = np.cos(k[n // 2] * (t - lo - box.h / 2)) / n
    inside = (t >= lo) & (t < lo + L)
    E[~inside] = 0.0
    return E


def dilate(v: GridFunction, target: BoxSpec, z, ell: float) -> np.ndarray:
    """ell^(d/2) v(ell * wrap(y - z)) sampled on ``target``.

    ``wrap`` maps y - z into the periodic cell of ``target`` centered at 0.
    """
    vh = fftn(v.values)
    d = v.box.d
    z = np.broadcast_to(np.asarray(z, float), (d,))
    out = vh
    for a in range(d):
        y = target.axes()[a]
        Lt = target.lengths[a]
        w = (y - z[a] + Lt / 2) % Lt - Lt / 2
        E = _trig_eval_matrix(v.box, a, ell * w)
        out = np.moveaxis(np.tensordot(E, np.moveaxis(out, a, 0), axes=(1, 0)), 0, a)
    out = out * ell ** (d / 2)
    return out.real if np.isrealobj(v.values) else out


def trial_hardy_pair(u: GridFunction, v: GridFunction, z, ell: float) -> NBodyState:
    """Product state u(x) v_ell(y - z) with v_ell(x) = ell^(d/2) v(ell x)."""
    if not ell > 0:
        raise ValueError("ell must be positive")
    if rms_width(v) / ell < 4 * u.box.h:
        raise ValueError("rescaled v is under-resolved (width < 4h)")
    vl = dilate(v, u.box, z, ell)
    return NBodyState.product([u.values, vl], u.box)


def random_state(N: int, box: BoxSpec, rng: np.random.Generator, terms: int = 3,
                 width_range=(0.03, 0.2)) -> NBodyState:
    """Smooth random full-tensor state: a sum of random Gaussian products.

    Widths are fractions of the box side and centers lie in the middle half.
    The default widths need not decay at the boundary; states meant to stand
    for functions on R^d should use widths below about L/16.
    """
    L = box.lengths[0]
    X = box.mesh()
    out = 0.0
    for _ in range(terms):
        prod = None
        for _ in range(N):
            c = [lo + l * rng.uniform(0.25, 0.75) for lo, l in zip(box.lo, box.lengths)]
            w = L * rng.uniform(*width_range)
            g = np.exp(-sum((x - cc) ** 2 for x, cc in zip(X, c)) / (2 * w * w))
            g = g * np.ones(box.shape)
            if rng.random() < 0.5:
                k = rng.integers(1, 4)
                g = g * np.cos(2 * np.pi * k * (X[0] - c[0]) / (4 * w))
            prod = g if prod is None else np.multiply.outer(prod, g)
        out = out + rng.normal() * prod
    return NBodyState.from_values(N, box, out)


def bosonic_floor(state: NBodyState, s: float, gn_constant: float) -> tuple:
    """Check sum_i <(-Delta_i)^s> >= C_GN N^(-2s/d) int rho^(1+2s/d).

    Returns (holds within 1e-6 relative, lhs, rhs).
    """
    d = state.box.d
    lhs = kinetic_expectation(state, s)
    rho = density(state).values
    rhs = gn_constant * state.N ** (-2 * s / d) * float(
        np.sum(rho ** (1 + 2 * s / d)) * state.box.cell_volume)
    return bool(lhs >= rhs * (1 - 1e-6)), lhs, rhs
