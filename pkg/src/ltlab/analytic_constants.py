"""Closed-form constants.

Semiclassical constant, sharp Hardy constant, the normalization of the
Gagliardo double integral, the d=1, s=1 Gagliardo-Nirenberg reference value
and the cubic-lattice Epstein zeta function used by the quadrature
corrections in :mod:`ltlab.grid_core`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath


@dataclass(frozen=True)
class ConstantValue:
    """A named positive constant together with the formula it came from."""

    name: str
    value: float
    provenance: str

    def __float__(self) -> float:
        return float(self.value)


def unit_ball_volume(d: int) -> float:
    """Lebesgue measure of the unit ball in ``d`` dimensions."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def semiclassical_constant(d: int) -> ConstantValue:
    """K_cl(d) = d/(d+2) * 4 pi^2 / |B(0,1)|^(2/d)."""
    if int(d) != d or d < 1:
        raise ValueError("dimension must be a positive integer")
    val = d / (d + 2) * 4 * math.pi**2 / unit_ball_volume(d) ** (2 / d)
    return ConstantValue(f"semiclassical_constant(d={d})", val,
                         "d/(d+2)*4pi^2/|B1|^(2/d)")


def hardy_constant(s: float, d: int) -> ConstantValue:
    """Sharp constant of (-Delta)^s >= C |x|^(-2s), valid for 0 < 2s < d."""
    if not 0 < 2 * s < d:
        raise ValueError("Hardy regime requires 2s < d")
    ratio = math.gamma((d + 2 * s) / 4) / math.gamma((d - 2 * s) / 4)
    return ConstantValue(f"hardy_constant(s={s}, d={d})", 2 ** (2 * s) * ratio**2,
                         "2^(2s)*(Gamma((d+2s)/4)/Gamma((d-2s)/4))^2")


def gn_reference_1d() -> ConstantValue:
    """Sharp Gagliardo-Nirenberg constant for s=1, d=1.

    The optimizer is Q(x) = 3^(1/4) sech^(1/2)(2x) with int Q^2 = pi sqrt(3)/2,
    int Q'^2 = pi sqrt(3)/4 and int Q^6 = 3 pi sqrt(3)/4, so that
    int Q'^2 (int Q^2)^2 / int Q^6 = pi^2/4.
    """
    return ConstantValue("gn_reference_1d", math.pi**2 / 4, "quintic soliton, Weinstein")


def frac_norm_constant(d: int, sigma: float) -> float:
    """c_{d,sigma} with c * iint |f(x)-f(y)|^2/|x-y|^(d+2 sigma) = int |p|^(2 sigma)|f^|^2."""
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    return (2 ** (2 * sigma - 1) * math.pi ** (-d / 2) * math.gamma(d / 2 + sigma)
            / abs(math.gamma(-sigma)))


@lru_cache(maxsize=64)
def epstein_zeta(d: int, s: float) -> float:
    """Analytically continued sum over nonzero n in Z^d of |n|^(-s), for s < d.

    Uses the theta-function splitting at t = 1; the lattice Z^d is self dual so
    both halves are incomplete-gamma sums that converge like exp(-pi |n|^2).
    """
    if s >= d:
        raise ValueError("continuation implemented for s < d only")
    if abs(s) < 1e-14:
        return -1.0
    mpmath.mp.dps = 30
    a, b = mpmath.mpf(s) / 2, (d - mpmath.mpf(s)) / 2
    rng = range(-5, 6)
    total = mpmath.mpf(0)
    # group lattice points by |n|^2
    counts: dict[int, int] = {}
    for idx in _lattice(d, rng):
        r2 = sum(i * i for i in idx)
        if r2:
            counts[r2] = counts.get(r2, 0) + 1
    for r2, c in counts.items():
        x = mpmath.pi * r2
        total += c * (mpmath.gammainc(a, x) / x**a + mpmath.gammainc(b, x) / x**b)
    total += -1 / a - 1 / b
    return float(total * mpmath.pi**a / mpmath.gamma(a))


def _lattice(d, rng):
    if d == 1:
        for i in rng:
            yield (i,)
        return
    for i in rng:
        for rest in _lattice(d - 1, rng):
            yield (i,) + rest


def all_constants() -> dict:
    """Every exposed constant as a JSON-ready mapping."""
    out = {}
    for d in (1, 2, 3):
        c = semiclassical_constant(d)
        out[c.name] = c.value
    for s, d in ((1.0, 3), (0.5, 3), (1.0, 4), (1.0, 5), (0.5, 2)):
        c = hardy_constant(s, d)
        out[c.name] = c.value
    g = gn_reference_1d()
    out[g.name] = g.value
    return out
