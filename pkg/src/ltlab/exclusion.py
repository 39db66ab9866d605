"""Local exclusion lower bound on the repulsive pair interaction.

For families of regions Omega_{n,m} with diam <= R_n and overlap at most C_n,

    <sum_{i<j} |x_i - x_j|^(-2s)> >= sum_n (R_n^(-2s) - R_{n-1}^(-2s)) / (2 C_n)
                                        * sum_m M_{n,m} (M_{n,m} - 1),

with R_0 = infinity and M_{n,m} the mass of Omega_{n,m}.  Families are built
from the heavy cubes of a covering: balls B(c_Q, R_n / 2) with
R_n = 2 sqrt(d) (1/delta + 2) eps^n, in physical units of the root box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ltlab.covering import Decomposition
from ltlab.grid_core import BoxSpec, GridFunction


def pair_kernel(r, s: float, h: float):
    """|x|^(-2s) with coincident cells regularized to |x| = h/2."""
    return np.maximum(np.asarray(r, float), h / 2) ** (-2 * s)


@dataclass
class BallFamily:
    level: int
    radius: float
    overlap: int
    masses: list
    centers: list = field(default_factory=list)
    masks: list = field(default_factory=list, repr=False)

    def to_json(self):
        return {"level": self.level, "radius": self.radius, "overlap": self.overlap,
                "masses": self.masses, "centers": self.centers}


@dataclass
class BallFamilySet:
    families: list
    dropped: list = field(default_factory=list)

    @classmethod
    def from_masses(cls, radii, masses, overlaps) -> "BallFamilySet":
        """Family set from per-scale radii, region masses and overlap counts."""
        fams = [BallFamily(n + 1, float(R), int(C), [float(m) for m in ms])
                for n, (R, ms, C) in enumerate(zip(radii, masses, overlaps))]
        return cls(fams)

    def to_json(self):
        return {"families": [f.to_json() for f in self.families], "dropped": self.dropped}


def scale_terms(fams: BallFamilySet, s: float) -> list:
    """Per-scale contributions of the exclusion bound."""
    radii = [f.radius for f in fams.families]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    out, prev = [], math.inf
    for f in fams.families:
        w = f.radius ** (-2 * s) - (0.0 if math.isinf(prev) else prev ** (-2 * s))
        excess = sum(m * (m - 1) for m in f.masses)
        out.append(0.0 if f.overlap == 0 or not f.masses else w * excess / (2 * f.overlap))
        prev = f.radius
    return out


def exclusion_lower_bound(fams: BallFamilySet, s: float) -> float:
    return float(sum(scale_terms(fams, s)))


def exclusion_radius(n: int, delta: float, d: int, n0: int, side: float = 1.0) -> float:
    """R_n = 2 sqrt(d) (1/delta + 2) eps^n times the root side."""
    return 2 * math.sqrt(d) * (1 / delta + 2) * side / n0**n


def build_ball_families(dec: Decomposition, rho: GridFunction, delta: float | None = None
                        ) -> BallFamilySet:
    """Balls B(c_Q, R_n/2) around every heavy cube Q at levels n >= 1.

    Balls are rasterized on the density grid by the cell-center rule, so the
    diameter of every ball is below R_n.  Balls whose rasterized mass falls
    below 1 + delta are dropped and listed in ``dropped``.
    """
    delta = dec.params.delta if delta is None else delta
    box: BoxSpec = rho.box
    d, n0, L = box.d, dec.n0, box.lengths[0]
    vals = np.clip(np.real(np.asarray(rho.values)), 0.0, None) * box.cell_volume
    X = np.meshgrid(*box.axes(), indexing="ij", sparse=True)
    fams, dropped = [], []
    levels = sorted(n for n, rec in dec.levels.items() if n >= 1)
    last = max([n for n in levels if dec.levels[n].heavy], default=0)
    for n in range(1, last + 1):
        R = exclusion_radius(n, delta, d, n0, L)
        rec = dec.levels.get(n)
        count = np.zeros(box.shape, np.int32)
        masses, centers, masks = [], [], []
        for K in (rec.heavy if rec else []):
            for Q in K.cubes:
                c = [lo + float(ci) * L for lo, ci in zip(box.lo, Q.center)]
                r2 = sum((x - cc) ** 2 for x, cc in zip(X, c))
                m = r2 < (R / 2) ** 2
                mass = float(vals[m].sum())
                if mass < 1 + delta:
                    dropped.append({"level": n, "center": c, "mass": mass})
                    continue
                count += m
                masses.append(mass)
                centers.append(c)
                masks.append(m)
        fams.append(BallFamily(n, R, int(count.max()) if masses else 0, masses, centers, masks))
    return BallFamilySet(fams, dropped)


def interaction_expectation(state, s: float, lam: float) -> float:
    """lambda * sum_{i<j} <|x_i - x_j|^(-2s)> for an N-body grid state."""
    from ltlab.nbody import interaction_energy

    return lam * interaction_energy(state, s)
