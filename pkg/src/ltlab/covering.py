"""Stopping-time decomposition of the root cube into leveled cubes and clusters.

The root box of the density is identified with [0, 1]^d.  At level n every
cube of a heavy cluster splits into n0^d children of side n0^(-n); children of
mass at most delta go to G^{n,0}, the rest are grouped into corner-adjacency
clusters which are light when the mass of their closure
{x : dist(x, Omega_K) < eps^n / 4} is below 1 + delta and heavy otherwise.

Cube masses come from a mass grid that is n0^(L + extra) cells per axis, L
being the deepest level.  Its cell masses are differences of the cumulative
mass function of the piecewise-constant density, so they are exact for every
n0 even when cube faces do not fall on density-cell faces.  Closures are
rasterized on the level-(n + extra) subgrid by the cell-center rule.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import ndimage

from ltlab.grid_core import BoxSpec, GridFunction

#: the deepest mass grid allowed, in cells
MAX_FINE_CELLS = 1 << 24


@dataclass
class CoveringParams:
    epsilon_inv: int = 2
    delta: float = 0.1
    max_level: int | None = None
    hardy_mode: bool = False
    allow_even_hardy: bool = False

    def __post_init__(self):
        if int(self.epsilon_inv) != self.epsilon_inv or self.epsilon_inv < 2:
            raise ValueError("epsilon_inv must be an integer >= 2")
        self.epsilon_inv = int(self.epsilon_inv)
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.hardy_mode and not self.allow_even_hardy:
            if self.epsilon_inv % 2 == 0 or self.epsilon_inv < 3:
                raise ValueError("hardy mode requires an odd epsilon_inv >= 3")
        if self.max_level is not None and self.max_level < 1:
            raise ValueError("max_level must be at least 1")

    @property
    def extra(self) -> int:
        """Subdivisions below a level used to rasterize its closures."""
        return 2 if self.epsilon_inv == 2 else 1

    def to_json(self):
        return {"epsilon_inv": self.epsilon_inv, "delta": self.delta,
                "max_level": self.max_level, "hardy_mode": self.hardy_mode}


@dataclass(frozen=True, order=True)
class Cube:
    """Cube of side n0^(-level) with integer position ``index`` in [0, 1]^d."""

    level: int
    index: tuple
    n0: int = 2

    @property
    def side(self) -> Fraction:
        return Fraction(1, self.n0**self.level)

    @property
    def lo(self) -> tuple:
        return tuple(Fraction(i, self.n0**self.level) for i in self.index)

    @property
    def center(self) -> tuple:
        s = self.side
        return tuple(a + s / 2 for a in self.lo)

    def children(self):
        for off in itertools.product(range(self.n0), repeat=len(self.index)):
            yield Cube(self.level + 1,
                       tuple(self.n0 * i + o for i, o in zip(self.index, off)), self.n0)

    def dist2_to(self, point) -> Fraction:
        """Squared Euclidean distance from a point to the closed cube (exact)."""
        s, total = self.side, Fraction(0)
        for a, p in zip(self.lo, point):
            gap = max(a - p, p - a - s, Fraction(0))
            total += gap * gap
        return total

    def to_json(self):
        return {"level": self.level, "index": list(self.index)}


@dataclass
class Cluster:
    level: int
    cubes: list
    kind: str
    support_mass: float
    closure_mass: float
    closure_cells: np.ndarray = field(repr=False, default=None)

    def to_json(self):
        return {"level": self.level, "kind": self.kind,
                "cubes": [list(c.index) for c in self.cubes],
                "support_mass": self.support_mass, "closure_mass": self.closure_mass}


@dataclass
class LevelRecord:
    g0: list = field(default_factory=list)
    light: list = field(default_factory=list)
    heavy: list = field(default_factory=list)
    g0_masses: list = field(default_factory=list)


class MassGrid:
    """Exact cell masses of a piecewise-constant field on n0-adic subgrids."""

    def __init__(self, box: BoxSpec, values: np.ndarray, n0: int, depth: int):
        self.n0, self.depth, self.d = n0, depth, box.d
        nf = n0**depth
        if nf**box.d > MAX_FINE_CELLS:
            raise ValueError("mass grid too large; lower max_level")
        C = np.asarray(values, float) * box.cell_volume
        for ax in range(box.d):
            C = np.cumsum(C, axis=ax)
            C = np.concatenate([np.zeros_like(np.take(C, [0], axis=ax)), C], axis=ax)
        n = box.points[0]
        t = np.arange(nf + 1) * (n / nf)
        i0 = np.minimum(np.floor(t).astype(int), n - 1)
        fr = t - i0
        F = C
        for ax in range(box.d):
            shape = [1] * box.d
            shape[ax] = -1
            w = fr.reshape(shape)
            F = np.take(F, i0, axis=ax) * (1 - w) + np.take(F, i0 + 1, axis=ax) * w
        for ax in range(box.d):
            F = np.diff(F, axis=ax)
        self.fine = F
        self._cache = {depth: F}

    def level(self, n: int) -> np.ndarray:
        """Masses of all level-n cubes as an array of shape (n0^n,)*d."""
        if n not in self._cache:
            b = self.n0 ** (self.depth - n)
            m = self.n0**n
            shp = []
            for _ in range(self.d):
                shp += [m, b]
            self._cache[n] = self.fine.reshape(shp).sum(axis=tuple(range(1, 2 * self.d, 2)))
        return self._cache[n]


def closure_structure(d: int, n0: int, extra: int) -> np.ndarray:
    """Offsets (in level-(n + extra) cells) whose centers lie within eps^n/4 of a cell."""
    r = n0**extra / 4.0
    k = int(math.ceil(r + 0.5))
    rng = np.arange(-k, k + 1)
    g = np.meshgrid(*([rng] * d), indexing="ij")
    dist2 = sum(np.maximum(np.abs(o) - 0.5, 0.0) ** 2 for o in g)
    return dist2 < r * r


@dataclass
class Decomposition:
    levels: dict
    residual: list
    params: CoveringParams
    box: BoxSpec
    depth: int
    masses: MassGrid = field(repr=False, default=None)

    @property
    def n0(self):
        return self.params.epsilon_inv

    def terminal_cubes(self):
        """G^{n,0} cubes, light-cluster cubes and residual cubes."""
        out = []
        for rec in self.levels.values():
            out += rec.g0
            for K in rec.light:
                out += K.cubes
        return out + list(self.residual)

    def cube_mask(self, cubes, level_res: int) -> np.ndarray:
        """Boolean mask at level ``level_res`` covering the given cubes."""
        m = self.n0**level_res
        mask = np.zeros((m,) * self.box.d, bool)
        for c in cubes:
            f = self.n0 ** (level_res - c.level)
            mask[tuple(slice(i * f, (i + 1) * f) for i in c.index)] = True
        return mask

    def closure_mask(self, cluster: Cluster) -> np.ndarray:
        """Closure of a cluster on the level-(n + extra) subgrid."""
        lev = cluster.level + self.params.extra
        base = self.cube_mask(cluster.cubes, lev)
        st = closure_structure(self.box.d, self.n0, self.params.extra)
        return ndimage.binary_dilation(base, structure=st)

    def physical_length(self, internal: float) -> float:
        return internal * self.box.lengths[0]

    def to_json(self):
        lv = {}
        for n, rec in sorted(self.levels.items()):
            lv[str(n)] = {
                "g0": [{"index": list(c.index), "mass": m}
                       for c, m in zip(rec.g0, rec.g0_masses)],
                "light": [K.to_json() for K in rec.light],
                "heavy": [K.to_json() for K in rec.heavy],
            }
        return {"params": self.params.to_json(), "depth": self.depth, "levels": lv,
                "residual": [c.to_json() for c in self.residual]}


def resolution_level(n_cells: int, n0: int) -> int:
    """Deepest level whose cube side is at least one density cell."""
    lev = 0
    while n0 ** (lev + 1) <= n_cells:
        lev += 1
    return lev


def _check_box(box: BoxSpec, hardy: bool):
    L = box.lengths[0]
    if any(abs(l - L) > 1e-12 * L for l in box.lengths) or len(set(box.points)) != 1:
        raise ValueError("root box must be a cube")
    if hardy and any(abs(a + b) > 1e-9 * L for a, b in zip(box.lo, box.hi)):
        raise ValueError("hardy mode requires a root box centered at the origin")


def decompose(rho: GridFunction, params: CoveringParams) -> Decomposition:
    """Run the stopping-time covering of the density's box."""
    vals = np.asarray(rho.values)
    if np.iscomplexobj(vals):
        if np.abs(vals.imag).max() > 1e-12:
            raise ValueError("density must be real")
        vals = vals.real
    if vals.min() < -1e-12:
        raise ValueError("density must be nonnegative")
    vals = np.clip(vals, 0.0, None)
    box = rho.box
    _check_box(box, params.hardy_mode)
    n0, d, delta = params.epsilon_inv, box.d, params.delta
    res = resolution_level(box.points[0], n0)
    if params.max_level is None:
        limit, strict = res, True
    else:
        if params.max_level > res:
            raise ValueError("resolution exhausted")
        limit, strict = params.max_level, False
    depth = limit + params.extra
    while n0 ** (depth * d) > MAX_FINE_CELLS and limit > 1:
        limit -= 1
        depth = limit + params.extra
    mg = MassGrid(box, vals, n0, depth)
    st = closure_structure(d, n0, params.extra)
    full = np.ones((3,) * d, bool)

    levels: dict = {}
    heavy_cubes = [Cube(0, (0,) * d, n0)]
    residual: list = []
    n = 0
    while heavy_cubes:
        n += 1
        if n > limit:
            if strict and limit == res:
                raise ValueError("resolution exhausted")
            residual = heavy_cubes
            break
        rec = LevelRecord()
        mass_n = mg.level(n)
        cand = np.zeros(mass_n.shape, bool)
        for q in heavy_cubes:
            for c in q.children():
                if mass_n[c.index] > delta:
                    cand[c.index] = True
                else:
                    rec.g0.append(c)
        rec.g0.sort()
        rec.g0_masses = [float(mass_n[c.index]) for c in rec.g0]
        labels, nlab = ndimage.label(cand, structure=full)
        sub = mg.level(n + params.extra)
        next_heavy = []
        f = n0**params.extra
        for lab in range(1, nlab + 1):
            idx = np.argwhere(labels == lab)
            cubes = sorted(Cube(n, tuple(int(v) for v in row), n0) for row in idx)
            base = np.kron(labels == lab, np.ones((f,) * d, bool))
            clos = ndimage.binary_dilation(base, structure=st)
            cm = float(sub[clos].sum())
            sm = float(sum(mass_n[c.index] for c in cubes))
            kind = "light" if cm < 1 + delta else "heavy"
            K = Cluster(n, cubes, kind, sm, cm, np.flatnonzero(clos))
            if kind == "light":
                rec.light.append(K)
            else:
                rec.heavy.append(K)
                next_heavy += cubes
        levels[n] = rec
        heavy_cubes = next_heavy
    return Decomposition(levels, residual, params, box, depth, mg)


# ------------------------------------------------------------------ checks

def hardy_origin_check(dec: Decomposition) -> bool:
    """Every terminal cube has the origin as its center or at distance >= side/2."""
    if not dec.params.hardy_mode:
        raise ValueError("hardy_origin_check requires hardy mode")
    origin = (Fraction(1, 2),) * dec.box.d
    for c in dec.terminal_cubes():
        if c.center == origin:
            continue
        if c.dist2_to(origin) < (c.side / 2) ** 2:
            return False
    return True


def _connected(cubes) -> bool:
    idx = [np.array(c.index) for c in cubes]
    seen, stack = {0}, [0]
    while stack:
        i = stack.pop()
        for j in range(len(idx)):
            if j not in seen and np.abs(idx[i] - idx[j]).max() <= 1:
                seen.add(j)
                stack.append(j)
    return len(seen) == len(idx)


def verify(dec: Decomposition, rho: GridFunction | None = None) -> dict:
    """Check the decomposition invariants; returns {check: bool} plus "all"."""
    p, d, n0 = dec.params, dec.box.d, dec.n0
    mg = dec.masses
    if rho is not None:
        vals = np.clip(np.real(np.asarray(rho.values)), 0.0, None)
        mg = MassGrid(rho.box, vals, n0, dec.depth)
    out = {}

    # exact tiling on the deepest level grid, integer counts
    terms = dec.terminal_cubes()
    deepest = max([c.level for c in terms], default=0)
    count = np.zeros((n0**deepest,) * d, np.int64)
    ok_index = True
    for c in terms:
        if any(i < 0 or i >= n0**c.level for i in c.index):
            ok_index = False
            continue
        f = n0 ** (deepest - c.level)
        count[tuple(slice(i * f, (i + 1) * f) for i in c.index)] += 1
    out["tiling"] = bool(ok_index and terms and np.all(count == 1))

    ok = True
    for n, rec in dec.levels.items():
        mn = mg.level(n)
        ok &= all(mn[c.index] <= p.delta for c in rec.g0)
        for K in rec.light + rec.heavy:
            ok &= all(mn[c.index] > p.delta for c in K.cubes)
            clos = dec.closure_mask(K)
            cm = float(mg.level(n + p.extra)[clos].sum())
            ok &= (cm < 1 + p.delta) if K.kind == "light" else (cm >= 1 + p.delta)
    out["mass_thresholds"] = bool(ok)

    bound = math.floor(1 / p.delta) + 1
    out["cluster_size"] = all(len(K.cubes) <= bound
                              for rec in dec.levels.values() for K in rec.light)
    out["connectivity"] = all(_connected(K.cubes) for rec in dec.levels.values()
                              for K in rec.light + rec.heavy)

    disjoint = True
    for n, rec in dec.levels.items():
        clusters = rec.light + rec.heavy
        if len(clusters) > 1:
            acc = np.zeros((n0 ** (n + p.extra),) * d, np.int32)
            for K in clusters:
                acc += dec.closure_mask(K)
            disjoint &= bool(acc.max() <= 1)
    out["closure_disjoint"] = disjoint

    if p.hardy_mode:
        out["hardy_origin"] = hardy_origin_check(dec)
    out["all"] = all(out.values())
    return out
