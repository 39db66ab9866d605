from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ltlab.covering import (
    CoveringParams,
    Cube,
    MassGrid,
    closure_structure,
    decompose,
    hardy_origin_check,
    resolution_level,
    verify,
)
from ltlab.grid_core import BoxSpec, GridFunction


def uniform(d, n, total):
    box = BoxSpec(d, (0.0,) * d, (1.0,) * d, (n,) * d)
    return GridFunction(box, np.full(box.shape, float(total)))


def bumps(box, centers, masses, width):
    X = box.mesh()
    out = np.zeros(box.shape)
    for c, m in zip(centers, masses):
        r2 = sum((x - cc) ** 2 for x, cc in zip(X, np.broadcast_to(c, (box.d,))))
        out = out + m * np.exp(-r2 / (2 * width**2)) / (2 * np.pi * width**2) ** (box.d / 2)
    return GridFunction(box, out)


def test_params_validation():
    with pytest.raises(ValueError, match="epsilon_inv"):
        CoveringParams(1)
    with pytest.raises(ValueError, match="epsilon_inv"):
        CoveringParams(2.5)
    with pytest.raises(ValueError, match="delta"):
        CoveringParams(2, 1.0)
    with pytest.raises(ValueError, match="odd"):
        CoveringParams(2, 0.1, hardy_mode=True)
    with pytest.raises(ValueError, match="max_level"):
        CoveringParams(2, 0.1, max_level=0)
    assert CoveringParams(2).extra == 2 and CoveringParams(3).extra == 1


def test_cube_geometry():
    c = Cube(2, (1, 3), 3)
    assert c.side == Fraction(1, 9)
    assert c.center == (Fraction(1, 6), Fraction(7, 18))
    assert len(list(c.children())) == 9
    assert c.dist2_to(c.center) == 0
    assert Cube(1, (0,), 2).dist2_to((Fraction(1),)) == Fraction(1, 4)


def test_light_mass_gives_only_g0():
    dec = decompose(uniform(1, 64, 0.5), CoveringParams(2, 0.3))
    assert list(dec.levels) == [1]
    assert len(dec.levels[1].g0) == 2 and dec.levels[1].g0_masses == pytest.approx([0.25] * 2)
    assert verify(dec)["all"]


def test_uniform_heavy_chain():
    # cube masses 1.3, 0.65, 0.325 exceed delta, 0.1625 does not
    dec = decompose(uniform(1, 64, 2.6), CoveringParams(2, 0.3))
    assert sorted(dec.levels) == [1, 2, 3, 4]
    for n in (1, 2, 3):
        assert len(dec.levels[n].heavy) == 1 and not dec.levels[n].g0
    assert len(dec.levels[4].g0) == 16
    assert dec.levels[4].g0_masses == pytest.approx([0.1625] * 16)
    assert not dec.residual and verify(dec)["all"]


def test_adjacent_bumps_form_one_light_cluster():
    box = BoxSpec(1, 0.0, 1.0, 256)
    dec = decompose(bumps(box, [0.25, 0.75], [0.6, 0.6], 0.02), CoveringParams(2, 0.3))
    (K,) = dec.levels[1].light
    assert [c.index for c in K.cubes] == [(0,), (1,)]
    assert K.closure_mass == pytest.approx(1.2)
    assert list(dec.levels) == [1] and verify(dec)["all"]


@pytest.mark.parametrize("width,mass", [(0.05, 3), (0.02, 2), (0.2, 4)])
def test_hardy_origin_requires_odd_refinement(width, mass):
    box = BoxSpec.cube(2, 1.0, 128)
    rho = bumps(box, [0.0], [mass], width)
    odd = decompose(rho, CoveringParams(3, 0.2, hardy_mode=True))
    assert hardy_origin_check(odd) and verify(odd)["all"]
    even = decompose(rho, CoveringParams(2, 0.2, hardy_mode=True, allow_even_hardy=True))
    assert not hardy_origin_check(even)
    with pytest.raises(ValueError, match="hardy mode"):
        hardy_origin_check(decompose(rho, CoveringParams(3, 0.2)))


def test_decompose_errors():
    box = BoxSpec(1, 0.0, 1.0, 16)
    with pytest.raises(ValueError, match="nonnegative"):
        decompose(GridFunction(box, -np.ones(16)), CoveringParams())
    with pytest.raises(ValueError, match="real"):
        decompose(GridFunction(box, 1j * np.ones(16)), CoveringParams())
    with pytest.raises(ValueError, match="cube"):
        decompose(GridFunction(BoxSpec(2, (0, 0), (1, 2), (8, 16)), np.ones((8, 16))),
                  CoveringParams())
    with pytest.raises(ValueError, match="centered"):
        decompose(uniform(1, 32, 1.0), CoveringParams(3, 0.1, hardy_mode=True))
    # a point mass never drops below delta before the grid runs out
    spike = np.zeros(16)
    spike[3] = 16 * 5.0
    with pytest.raises(ValueError, match="resolution exhausted"):
        decompose(GridFunction(box, spike), CoveringParams())
    with pytest.raises(ValueError, match="resolution exhausted"):
        decompose(GridFunction(box, spike), CoveringParams(max_level=9))
    dec = decompose(GridFunction(box, spike), CoveringParams(max_level=2))
    assert dec.residual and verify(dec)["tiling"]


def test_resolution_level():
    assert resolution_level(64, 2) == 6
    assert resolution_level(64, 3) == 3
    assert resolution_level(8, 2) == 3


def test_closure_structure_radius():
    st2 = closure_structure(1, 2, 2)
    # eps^n/4 is one level-(n+2) cell, so the closure reaches one neighbour on each side
    assert st2.tolist() == [False, True, True, True, False]
    assert closure_structure(2, 3, 1).shape == (5, 5)


@given(st.integers(0, 10**6), st.sampled_from([2, 3]), st.integers(1, 2))
def test_mass_grid_conserves_mass(seed, n0, d):
    rng = np.random.default_rng(seed)
    box = BoxSpec(d, (0.0,) * d, (1.0,) * d, (32 if d == 1 else 16,) * d)
    vals = rng.random(box.shape)
    mg = MassGrid(box, vals, n0, 3)
    total = vals.sum() * box.cell_volume
    for n in range(4):
        assert mg.level(n).sum() == pytest.approx(total, rel=1e-12)
    assert np.all(mg.fine >= -1e-15)


@given(st.integers(0, 10**6), st.sampled_from([2, 3]), st.integers(1, 2),
       st.sampled_from([0.1, 0.2, 0.3]))
def test_random_densities_verify(seed, n0, d, delta):
    rng = np.random.default_rng(seed)
    box = BoxSpec(d, (0.0,) * d, (1.0,) * d, (256 if d == 1 else 64,) * d)
    k = rng.integers(1, 4)
    rho = bumps(box, rng.uniform(0.2, 0.8, (k, d)), rng.uniform(0.3, 2.0, k),
                rng.uniform(0.03, 0.1))
    cap = resolution_level(box.points[0], n0)
    dec = decompose(rho, CoveringParams(n0, delta, max_level=cap))
    res = verify(dec, rho)
    assert res["all"], res
    masses = sum(m for rec in dec.levels.values() for m in rec.g0_masses)
    masses += sum(K.support_mass for rec in dec.levels.values() for K in rec.light)
    masses += sum(float(dec.masses.level(c.level)[c.index]) for c in dec.residual)
    total = float(np.sum(rho.values) * box.cell_volume)
    assert masses == pytest.approx(total, rel=1e-9)
