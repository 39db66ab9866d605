import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ltlab.covering import CoveringParams, decompose, resolution_level
from ltlab.exclusion import (
    BallFamilySet,
    build_ball_families,
    exclusion_lower_bound,
    exclusion_radius,
    interaction_expectation,
    pair_kernel,
    scale_terms,
)
from ltlab.grid_core import BoxSpec
from ltlab.nbody import density, interaction_energy, random_state


def test_single_scale_example():
    fams = BallFamilySet.from_masses([1.0], [[2.0]], [1])
    assert exclusion_lower_bound(fams, 1.0) == pytest.approx(1.0)


def test_two_scale_example():
    # (1 - 0) * 2 / 2 + (4 - 1) * 2 / 2
    fams = BallFamilySet.from_masses([1.0, 0.5], [[2.0], [2.0]], [1, 1])
    assert scale_terms(fams, 1.0) == pytest.approx([1.0, 3.0])
    assert exclusion_lower_bound(fams, 1.0) == pytest.approx(4.0)


def test_overlap_divides_and_empty_scales_vanish():
    fams = BallFamilySet.from_masses([2.0, 1.0], [[3.0, 3.0], []], [3, 0])
    assert scale_terms(fams, 0.5) == pytest.approx([0.5 * 12 / 6, 0.0])


def test_radii_must_decrease():
    fams = BallFamilySet.from_masses([1.0, 1.0], [[2.0], [2.0]], [1, 1])
    with pytest.raises(ValueError, match="decreasing"):
        exclusion_lower_bound(fams, 1.0)


def test_pair_kernel_regularization():
    assert pair_kernel(0.0, 1.0, 0.1) == pytest.approx(0.05**-2)
    assert pair_kernel(2.0, 0.5, 0.1) == pytest.approx(0.5)


def test_exclusion_radius():
    assert exclusion_radius(1, 0.1, 1, 2) == pytest.approx(2 * 12 / 2)
    assert exclusion_radius(2, 0.5, 3, 3, side=2.0) == pytest.approx(
        2 * math.sqrt(3) * 4 * 2 / 9)


def test_ball_families_have_diameter_below_radius():
    box = BoxSpec(1, 0.0, 1.0, 64)
    rng = np.random.default_rng(5)
    st_ = random_state(2, box, rng, width_range=(0.01, 0.05))
    rho = density(st_)
    dec = decompose(rho, CoveringParams(2, 0.1, max_level=resolution_level(64, 2)))
    fams = build_ball_families(dec, rho)
    x = box.axes()[0]
    for f in fams.families:
        for m in f.masks:
            pts = x[m]
            assert pts.max() - pts.min() < f.radius
        assert all(m >= 1.1 for m in f.masses)
    assert "families" in fams.to_json()


@given(st.integers(0, 10**6), st.sampled_from([2, 3]), st.sampled_from([0.5, 1.0]))
def test_exclusion_bound_below_interaction(seed, N, s):
    rng = np.random.default_rng(seed)
    n = 64 if N == 2 else 32
    box = BoxSpec(1, 0.0, 1.0, n)
    st_ = random_state(N, box, rng, width_range=(0.01, 0.1))
    rho = density(st_)
    dec = decompose(rho, CoveringParams(2, 0.1, max_level=resolution_level(n, 2)))
    b = exclusion_lower_bound(build_ball_families(dec, rho), s)
    inter = interaction_energy(st_, s)
    assert b > 0
    assert inter - b >= -1e-6 * inter
    assert interaction_expectation(st_, s, 3.0) == pytest.approx(3 * inter)
