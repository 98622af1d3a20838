"""Fourier distance machinery: analytic values and statistical behavior."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kaclab.d2 import (
    CharFunGrid,
    analytic_cf,
    d2_estimate,
    empirical_cf,
    gaussian_cf,
    gaussian_grid_cf,
    marginal,
    paired_cf_difference,
    zero_cf,
)
from kaclab.rng import RandomSource


def test_gaussian_cf_formula():
    xi = np.array([0.5, -1.0, 2.0])
    assert gaussian_cf(1.5, xi) == pytest.approx(
        np.exp(-0.75 * float(xi @ xi)))


def test_grid_validation():
    with pytest.raises(ValueError):
        CharFunGrid(dimension=3, radii=np.array([1.0, 0.5]),
                    directions=np.eye(3))
    with pytest.raises(ValueError):
        CharFunGrid(dimension=3, radii=np.array([0.5, 1.0]),
                    directions=2.0 * np.eye(3))


def test_grid_build_is_deterministic():
    g1 = CharFunGrid.build(3)
    g2 = CharFunGrid.build(3)
    np.testing.assert_array_equal(g1.directions, g2.directions)


@given(t1=st.floats(0.1, 5.0), t2=st.floats(0.1, 5.0))
@settings(max_examples=20, deadline=None)
def test_analytic_gaussian_distance_is_half_temperature_gap(t1, t2):
    # the sup is attained in the small-radius limit with value |T1-T2|/2
    grid = CharFunGrid.build(3, n_lowdisc=0)
    est = d2_estimate(gaussian_grid_cf(t1, grid), gaussian_grid_cf(t2, grid))
    assert est.value == pytest.approx(abs(t1 - t2) / 2.0, rel=2e-3, abs=1e-9)


def test_gaussian_grid_cf_matches_analytic_cf():
    grid = CharFunGrid.build(3)
    a = gaussian_grid_cf(1.3, grid)
    b = analytic_cf(lambda xi: gaussian_cf(1.3, xi), grid)
    np.testing.assert_allclose(a.values, b.values, atol=1e-12)


def test_empirical_cf_tracks_analytic_gaussian():
    rng = RandomSource(41)
    grid = CharFunGrid.build(3)
    samples = rng.normal(size=(50_000, 3))
    cf = empirical_cf(samples, grid, symmetrize=True)
    exact = gaussian_grid_cf(1.0, grid)
    dev = np.abs(cf.values - exact.values)
    assert np.all(dev <= 5.0 * cf.stderr + 1e-12)


def test_symmetrized_cf_is_real():
    rng = RandomSource(42)
    grid = CharFunGrid.build(3, n_radii=8, n_lowdisc=4)
    samples = rng.normal(size=(500, 3)) + 0.7
    cf = empirical_cf(samples, grid, symmetrize=True)
    assert np.all(cf.values.imag == 0.0)


def test_same_law_estimate_is_flagged_or_small():
    grid = CharFunGrid.build(3)
    a = empirical_cf(RandomSource(1, 0).normal(size=(20_000, 3)), grid,
                     symmetrize=True)
    b = empirical_cf(RandomSource(1, 1).normal(size=(20_000, 3)), grid,
                     symmetrize=True)
    est = d2_estimate(a, b)
    assert est.untrusted or est.value <= 0.02


def test_paired_difference_of_identical_ensembles_is_zero():
    rng = RandomSource(43)
    samples = rng.normal(size=(200, 2, 3))
    grid = CharFunGrid.build(6, n_radii=8, n_lowdisc=4)
    diff = paired_cf_difference(samples, samples.copy(), grid)
    assert np.all(diff.values == 0.0)
    assert np.all(diff.stderr == 0.0)
    est = d2_estimate(diff, zero_cf(grid))
    assert est.value == 0.0


def test_paired_difference_recovers_temperature_gap():
    # independent per-replica pairs still give an unbiased CF difference
    K = 40_000
    a = RandomSource(44, 0).normal(size=(K, 1, 3))
    b = np.sqrt(2.0) * RandomSource(44, 1).normal(size=(K, 1, 3))
    grid = CharFunGrid.build(3)
    diff = paired_cf_difference(a, b, grid)
    est = d2_estimate(diff, zero_cf(grid))
    assert est.value == pytest.approx(0.5, abs=0.08)


def test_estimates_require_matching_grids():
    g1 = CharFunGrid.build(3, n_radii=8, n_lowdisc=0)
    g2 = CharFunGrid.build(3, n_radii=9, n_lowdisc=0)
    with pytest.raises(ValueError):
        d2_estimate(gaussian_grid_cf(1.0, g1), gaussian_grid_cf(1.0, g2))


def test_surrogate_matches_gaussian_distance():
    grid = CharFunGrid.build(3, n_radii=8, n_lowdisc=0)
    est = d2_estimate(gaussian_grid_cf(1.0, grid), gaussian_grid_cf(3.0, grid))
    assert est.surrogate == pytest.approx(1.0)


def test_marginal_shapes():
    samples = np.zeros((10, 4, 3))
    assert marginal(samples, [1, 2]).shape == (10, 2, 3)
    with pytest.raises(ValueError):
        marginal(samples, [])
