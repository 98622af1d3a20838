"""Collision rule and sampling primitives against independent oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kaclab.kinetics import (
    collide,
    sample_maxwellian,
    sample_unit_sphere,
    thermostat_collide,
)
from kaclab.rng import RandomSource

finite3 = st.lists(st.floats(-50.0, 50.0), min_size=3, max_size=3).map(np.array)


@given(v=finite3, w=finite3, seed=st.integers(0, 2 ** 16))
@settings(max_examples=200, deadline=None)
def test_collision_conserves_momentum_and_energy(v, w, seed):
    omega = sample_unit_sphere(RandomSource(seed))
    v2, w2 = collide(v, w, omega)
    np.testing.assert_allclose(v2 + w2, v + w, atol=1e-10)
    assert abs((v2 @ v2 + w2 @ w2) - (v @ v + w @ w)) <= 1e-9 * (
        1.0 + v @ v + w @ w)


def test_collision_matches_reflection_formula():
    v = np.array([1.0, 2.0, 3.0])
    w = np.array([-1.0, 0.5, 0.0])
    omega = np.array([0.0, 1.0, 0.0])
    v2, w2 = collide(v, w, omega)
    d = (v - w) @ omega
    np.testing.assert_allclose(v2, v - d * omega)
    np.testing.assert_allclose(w2, w + d * omega)


def test_collision_rejects_non_unit_omega():
    with pytest.raises(ValueError):
        collide(np.zeros(3), np.ones(3), np.array([1.0, 1.0, 0.0]))


def test_unit_sphere_samples_have_unit_norm():
    rng = RandomSource(3)
    pts = sample_unit_sphere(rng, size=1000)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)


def test_unit_sphere_is_isotropic():
    # second moment of each component is 1/3 on S^2
    rng = RandomSource(4)
    pts = sample_unit_sphere(rng, size=200_000)
    m2 = (pts ** 2).mean(axis=0)
    np.testing.assert_allclose(m2, 1.0 / 3.0, atol=4e-3)


def test_maxwellian_moments():
    rng = RandomSource(5)
    T = 1.7
    v = sample_maxwellian(T, rng, size=200_000)
    assert abs(v.mean()) < 4.0 * np.sqrt(T / v.size)
    np.testing.assert_allclose((v ** 2).mean(axis=0), T, rtol=0.02)


def test_maxwellian_rejects_negative_temperature():
    with pytest.raises(ValueError):
        sample_maxwellian(-1.0, RandomSource(0))


def test_thermostat_collision_from_rest_gains_projected_energy():
    # from v = 0 the post-collision speed is |w . omega|, whose mean
    # square is E||w||^2 / 3 = T
    rng = RandomSource(6)
    T = 2.0
    K = 100_000
    e = np.empty(K)
    for k in range(K):
        v = thermostat_collide(np.zeros(3), T, rng)
        e[k] = v @ v
    se = e.std() / np.sqrt(K)
    assert abs(e.mean() - T) <= 4.0 * se
