"""Momentum-fixing rotations: invariants and distributional properties."""

import numpy as np
import pytest

from kaclab.rng import RandomSource
from kaclab.rotations import (
    MomentumFixingRotation,
    momentum_complement_basis,
    rot_average_samples,
    sample_fixed_momentum_rotation,
    verify_rota_bound,
)


def test_complement_basis_is_orthonormal_and_momentum_free():
    for P in (2, 3, 5):
        B = momentum_complement_basis(P)
        assert B.shape == (3 * P, 3 * P - 3)
        np.testing.assert_allclose(B.T @ B, np.eye(3 * P - 3), atol=1e-12)
        for i in range(3):
            E = np.zeros(3 * P)
            E[i::3] = 1.0
            np.testing.assert_allclose(E @ B, 0.0, atol=1e-12)


def test_rotation_matrix_is_orthogonal_and_fixes_momentum():
    rng = RandomSource(51)
    rot = sample_fixed_momentum_rotation(4, rng)
    R = rot.matrix()
    np.testing.assert_allclose(R @ R.T, np.eye(12), atol=1e-12)
    for i in range(3):
        E = np.zeros(12)
        E[i::3] = 1.0
        np.testing.assert_allclose(R @ E, E, atol=1e-12)


def test_apply_matches_matrix_and_preserves_invariants():
    rng = RandomSource(52)
    rot = sample_fixed_momentum_rotation(3, rng)
    v = rng.normal(size=(7, 3, 3))
    out = rot.apply(v)
    flat = v.reshape(7, 9) @ rot.matrix().T
    np.testing.assert_allclose(out.reshape(7, 9), flat, atol=1e-12)
    np.testing.assert_allclose((out ** 2).sum(axis=(1, 2)),
                               (v ** 2).sum(axis=(1, 2)), rtol=1e-12)
    np.testing.assert_allclose(out.sum(axis=1), v.sum(axis=1), atol=1e-10)


def test_single_particle_rotation_is_identity():
    rng = RandomSource(53)
    rot = sample_fixed_momentum_rotation(1, rng)
    v = rng.normal(size=(4, 1, 3))
    np.testing.assert_array_equal(rot.apply(v), v)


def test_rot_average_preserves_energy_and_momentum_samplewise():
    rng = RandomSource(54)
    v = rng.normal(size=(50, 4, 3))
    out = rot_average_samples(v, rng)
    np.testing.assert_allclose((out ** 2).sum(axis=(1, 2)),
                               (v ** 2).sum(axis=(1, 2)), rtol=1e-10)
    np.testing.assert_allclose(out.sum(axis=1), v.sum(axis=1), atol=1e-9)


def test_rot_average_leaves_gaussian_product_invariant():
    # Gamma_T^N is rotation invariant: coordinate second moments persist
    rng = RandomSource(55)
    v = rng.normal(size=(40_000, 3, 3))
    out = rot_average_samples(v, rng)
    m2 = (out ** 2).mean(axis=0)
    np.testing.assert_allclose(m2, 1.0, atol=0.05)


def test_rot_average_validates_input():
    rng = RandomSource(56)
    with pytest.raises(ValueError):
        rot_average_samples(np.zeros((4, 2, 3)), rng, n_rotations=0)


def test_verify_rota_bound_validates_k():
    rng = RandomSource(57)
    with pytest.raises(ValueError):
        verify_rota_bound(lambda r, n: r.normal(size=(n, 4, 3)), 4, 4, 1.0,
                          rng, n_samples=10)


def test_verify_rota_bound_vacuous_at_equilibrium():
    # f0 = Gamma_T^k gives zero numerator and denominator: flagged vacuous
    rng = RandomSource(58)

    def sampler(r, n):
        return r.normal(size=(n, 1, 3))

    rep = verify_rota_bound(sampler, 1, 3, 1.0, rng, n_samples=20_000)
    assert rep["vacuous"]
    assert rep["passed"]


def test_matrix_identity_plus_block_decomposition():
    basis = momentum_complement_basis(2)
    block = np.eye(basis.shape[1])
    rot = MomentumFixingRotation(P=2, basis=basis, block=block)
    np.testing.assert_allclose(rot.matrix(), np.eye(6), atol=1e-12)
