"""Exact moment calculus against quadrature and Monte Carlo oracles."""

from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate

from kaclab.jump import GeneratorSpec
from kaclab.kinetics import collide, sample_unit_sphere
from kaclab.moments import (
    GeneratorClosureError,
    apply_generator,
    build_matrix,
    e4_from_pure_fourth,
    e4_observable,
    energy_polynomial,
    moment_trajectory,
    monomial_closure,
    newton_cooling,
    sphere_average_pair,
    sphere_moment,
)
from kaclab.polynomials import Polynomial
from kaclab.rng import RandomSource


def _sphere_moment_quadrature(p, q, r):
    def integrand(phi, theta):
        s = np.sin(theta)
        x = s * np.cos(phi)
        y = s * np.sin(phi)
        z = np.cos(theta)
        return (x ** p) * (y ** q) * (z ** r) * s / (4.0 * np.pi)

    val, _ = integrate.dblquad(integrand, 0.0, np.pi, 0.0, 2.0 * np.pi,
                               epsabs=1e-12)
    return val


@pytest.mark.parametrize("p,q,r", [
    (0, 0, 0), (2, 0, 0), (0, 4, 0), (2, 2, 0), (2, 2, 2), (6, 0, 0),
    (4, 2, 0), (1, 0, 0), (3, 1, 0), (2, 1, 1), (8, 0, 0), (4, 4, 0),
])
def test_sphere_moment_against_quadrature(p, q, r):
    exact = float(sphere_moment(p, q, r))
    assert exact == pytest.approx(_sphere_moment_quadrature(p, q, r),
                                  abs=1e-10)


def test_sphere_moment_known_values():
    assert sphere_moment(2, 0, 0) == Fraction(1, 3)
    assert sphere_moment(4, 0, 0) == Fraction(1, 5)
    assert sphere_moment(2, 2, 0) == Fraction(1, 15)
    assert sphere_moment(1, 1, 0) == 0


def test_sphere_average_pair_against_monte_carlo():
    # average a degree-4 polynomial of post-collision velocities over the
    # impact direction by brute force and compare with the exact algebra
    v = np.array([0.3, -1.1, 0.7])
    w = np.array([1.5, 0.2, -0.4])
    p = (Polynomial.variable(("S", 0, 0), 2) * Polynomial.variable(("S", 1, 1), 2)
         + Polynomial.variable(("S", 0, 2), 4)
         + Polynomial.variable(("S", 1, 0)) * Polynomial.variable(("S", 0, 1)))
    avg = sphere_average_pair(p, 0, 1)
    assign = {("S", 0, a): v[a] for a in range(3)}
    assign.update({("S", 1, a): w[a] for a in range(3)})
    exact = avg.evaluate(assign)

    rng = RandomSource(31)
    K = 400_000
    omegas = sample_unit_sphere(rng, size=K)
    d = (v - w) @ omegas.T
    vs = v[None, :] - d[:, None] * omegas
    ws = w[None, :] + d[:, None] * omegas
    samples = (vs[:, 0] ** 2 * ws[:, 1] ** 2 + vs[:, 2] ** 4
               + ws[:, 0] * vs[:, 1])
    se = samples.std() / np.sqrt(K)
    assert abs(exact - samples.mean()) <= 4.0 * se


def test_pair_average_preserves_untouched_terms():
    p = Polynomial.variable(("S", 2, 0), 2)
    assert sphere_average_pair(p, 0, 1) == p


def test_generator_moments_match_newton_cooling():
    spec = GeneratorSpec(M=3, topology="two_reservoirs", N=5, lambda_R=1.0,
                         mu=2.0, T_plus=2.0, T_minus=1.0)
    basis = [energy_polynomial("Q", 5), energy_polynomial("S", 3),
             energy_polynomial("P", 5)]
    gm = build_matrix(spec, basis, ["e_minus", "e_S", "e_plus"])
    times = np.array([0.0, 0.3, 1.0, 4.0])
    traj = moment_trajectory(gm, [1.0, 3.0, 2.0], times)
    oracle = np.column_stack(newton_cooling(1.0, 3.0, 2.0, 2.0, 3, 5, times))
    np.testing.assert_allclose(traj, oracle, rtol=1e-10, atol=1e-12)


def test_newton_cooling_conserves_total_energy():
    t = np.linspace(0.0, 10.0, 7)
    em, es, ep = newton_cooling(0.5, 3.0, 2.0, 1.0, 4, 16, t)
    total = 16 * em + 4 * es + 16 * ep
    np.testing.assert_allclose(total, total[0], rtol=1e-12)


def test_closure_error_reports_residual():
    spec = GeneratorSpec(M=2, topology="system_only")
    basis = [Polynomial.variable(("S", 0, 0), 2)]
    with pytest.raises(GeneratorClosureError) as err:
        build_matrix(spec, basis)
    assert not err.value.residual.is_zero()


def test_monomial_closure_is_closed():
    spec = GeneratorSpec(M=2, topology="two_thermostats", mu=1.0,
                         T_plus=2.0, T_minus=1.0)
    seeds = [Polynomial.variable(("S", 0, 0), 4)]
    basis, monos = monomial_closure(spec, seeds)
    allowed = set(monos)
    for b in basis:
        img = apply_generator(spec, b)
        assert set(img.terms) <= allowed


def test_generator_kills_constants():
    spec = GeneratorSpec(M=2, topology="two_thermostats", mu=1.0,
                         T_plus=1.0, T_minus=1.0)
    assert apply_generator(spec, Polynomial.constant(3)).is_zero()


def test_energy_polynomial_evaluates_like_numpy():
    rng = RandomSource(8)
    v = rng.normal(size=(4, 3))
    p = energy_polynomial("S", 4)
    assign = {("S", i, a): v[i, a] for i in range(4) for a in range(3)}
    assert p.evaluate(assign) == pytest.approx((v ** 2).sum() / 12.0)


def test_e4_of_standard_gaussian_is_three():
    rng = RandomSource(9)
    samples = rng.normal(size=(400_000, 1, 3))
    # the binding pattern is the pure fourth moment, E w^4 = 3
    assert e4_observable(samples) == pytest.approx(3.0, rel=0.03)


def test_e4_from_pure_fourth_floors_at_one():
    assert e4_from_pure_fourth([0.2, 0.5]) == 1.0
    assert e4_from_pure_fourth([0.2, 4.0]) == 4.0
