"""Sup functionals and inequality checks against independent optimizers."""

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from kaclab.inequalities import TestFunction as SupFunction
from kaclab.inequalities import (
    DN_UPPER_SLACK,
    Envelope,
    check_alpha_bound,
    check_d1_lower_bound,
    check_sqrtn_bound,
    check_third_power_bound,
    d1,
    dN,
    fibonacci_sphere,
    frozen,
    library,
    norm3,
)


def _bump():
    return next(H for H in library() if H.name == "bump")


def test_d1_bump_small_radius_limit():
    # sup r^2 e^{-r^2} / r^2 -> 1 as r -> 0
    assert d1(_bump(), 0.0) == pytest.approx(1.0, rel=1e-9)


def test_d1_smooth_step_small_radius_limit():
    # the sup is the r -> 0 limit of (1 - e^{-r^2}) / r^2 = 1; evaluating
    # it at tiny radii cancels catastrophically, so only expect 1e-4
    H = next(h for h in library() if h.name == "smooth-step")
    assert d1(H, 0.0) == pytest.approx(1.0, rel=2e-4)


@pytest.mark.parametrize("xi", [0.3, 1.0, 4.0])
def test_d1_bump_matches_radial_optimizer(xi):
    # the bump is radial, so the 3D sup reduces to a 1D problem
    def neg(logr):
        r2 = np.exp(2.0 * logr)
        return -r2 * np.exp(-r2) / (r2 + xi * xi)

    res = minimize_scalar(neg, bounds=(-15.0, 5.0), method="bounded",
                          options={"xatol": 1e-12})
    assert d1(_bump(), xi) == pytest.approx(-res.fun, rel=1e-7)


def test_d1_rejects_negative_xi():
    with pytest.raises(ValueError):
        d1(_bump(), -1.0)


def test_dn_reduces_to_d1_at_one_slot():
    H = _bump()
    assert dN(H, 0.7, 1) == pytest.approx(d1(H, 0.7))


def test_dn_is_monotone_in_slot_count():
    # padding with eta = 0 slots embeds the N-slot problem in N+1 slots
    H = _bump()
    g = Envelope()
    vals = [dN(H, 1.0, n, g) for n in (1, 2, 3)]
    assert vals[1] >= vals[0] * (1.0 - 1e-6)
    assert vals[2] >= vals[1] * (1.0 - 1e-6)


def test_dn_never_exceeds_unconstrained_d1():
    # triangle inequality with the envelope bounded by one
    g = Envelope()
    for H in library():
        if H.xi_dependent:
            continue
        cap = d1(H, 0.0)
        for n in (2, 3):
            assert dN(H, 1.0, n, g) <= cap * (1.0 + DN_UPPER_SLACK)


def test_envelope_validation_and_values():
    with pytest.raises(ValueError):
        Envelope(0.0)
    g = Envelope(2.0)
    assert g(np.zeros(3)) == 1.0
    assert g(np.array([1.0, 0.0, 0.0])) == pytest.approx(1.0 / 3.0)


def test_fibonacci_sphere_unit_norms():
    pts = fibonacci_sphere(128)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)


def test_frozen_section_matches_family():
    H = next(h for h in library() if h.name == "gradient-family")
    Hs = frozen(H, 0.5)
    eta = np.array([[0.3, -0.2, 0.1]])
    assert Hs(eta)[0] == pytest.approx(H(eta, 0.5)[0])


def test_gradient_family_gradient_formula():
    H = next(h for h in library() if h.name == "gradient-family")
    for xi in (0.5, 1.0, 2.0):
        g = H.gradient0(xi)
        np.testing.assert_allclose(
            g, [xi * np.exp(-xi * xi), 0.0, 0.0], atol=1e-12)


def test_norm3_bounded_below_by_sup():
    H = _bump()
    assert norm3(H) >= np.exp(-1.0)  # sup |H| attained at r = 1


def test_d1_lower_bound_holds_for_bump():
    rep = check_d1_lower_bound(_bump(), 1.0)
    assert rep.passed
    assert rep.empirical_constant >= 1.0


def test_third_power_bound_stable_for_bump():
    rep = check_third_power_bound(_bump(), xis=(0.5, 1.0), Ns=(2, 3))
    assert rep.passed


def test_alpha_bound_requires_xi_dependence():
    with pytest.raises(ValueError):
        check_alpha_bound(_bump())


def test_alpha_bound_holds_for_gradient_family():
    H = next(h for h in library() if h.name == "gradient-family")
    rep = check_alpha_bound(H, xis=(0.5, 1.0, 2.0))
    assert rep.passed


def test_sqrtn_bound_growth_for_gradient_family():
    H = next(h for h in library() if h.name == "gradient-family")
    rep = check_sqrtn_bound(H, xis=(0.5,), Ns=(2, 4))
    assert rep.passed
    assert rep.diagnostics["sqrtN_growth_ok"]


def test_library_members_vanish_at_origin():
    zero = np.zeros((1, 3))
    for H in library():
        val = H(zero, 1.0)[0] if H.xi_dependent else H(zero)[0]
        assert abs(val) == 0.0


def test_custom_function_cache_does_not_leak_between_instances():
    H1 = SupFunction("a", lambda e: np.sum(e ** 2, axis=-1))
    H2 = SupFunction("b", lambda e: 2.0 * np.sum(e ** 2, axis=-1)
                      * np.exp(-np.sum(e ** 2, axis=-1)))
    d1(H2, 0.0)
    assert ("d1", 0.0, 0.0) not in H1._cache
