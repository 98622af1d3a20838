"""Elementary kinetic primitives shared by every other module.

Velocities are numpy arrays of shape (3,) (or (n, 3) for batched
sampling).  The two-body rule redistributes velocity along a uniformly
chosen impact direction and conserves momentum and energy exactly.
"""

from __future__ import annotations

import numpy as np

from .rng import RandomSource

#: tolerance on |1 - ||omega||| accepted by :func:`collide`
OMEGA_NORM_TOL = 1e-10


def check_temperature(T: float) -> float:
    T = float(T)
    if not np.isfinite(T) or T < 0.0:
        raise ValueError(f"temperature must be finite and >= 0, got {T}")
    return T


def sample_unit_sphere(rng: RandomSource, size: int | None = None) -> np.ndarray:
    """Uniform draw(s) on the unit sphere S^2.

    Normalizes a 3D standard Gaussian draw: exactly uniform, branch-free.
    """
    if size is None:
        g = rng.normal(size=3)
        return g / np.linalg.norm(g)
    g = rng.normal(size=(size, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sample_maxwellian(T: float, rng: RandomSource, size: int | None = None) -> np.ndarray:
    """Draw from the centered Maxwellian with per-component variance T."""
    T = check_temperature(T)
    s = np.sqrt(T)
    if size is None:
        return s * rng.normal(size=3)
    return s * rng.normal(size=(size, 3))


def collide(v: np.ndarray, w: np.ndarray, omega: np.ndarray):
    """Two-body collision along the unit impact direction ``omega``.

    Returns (v*, w*) with v* = v - ((v-w).omega) omega and
    w* = w + ((v-w).omega) omega.  Momentum and kinetic energy of the
    pair are conserved exactly (up to rounding).
    """
    omega = np.asarray(omega, dtype=float)
    n = np.linalg.norm(omega)
    if abs(n - 1.0) > OMEGA_NORM_TOL:
        raise ValueError(f"omega must be a unit vector, got norm {n}")
    omega = omega / n  # renormalize to guard against drift
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    d = np.dot(v - w, omega)
    return v - d * omega, w + d * omega


def thermostat_collide(v: np.ndarray, T: float, rng: RandomSource) -> np.ndarray:
    """One interaction with a Maxwellian thermostat at temperature T.

    Draws a virtual partner from the Maxwellian and a uniform impact
    direction, collides, and discards the partner.
    """
    w = sample_maxwellian(T, rng)
    omega = sample_unit_sphere(rng)
    v_out, _ = collide(v, w, omega)
    return v_out
