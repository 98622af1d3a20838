"""Fixed-momentum rotational averages and the k/N steady-state bound.

The averaging group consists of orthogonal transforms of R^(3P) that fix
the three total-momentum directions E_i = (e_i, ..., e_i); averaging a
law over Haar measure on that group leaves ||v|| and the total momentum
of every sample unchanged and produces the reservoir dynamics' long-time
limit shape.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from .d2 import CharFunGrid, d2_estimate, empirical_cf, gaussian_grid_cf
from .kinetics import sample_maxwellian
from .rng import RandomSource


@dataclass(frozen=True)
class MomentumFixingRotation:
    """Orthogonal transform on R^(3P) acting as identity on span{E_i}.

    ``basis`` (3P, 3P-3) spans the momentum-orthogonal complement and
    ``block`` is an orthogonal matrix on that complement.
    """

    P: int
    basis: np.ndarray
    block: np.ndarray

    def matrix(self) -> np.ndarray:
        d = 3 * self.P
        proj = self.basis @ self.basis.T
        return (np.eye(d) - proj) + self.basis @ self.block @ self.basis.T

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Apply to flat vectors (..., 3P) or particle arrays (..., P, 3)."""
        v = np.asarray(v, dtype=float)
        shaped = v.ndim >= 2 and v.shape[-2:] == (self.P, 3)
        flat = v.reshape(*v.shape[:-2], 3 * self.P) if shaped else v
        coeff = flat @ self.basis
        out = flat + (coeff @ self.block.T - coeff) @ self.basis.T
        return out.reshape(v.shape) if shaped else out


def momentum_complement_basis(P: int) -> np.ndarray:
    """Orthonormal basis of the complement of span{E_1, E_2, E_3}."""
    E = np.zeros((3 * P, 3))
    for i in range(3):
        E[i::3, i] = 1.0
    return null_space(E.T)


def _haar_orthogonal(n: int, rng: RandomSource, size: int = 1) -> np.ndarray:
    """Haar-distributed orthogonal matrices via QR with sign fixing."""
    g = rng.normal(size=(size, n, n))
    q, r = np.linalg.qr(g)
    d = np.sign(np.einsum("kii->ki", r))
    d[d == 0] = 1.0
    return q * d[:, None, :]


def sample_fixed_momentum_rotation(P: int, rng: RandomSource
                                   ) -> MomentumFixingRotation:
    """Haar draw from the momentum-fixing orthogonal transforms.

    P = 1 has an empty complement, so the identity is the only element.
    The determinant-one restriction is dropped: for averaging purposes
    the full orthogonal group on the complement gives the same law.
    """
    if P < 1:
        raise ValueError("P must be >= 1")
    basis = momentum_complement_basis(P)
    k = basis.shape[1]
    if k == 0:
        return MomentumFixingRotation(P=P, basis=basis,
                                      block=np.zeros((0, 0)))
    block = _haar_orthogonal(k, rng)[0]
    return MomentumFixingRotation(P=P, basis=basis, block=block)


def rot_average_samples(samples: np.ndarray, rng: RandomSource,
                        n_rotations: int = 1) -> np.ndarray:
    """One independent rotation per sample realizes the average in law.

    ``n_rotations`` > 1 chains independent draws (the result has the same
    law; useful for idempotence tests).  Input shape (K, P, 3) or
    (K, 3P); output matches.
    """
    if n_rotations < 1:
        raise ValueError("n_rotations must be >= 1")
    v = np.asarray(samples, dtype=float)
    shaped = v.ndim == 3
    K = v.shape[0]
    P = v.shape[1] if shaped else v.shape[1] // 3
    flat = v.reshape(K, 3 * P)
    basis = momentum_complement_basis(P)
    k = basis.shape[1]
    if k == 0:
        return v.copy()
    out = flat.copy()
    for _ in range(n_rotations):
        blocks = _haar_orthogonal(k, rng, size=K)
        coeff = out @ basis  # (K, k)
        rotated = np.einsum("kij,kj->ki", blocks, coeff)
        out = out + (rotated - coeff) @ basis.T
    return out.reshape(v.shape) if shaped else out


def _first_block_grid(N: int, n_radii: int = 64) -> CharFunGrid:
    """Grid on R^(3N) probing the first-particle axes and the diagonal."""
    d = 3 * N
    dirs = [np.zeros((3, d))]
    for a in range(3):
        dirs[0][a, a] = 1.0
    dirs.append(np.full((1, d), 1.0 / np.sqrt(d)))
    diag_first = np.zeros((1, d))
    diag_first[0, 0::3] = 1.0 / np.sqrt(N)
    dirs.append(diag_first)
    return CharFunGrid(dimension=d, radii=np.geomspace(1e-2, 1e2, n_radii),
                       directions=np.vstack(dirs))


def verify_rota_bound(f0_sampler, k: int, N: int, T: float,
                      rng: RandomSource, n_samples: int = 10 ** 5) -> dict:
    """Measured d2 contraction of the rotational average vs the k/N bound.

    Builds samples of f x Gamma_T^(N-k), rotation-averages them, and
    compares d2(averaged, Gamma_T^N) / d2(f, Gamma_T^k) with k/N.
    ``f0_sampler(rng, n)`` must return zero-mean samples of shape
    (n, k, 3).
    """
    if not 0 < k < N:
        raise ValueError("need 0 < k < N")
    f = np.asarray(f0_sampler(rng, n_samples), dtype=float)
    if f.shape != (n_samples, k, 3):
        raise ValueError("f0 sampler must return shape (n, k, 3)")
    tail = sample_maxwellian(T, rng, size=n_samples * (N - k))
    full = np.concatenate([f, tail.reshape(n_samples, N - k, 3)], axis=1)
    averaged = rot_average_samples(full, rng)

    grid_k = _first_block_grid(k)
    cf_f = empirical_cf(f, grid_k, symmetrize=True)
    base_k = gaussian_grid_cf(T, grid_k)
    d2_f = d2_estimate(cf_f, base_k)

    grid_n = _first_block_grid(N)
    cf_avg = empirical_cf(averaged, grid_n, symmetrize=True)
    base_n = gaussian_grid_cf(T, grid_n)
    d2_avg = d2_estimate(cf_avg, base_n)

    vacuous = d2_f.value <= 5.0 * max(d2_f.stderr, 1e-12)
    ratio = d2_avg.value / d2_f.value if not vacuous else None
    ratio_se = None
    if not vacuous:
        ratio_se = ratio * np.sqrt(
            (d2_avg.stderr / max(d2_avg.value, 1e-300)) ** 2
            + (d2_f.stderr / d2_f.value) ** 2)
    return {
        "k": k, "N": N, "T": T, "n_samples": n_samples,
        "d2_numerator": d2_avg.to_record(),
        "d2_denominator": d2_f.to_record(),
        "ratio": ratio, "ratio_stderr": ratio_se,
        "bound": k / N,
        "vacuous": bool(vacuous),
        "untrusted": bool(d2_avg.untrusted or d2_f.untrusted),
        "passed": bool(vacuous or ratio <= k / N + 3.0 * (ratio_se or 0.0)),
    }


def rota_report_jsonl(report: dict) -> str:
    return json.dumps(report)
