"""Capped singular-value penalty and its closed-form proximal maps.

The penalty on a spectrum sigma is sum_i min(1, sigma_i / nu): each
singular value contributes at most 1, so the sum is a continuous
surrogate for the rank. The penalty splits into a difference of convex
pieces t/nu - max(theta_1, theta_2) with theta_1 = 0 and
theta_2(t) = t/nu - 1; a branch selector d in {1, 2}^n picks the active
piece per singular value and makes the majorizing penalty smooth, which
is what gives the prox its closed form.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import svd


class PenaltyCapAdvisory(UserWarning):
    """The cap threshold nu is too large relative to lam and the loss
    Lipschitz constant for the clean-rank guarantees to apply."""


@dataclass(frozen=True)
class CappedPenaltyParams:
    """Penalty weight `lam` and cap threshold `nu`, both positive."""

    lam: float
    nu: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")

    def cap_advisory(self, loss_lipschitz):
        """True when nu >= lam / loss_lipschitz (advisory only)."""
        return self.nu >= self.lam / loss_lipschitz


def phi(t, nu):
    """Pointwise capped penalty min(1, t / nu) for t >= 0."""
    if t < 0:
        raise ValueError(f"phi is defined for nonnegative t, got {t}")
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    return min(1.0, t / nu)


def capped_surrogate(sigma, nu):
    """Sum of phi over a spectrum; the rank surrogate value."""
    sigma = _check_spectrum(sigma)
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    return float(np.sum(np.minimum(1.0, sigma / nu)))


def d_vector(sigma, nu):
    """Branch selector per singular value: 2 where sigma_i >= nu, else 1.

    For a descending spectrum the result is nonincreasing (all 2s first).
    """
    sigma = _check_spectrum(sigma)
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    return np.where(sigma >= nu, 2, 1)


def phi_d(sigma, d, nu):
    """Majorizing penalty for a fixed branch selector d.

    Equals sum(sigma_i / nu) minus the selected theta terms; agrees with
    capped_surrogate exactly when d = d_vector(sigma, nu) and dominates
    it for every other selector.
    """
    sigma = _check_spectrum(sigma)
    d = _check_d(d, sigma.size)
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    theta = np.where(d == 2, sigma / nu - 1.0, 0.0)
    return float(np.sum(sigma) / nu - np.sum(theta))


def prox_vector(w, d, tau, nu):
    """Closed-form minimizer of tau * phi_d(x) + 0.5 * ||x - w||^2 over x >= 0.

    Coordinates with d_i = 2 pass through unchanged; coordinates with
    d_i = 1 are shrunk by tau / nu and clipped at zero.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError("w must be a 1-D vector")
    if np.any(w < 0):
        raise ValueError("w entries must be nonnegative")
    d = _check_d(d, w.size)
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if not nu > 0:
        raise ValueError(f"nu must be positive, got {nu}")
    return np.where(d == 2, w, np.maximum(w - tau / nu, 0.0))


def prox_matrix(W, d, tau, nu):
    """Spectral prox: apply prox_vector to the singular values of W.

    Requires d nonincreasing (as produced by d_vector on a descending
    spectrum); other selectors are rejected because the ordering of the
    output spectrum is only guaranteed in that case.
    """
    X, _ = prox_matrix_with_spectrum(W, d, tau, nu)
    return X


def prox_matrix_with_spectrum(W, d, tau, nu):
    """prox_matrix plus the output spectrum, which equals
    prox_vector(sigma(W), d, tau, nu) and is descending."""
    factors = svd(W)
    d = _check_d(d, factors.sigma.size)
    if np.any(np.diff(d) > 0):
        raise ValueError("d must be nonincreasing for the matrix prox")
    x_hat = prox_vector(factors.sigma, d, tau, nu)
    return (factors.U * x_hat) @ factors.V.T, x_hat


def _check_spectrum(sigma):
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 1:
        raise ValueError("sigma must be a 1-D vector")
    if np.any(sigma < 0):
        raise ValueError("sigma entries must be nonnegative")
    return sigma


def _check_d(d, n):
    d = np.asarray(d)
    if d.shape != (n,):
        raise ValueError(f"d has length {d.size}, expected {n}")
    if not np.isin(d, (1, 2)).all():
        raise ValueError("d entries must be 1 or 2")
    return d.astype(np.int64)
