"""Smoothed elementwise absolute-value losses.

Two loss bindings share one protocol: masked completion, which measures
|X_ij - M_ij| over an observed index set, and full decomposition, which
measures |X - L| over every entry. Each residual term is smoothed by the
quadratic-inside-the-tube function

    smooth(s, mu) = |s|                 if |s| > mu,
                    s^2/(2 mu) + mu/2   otherwise,

so the smoothed loss is convex, differentiable, within
(n_terms / 2) * mu of the exact loss, and has a (1/mu)-Lipschitz
gradient.
"""

import math
from dataclasses import dataclass

import numpy as np

from .linalg import as_matrix


def huber(s, mu):
    """Smoothed absolute value; accepts scalars or arrays."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    s = np.asarray(s, dtype=np.float64)
    out = np.where(np.abs(s) > mu, np.abs(s), s * s / (2.0 * mu) + mu / 2.0)
    return float(out) if out.ndim == 0 else out


def huber_grad(s, mu):
    """Derivative of huber in s: sign outside the tube, s/mu inside."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    s = np.asarray(s, dtype=np.float64)
    out = np.where(np.abs(s) > mu, np.sign(s), s / mu)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MaskedData:
    """Observed entries of an m x n matrix: index arrays plus values.

    Indices must be in range and pairwise distinct; at least one entry
    is required. Arrays are frozen after construction.
    """

    rows: int
    cols: int
    row_idx: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rows and cols must be positive")
        ri = np.asarray(self.row_idx, dtype=np.int64)
        ci = np.asarray(self.col_idx, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.float64)
        if not (ri.ndim == ci.ndim == vals.ndim == 1):
            raise ValueError("row_idx, col_idx, values must be 1-D")
        if not (ri.size == ci.size == vals.size):
            raise ValueError("row_idx, col_idx, values must have equal length")
        if ri.size < 1:
            raise ValueError("at least one observed entry is required")
        if np.any(ri < 0) or np.any(ri >= self.rows):
            raise ValueError("row index out of range")
        if np.any(ci < 0) or np.any(ci >= self.cols):
            raise ValueError("column index out of range")
        if not np.isfinite(vals).all():
            raise ValueError("observed values must be finite")
        flat = ri * self.cols + ci
        if np.unique(flat).size != flat.size:
            raise ValueError("duplicate observed positions")
        for name, arr in (("row_idx", ri), ("col_idx", ci), ("values", vals)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_observed(self):
        return int(self.values.size)

    def observed_matrix(self):
        """Dense matrix with observed values filled in, zeros elsewhere."""
        M = np.zeros((self.rows, self.cols))
        M[self.row_idx, self.col_idx] = self.values
        return M


class CompletionLoss:
    """Masked absolute-deviation loss sum over observed (i, j) of |X_ij - M_ij|."""

    kind = "completion-l1"

    def __init__(self, data):
        if not isinstance(data, MaskedData):
            raise TypeError("CompletionLoss expects MaskedData")
        self.data = data
        self.shape = (data.rows, data.cols)
        self.n_terms = data.n_observed
        self.kappa = self.n_terms / 2.0
        self.grad_lipschitz_L = 1.0
        self.loss_lipschitz_Lf = math.sqrt(self.n_terms)

    def residuals(self, X):
        X = self._checked(X)
        return X[self.data.row_idx, self.data.col_idx] - self.data.values

    def value(self, X, mu):
        """Smoothed loss for mu > 0; the exact absolute loss at mu = 0."""
        r = self.residuals(X)
        if mu < 0:
            raise ValueError(f"mu must be nonnegative, got {mu}")
        if mu == 0:
            return float(np.sum(np.abs(r)))
        return float(np.sum(huber(r, mu)))

    def gradient(self, X, mu):
        """Gradient of the smoothed loss; zero off the observed set."""
        r = self.residuals(X)
        G = np.zeros(self.shape)
        G[self.data.row_idx, self.data.col_idx] = huber_grad(r, mu)
        return G

    def initial_iterate(self):
        """All-zeros start.

        Starting from zero makes the solve rank-incremental: a direction
        enters the iterate only once the data pulls on it harder than
        the prox threshold, which avoids locking in the spurious
        spectrum of the raw observed matrix.
        """
        return np.zeros(self.shape)

    def _checked(self, X):
        X = as_matrix(X)
        if X.shape != self.shape:
            raise ValueError(f"shape mismatch: {X.shape} vs {self.shape}")
        return X


class RpcaLoss:
    """Full absolute-deviation loss sum over all (i, j) of |L_ij - X_ij|."""

    kind = "rpca-l1"

    def __init__(self, L):
        self.L = as_matrix(L)
        self.shape = self.L.shape
        self.n_terms = self.L.size
        self.kappa = self.n_terms / 2.0
        self.grad_lipschitz_L = 1.0
        self.loss_lipschitz_Lf = math.sqrt(self.n_terms)

    def residuals(self, X):
        return self._checked(X) - self.L

    def value(self, X, mu):
        r = self.residuals(X)
        if mu < 0:
            raise ValueError(f"mu must be nonnegative, got {mu}")
        if mu == 0:
            return float(np.sum(np.abs(r)))
        return float(np.sum(huber(r, mu)))

    def gradient(self, X, mu):
        return huber_grad(self.residuals(X), mu)

    def initial_iterate(self):
        """All-zeros start; see CompletionLoss.initial_iterate."""
        return np.zeros(self.shape)

    def _checked(self, X):
        X = as_matrix(X)
        if X.shape != self.shape:
            raise ValueError(f"shape mismatch: {X.shape} vs {self.shape}")
        return X
