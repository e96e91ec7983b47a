import math

import numpy as np
import pytest

from spglr.linalg import (
    as_matrix,
    frobenius_norm,
    inner_product,
    rank_estimate,
    reconstruct,
    svd,
)

from oracles import random_orthogonal


def test_svd_identity():
    f = svd(np.eye(2))
    assert np.allclose(f.sigma, [1.0, 1.0])


def test_svd_diagonal():
    f = svd(np.diag([3.0, 1.0]))
    assert np.allclose(f.sigma, [3.0, 1.0])
    # factors are signed permutations on a diagonal input
    assert np.allclose(np.abs(f.U), np.eye(2), atol=1e-12)
    assert np.allclose(np.abs(f.V), np.eye(2), atol=1e-12)


def test_svd_reconstruction_5x4():
    rng = np.random.default_rng(0)
    W = rng.standard_normal((5, 4))
    f = svd(W)
    assert np.linalg.norm(reconstruct(f) - W) <= 1e-8 * max(1.0, np.linalg.norm(W))


@pytest.mark.parametrize("shape", [(1, 1), (3, 7), (7, 3), (50, 40), (40, 50), (12, 12)])
def test_svd_contract_random_shapes(shape):
    rng = np.random.default_rng(hash(shape) % 2**32)
    W = rng.standard_normal(shape)
    f = svd(W)
    k = min(shape)
    assert f.U.shape == (shape[0], k)
    assert f.sigma.shape == (k,)
    assert f.V.shape == (shape[1], k)
    assert np.all(np.diff(f.sigma) <= 0) and np.all(f.sigma >= 0)
    assert np.linalg.norm(f.U.T @ f.U - np.eye(k)) <= 1e-10 * k
    assert np.linalg.norm(f.V.T @ f.V - np.eye(k)) <= 1e-10 * k
    assert np.linalg.norm(reconstruct(f) - W) <= 1e-8 * max(1.0, np.linalg.norm(W))


def test_sigma_invariant_under_orthogonal_factors():
    rng = np.random.default_rng(3)
    W = rng.standard_normal((6, 5))
    Q = random_orthogonal(6, rng)
    P = random_orthogonal(5, rng)
    s0 = svd(W).sigma
    s1 = svd(Q @ W @ P.T).sigma
    assert np.max(np.abs(s0 - s1)) <= 1e-10


def test_frobenius_examples():
    assert frobenius_norm(np.zeros((3, 2))) == 0.0
    assert frobenius_norm(np.ones((2, 2))) == pytest.approx(2.0, abs=1e-15)
    assert frobenius_norm(np.diag([3.0, 4.0])) == pytest.approx(5.0, abs=1e-15)


def test_inner_product_examples():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((4, 3))
    assert inner_product(X, np.zeros((4, 3))) == 0.0
    assert inner_product(np.eye(2), np.eye(2)) == 2.0
    # <X, X> agrees with the squared norm to within accumulation error
    assert math.isclose(inner_product(X, X), frobenius_norm(X) ** 2, rel_tol=4e-16)


def test_inner_product_shape_mismatch():
    with pytest.raises(ValueError, match="shape mismatch"):
        inner_product(np.zeros((2, 2)), np.zeros((2, 3)))


@pytest.mark.parametrize(
    "bad",
    [np.array([1.0, 2.0]), np.full((2, 2), np.nan), np.array([[np.inf, 0.0]])],
)
def test_as_matrix_rejects(bad):
    with pytest.raises(ValueError):
        as_matrix(bad)


def test_as_matrix_rejects_empty():
    with pytest.raises(ValueError):
        as_matrix(np.zeros((0, 3)))


def test_rank_estimate():
    assert rank_estimate(np.array([1.0, 1e-12, 0.0])) == 1
    assert rank_estimate(np.zeros(4)) == 0
    assert rank_estimate(np.array([5.0, 3.0, 2.0])) == 3
