import numpy as np
import pytest

from src import cg
from src.errors import NotPositiveDefiniteError


def spd_matrix(rng, n=30, cond=1e3):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eigs = np.logspace(0, np.log10(cond), n)
    return Q @ np.diag(eigs) @ Q.T


def test_solves_dense_spd_system(rng):
    A = spd_matrix(rng)
    b = rng.standard_normal(A.shape[0])
    outcome = cg.solve(lambda v: A @ v, b, tol=1e-10)
    assert outcome.converged
    assert outcome.final_residual_norm <= 1e-10
    np.testing.assert_allclose(A @ outcome.x, b, atol=1e-9)


def test_weighted_inner_product(rng):
    # A = W^-1 S is self-adjoint in <a, b>_W = a^T W b
    n = 20
    W = np.diag(rng.uniform(0.5, 2.0, n))
    S = spd_matrix(rng, n, cond=50)
    W_inv = np.linalg.inv(W)
    b = rng.standard_normal(n)
    outcome = cg.solve(lambda v: W_inv @ (S @ v), b, lambda a, c: float(a @ (W @ c)), tol=1e-12)
    np.testing.assert_allclose(outcome.x, np.linalg.solve(W_inv @ S, b), rtol=1e-8)


def test_inner_products_with_rhs_are_bounded_below(rng):
    A = spd_matrix(rng, 40, cond=1e4)
    b = rng.standard_normal(40)
    bound = float(b @ b) / np.linalg.eigvalsh(A).max()
    outcome = cg.solve(lambda v: A @ v, b, tol=1e-12, record=True)
    products = outcome.inner_products_trace
    assert products[0] == 0.0
    assert len(products) == outcome.iterations + 1
    assert min(products[1:]) >= bound * (1 - 1e-8)


def test_residuals_are_mutually_orthogonal(rng):
    A = spd_matrix(rng, 25, cond=100)
    b = rng.standard_normal(25)
    outcome = cg.solve(lambda v: A @ v, b, tol=1e-12, record=True)
    R = np.column_stack(outcome.residual_trace[:10])
    R /= np.linalg.norm(R, axis=0)
    G = R.T @ R
    np.testing.assert_allclose(G - np.diag(np.diag(G)), 0.0, atol=1e-6)


def test_identity_converges_in_one_iteration(rng):
    b = rng.standard_normal(10)
    outcome = cg.solve(lambda v: v, b)
    assert outcome.iterations == 1
    np.testing.assert_allclose(outcome.x, b)


def test_zero_rhs_returns_zero():
    outcome = cg.solve(lambda v: v, np.zeros(5))
    assert outcome.iterations == 0
    assert outcome.converged
    np.testing.assert_array_equal(outcome.x, 0.0)


def test_indefinite_operator_raises():
    A = np.diag([1.0, -1.0])
    with pytest.raises(NotPositiveDefiniteError) as info:
        cg.solve(lambda v: A @ v, np.array([0.0, 1.0]))
    assert info.value.curvature < 0
    assert info.value.iteration == 0


def test_iteration_cap_returns_unconverged(rng):
    A = spd_matrix(rng, 30, cond=1e6)
    b = rng.standard_normal(30)
    outcome = cg.solve(lambda v: A @ v, b, tol=1e-14, max_iter=3)
    assert outcome.iterations == 3
    assert not outcome.converged
    assert outcome.final_residual_norm > 1e-14


def test_negative_tolerance_rejected():
    with pytest.raises(ValueError):
        cg.solve(lambda v: v, np.ones(3), tol=-1.0)


def test_traces_only_when_recording(rng):
    outcome = cg.solve(lambda v: 2 * v, rng.standard_normal(4))
    assert outcome.inner_products_trace is None
    assert outcome.residual_trace is None
