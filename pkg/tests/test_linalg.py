"""Eigensolver tests: iterative solver against the dense oracle."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from tripletboost.linalg import (
    EigenSolverError,
    SymmetricOperator,
    dense_evd,
    largest_eigenpair,
    operator_from_matrix,
)


def random_symmetric(rng, dim):
    m = rng.standard_normal((dim, dim))
    return 0.5 * (m + m.T)


class TestLargestEigenpair:
    def test_diagonal_known_answer(self):
        m = np.diag([3.0, -1.0, 2.0])
        pair = largest_eigenpair(operator_from_matrix(m))
        assert_allclose(pair.value, 3.0, atol=1e-10)
        assert_allclose(np.abs(pair.vector), [1.0, 0.0, 0.0], atol=1e-7)

    def test_negative_definite_returns_largest_algebraic(self):
        m = np.diag([-5.0, -1.0, -3.0])
        pair = largest_eigenpair(operator_from_matrix(m))
        assert_allclose(pair.value, -1.0, atol=1e-10)
        assert_allclose(np.abs(pair.vector), [0.0, 1.0, 0.0], atol=1e-7)

    def test_one_dimensional_operator(self):
        pair = largest_eigenpair(operator_from_matrix(np.array([[4.5]])))
        assert_allclose(pair.value, 4.5)
        assert_allclose(np.abs(pair.vector), [1.0])

    def test_identity_degenerate_spectrum(self):
        pair = largest_eigenpair(operator_from_matrix(np.eye(6)))
        assert_allclose(pair.value, 1.0, atol=1e-10)
        assert_allclose(np.linalg.norm(pair.vector), 1.0, atol=1e-12)

    def test_agrees_with_dense_oracle(self):
        rng = np.random.default_rng(42)
        for trial in range(30):
            dim = int(rng.integers(2, 40))
            m = random_symmetric(rng, dim)
            pair = largest_eigenpair(operator_from_matrix(m))
            values, vectors = dense_evd(m)
            assert abs(pair.value - values[0]) <= 1e-8, f"trial {trial}"
            # vector matches up to sign unless the top eigenvalue is degenerate
            if values[0] - values[1] > 1e-6:
                overlap = abs(pair.vector @ vectors[:, 0])
                assert overlap > 1.0 - 1e-6, f"trial {trial}"

    def test_residual_bound_holds(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            m = random_symmetric(rng, 25)
            tol = 1e-10
            pair = largest_eigenpair(operator_from_matrix(m), tol=tol)
            res = np.linalg.norm(m @ pair.vector - pair.value * pair.vector)
            assert res <= tol * max(1.0, abs(pair.value))

    def test_unit_norm_vector(self):
        rng = np.random.default_rng(3)
        m = random_symmetric(rng, 12)
        pair = largest_eigenpair(operator_from_matrix(m))
        assert_allclose(np.linalg.norm(pair.vector), 1.0, atol=1e-12)

    def test_rank_one_difference_operator(self):
        # operator form used in training: w * (u (u.x) - v (v.x))
        u = np.array([2.0, 0.0, 1.0])
        v = np.array([0.0, 1.0, 0.0])
        m = np.outer(u, u) - np.outer(v, v)
        pair = largest_eigenpair(operator_from_matrix(m))
        values, _ = dense_evd(m)
        assert abs(pair.value - values[0]) <= 1e-10

    def test_non_finite_operator_rejected(self):
        op = SymmetricOperator(dim=3, apply=lambda x: x * np.nan)
        with pytest.raises(ValueError):
            largest_eigenpair(op)

    def test_budget_exhaustion_reports_best_iterate(self):
        rng = np.random.default_rng(0)
        m = random_symmetric(rng, 40)
        with pytest.raises(EigenSolverError) as info:
            largest_eigenpair(operator_from_matrix(m), tol=1e-15, max_iter=3)
        assert info.value.vector is not None
        assert info.value.residual is not None

    def test_invalid_arguments(self):
        m = np.eye(3)
        with pytest.raises(ValueError):
            largest_eigenpair(operator_from_matrix(m), tol=0.0)
        with pytest.raises(ValueError):
            largest_eigenpair(operator_from_matrix(m), max_iter=0)
        with pytest.raises(ValueError):
            largest_eigenpair(SymmetricOperator(dim=0, apply=lambda x: x))

    def test_deterministic_across_calls(self):
        rng = np.random.default_rng(11)
        m = random_symmetric(rng, 20)
        p1 = largest_eigenpair(operator_from_matrix(m))
        p2 = largest_eigenpair(operator_from_matrix(m))
        assert p1.value == p2.value
        assert np.array_equal(p1.vector, p2.vector)


class TestDenseEvd:
    def test_reconstruction_and_order(self):
        rng = np.random.default_rng(5)
        for dim in (2, 7, 31):
            m = random_symmetric(rng, dim)
            values, vectors = dense_evd(m)
            assert np.all(np.diff(values) <= 1e-12)
            assert_allclose(vectors @ np.diag(values) @ vectors.T, m, atol=1e-10)
            assert_allclose(vectors.T @ vectors, np.eye(dim), atol=1e-10)

    def test_identity_keeps_standard_basis(self):
        values, vectors = dense_evd(np.eye(4))
        assert_allclose(values, np.ones(4))
        assert np.array_equal(vectors, np.eye(4))

    def test_rejects_asymmetric(self):
        m = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            dense_evd(m)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            dense_evd(np.ones((2, 3)))

    def test_matches_iterative_on_top_value(self):
        rng = np.random.default_rng(19)
        m = random_symmetric(rng, 16)
        values, _ = dense_evd(m)
        pair = largest_eigenpair(operator_from_matrix(m))
        assert abs(values[0] - pair.value) <= 1e-9
