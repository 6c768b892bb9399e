"""
矩陣方程核心測試
Lyapunov / Sylvester 求解、Cholesky、SPD 平方根、矩陣指數與穩定性判定
"""

import sys
import os
import math

import numpy as np
import pytest

# 添加 src 目錄到路徑
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src.core.errors import DimensionMismatch, NotPositiveDefinite, NotStable, SingularPencil
from src.linalg.matrix_equations import (
    SchurFactor, cholesky_lower, is_spd, is_stable, mat_exp, skew, solve_lyapunov_dual,
    solve_lyapunov_primal, solve_sylvester, solve_sylvester_factored, spd_sqrt, spd_sqrt_pair, sym
)
from src.models.msd import gen_msd


def _vec(X):
    return X.flatten(order='F')


def _unvec(x, rows, cols):
    return x.reshape((rows, cols), order='F')


def _random_stable(n, seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    return G - (np.linalg.norm(G, 2) + 0.5) * np.eye(n)


def _random_spd(n, seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    return G @ G.T + n * np.eye(n)


class TestLyapunov:
    def test_identity_example(self):
        X = solve_lyapunov_primal(-np.eye(3), np.eye(3))
        assert np.allclose(X, 0.5 * np.eye(3), atol=1e-14)

    def test_diagonal_off_diagonal_rhs(self):
        X = solve_lyapunov_primal(np.diag([-1.0, -2.0]), np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(X, [[0.0, 1.0 / 3.0], [1.0 / 3.0, 0.0]], atol=1e-14)

    def test_dual_jordan_block(self):
        A = np.array([[-1.0, 1.0], [0.0, -1.0]])
        X = solve_lyapunov_dual(A, np.eye(2))
        assert np.allclose(X, [[0.5, 0.25], [0.25, 0.75]], atol=1e-14)

    @pytest.mark.parametrize("seed", range(5))
    def test_primal_matches_kronecker(self, seed):
        n = 6
        A = _random_stable(n, seed)
        W = _random_spd(n, seed + 100)
        X = solve_lyapunov_primal(A, W)
        K = np.kron(np.eye(n), A) + np.kron(A, np.eye(n))
        X_ref = _unvec(np.linalg.solve(K, -_vec(W)), n, n)
        assert np.allclose(X, X_ref, rtol=1e-10, atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_dual_matches_kronecker(self, seed):
        n = 5
        A = _random_stable(n, seed)
        W = _random_spd(n, seed + 200)
        X = solve_lyapunov_dual(A, W)
        K = np.kron(np.eye(n), A.T) + np.kron(A.T, np.eye(n))
        X_ref = _unvec(np.linalg.solve(K, -_vec(W)), n, n)
        assert np.allclose(X, X_ref, rtol=1e-10, atol=1e-12)

    def test_solution_exactly_symmetric(self):
        A = _random_stable(7, 11)
        W = _random_spd(7, 12)
        for X in (solve_lyapunov_primal(A, W), solve_lyapunov_dual(A, W)):
            assert np.array_equal(X, X.T)

    def test_unstable_raises(self):
        with pytest.raises(NotStable):
            solve_lyapunov_primal(np.array([[1.0]]), np.array([[1.0]]))
        with pytest.raises(NotStable):
            solve_lyapunov_dual(np.diag([-1.0, 0.0]), np.eye(2))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            solve_lyapunov_primal(-np.eye(2), np.ones((3, 3)))
        with pytest.raises(DimensionMismatch):
            solve_lyapunov_primal(np.ones((2, 3)), np.eye(2))


class TestSylvester:
    def test_scalar(self):
        X = solve_sylvester([[-1.0]], [[-2.0]], [[6.0]])
        assert X.shape == (1, 1)
        assert X[0, 0] == pytest.approx(2.0, abs=1e-14)

    def test_overlapping_spectra(self):
        with pytest.raises(SingularPencil):
            solve_sylvester([[1.0]], [[-1.0]], [[1.0]])

    @pytest.mark.parametrize("seed", range(5))
    def test_rectangular_matches_kronecker(self, seed):
        n, r = 7, 3
        rng = np.random.default_rng(seed)
        A = _random_stable(n, seed)
        B = _random_stable(r, seed + 50)
        W = rng.standard_normal((n, r))
        X = solve_sylvester(A, B, W)
        K = np.kron(np.eye(r), A) + np.kron(B.T, np.eye(n))
        X_ref = _unvec(np.linalg.solve(K, -_vec(W)), n, r)
        assert np.allclose(X, X_ref, rtol=1e-10, atol=1e-12)

    def test_transposed_forms_reuse_factors(self):
        n, r = 6, 4
        rng = np.random.default_rng(3)
        A = _random_stable(n, 3)
        B = _random_stable(r, 4)
        W = rng.standard_normal((n, r))
        fa, fb = SchurFactor.of(A), SchurFactor.of(B)

        X = solve_sylvester_factored(fa, fb, W, trans_a=True, trans_b=True)
        assert np.allclose(A.T @ X + X @ B.T + W, 0.0, atol=1e-11)
        X = solve_sylvester_factored(fa, fb, W, trans_a=True)
        assert np.allclose(A.T @ X + X @ B + W, 0.0, atol=1e-11)
        X = solve_sylvester_factored(fa, fb, W, trans_b=True)
        assert np.allclose(A @ X + X @ B.T + W, 0.0, atol=1e-11)

    def test_rhs_shape_checked(self):
        fa, fb = SchurFactor.of(-np.eye(3)), SchurFactor.of(-np.eye(2))
        with pytest.raises(DimensionMismatch):
            solve_sylvester_factored(fa, fb, np.ones((2, 3)))


class TestSpdKernels:
    def test_cholesky_example(self):
        L = cholesky_lower(np.array([[4.0, 2.0], [2.0, 5.0]]))
        assert np.allclose(L, [[2.0, 0.0], [1.0, 2.0]], atol=1e-15)

    def test_cholesky_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            cholesky_lower(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert not is_spd(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert is_spd(np.eye(3))

    def test_sqrt_example(self):
        assert np.allclose(spd_sqrt(np.diag([1.0, 4.0])), np.diag([1.0, 2.0]), atol=1e-15)

    def test_sqrt_pair(self):
        S = _random_spd(5, 8)
        root, inv_root = spd_sqrt_pair(S)
        assert np.allclose(root @ root, S, rtol=1e-12, atol=1e-12)
        assert np.allclose(root @ inv_root, np.eye(5), atol=1e-12)
        assert np.array_equal(root, root.T)

    @pytest.mark.parametrize("seed", range(1000))
    def test_sqrt_squares_back(self, seed):
        n = 2 + seed % 5
        S = _random_spd(n, seed)
        root = spd_sqrt(S)
        assert np.allclose(root @ root, S, rtol=1e-11, atol=1e-11 * np.linalg.norm(S, 2))
        assert np.min(np.linalg.eigvalsh(root)) > 0

    def test_sqrt_rejects_semidefinite(self):
        with pytest.raises(NotPositiveDefinite):
            spd_sqrt(np.diag([1.0, 0.0]))


class TestMatrixExponential:
    def test_zero(self):
        assert np.allclose(mat_exp(np.zeros((3, 3))), np.eye(3), atol=0.0)

    def test_diagonal(self):
        E = mat_exp(np.diag([math.log(2.0), 0.0]))
        assert np.allclose(E, np.diag([2.0, 1.0]), atol=1e-14)

    def test_taylor_series(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((4, 4))
        X *= 0.5 / np.linalg.norm(X, 2)
        series = np.eye(4)
        term = np.eye(4)
        for k in range(1, 30):
            term = term @ X / k
            series = series + term
        assert np.allclose(mat_exp(X), series, atol=1e-14)

    @pytest.mark.parametrize("seed", range(1000))
    def test_series_and_eigen_forms(self, seed):
        rng = np.random.default_rng(seed)
        n = 2 + seed % 4
        X = rng.standard_normal((n, n))
        X *= rng.uniform(0.1, 1.0) / np.linalg.norm(X, 2)
        series = np.eye(n)
        term = np.eye(n)
        for k in range(1, 30):
            term = term @ X / k
            series = series + term
        assert np.allclose(mat_exp(X), series, rtol=0.0, atol=1e-13)
        S = sym(X)
        w, V = np.linalg.eigh(S)
        assert np.allclose(mat_exp(S), (V * np.exp(w)) @ V.T, rtol=0.0, atol=1e-13)

    @pytest.mark.parametrize("seed", range(1000))
    def test_inverse_is_negated_exponent(self, seed):
        rng = np.random.default_rng(seed)
        n = 2 + seed % 5
        X = rng.standard_normal((n, n))
        X *= rng.uniform(0.1, 2.0) / np.linalg.norm(X, 2)
        assert np.linalg.norm(mat_exp(X) @ mat_exp(-X) - np.eye(n), 2) <= 1e-10

    def test_skew_gives_rotation(self):
        E = mat_exp(skew(np.random.default_rng(6).standard_normal((4, 4))))
        assert np.allclose(E.T @ E, np.eye(4), atol=1e-13)


class TestStability:
    def test_basic(self):
        assert is_stable(-np.eye(3))
        assert not is_stable(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        assert not is_stable(np.array([[1.0]]))

    def test_margin(self):
        assert is_stable(-np.eye(2), margin=0.5)
        assert not is_stable(-np.eye(2), margin=1.0)

    def test_msd_chain(self):
        sys_, _ = gen_msd(50)
        assert is_stable(sys_.A)

    def test_schur_factor_abscissa(self):
        factor = SchurFactor.of(np.diag([-3.0, -0.5]))
        assert factor.spectral_abscissa() == pytest.approx(-0.5)
        factor.require_stable()
        with pytest.raises(NotStable):
            SchurFactor.of(np.diag([-3.0, 1e-14])).require_stable()

    def test_sym_skew_split(self):
        X = np.random.default_rng(9).standard_normal((4, 4))
        assert np.allclose(sym(X) + skew(X), X, atol=1e-15)


if __name__ == "__main__":
    pytest.main([__file__])
