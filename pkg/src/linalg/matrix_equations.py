"""
Dense Matrix-Equation Kernels
Real Schur factors, Bartels-Stewart Lyapunov/Sylvester solvers, Cholesky,
SPD square roots, matrix exponential and the Hurwitz stability test
"""

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from numpy.typing import NDArray
from scipy import linalg
from scipy.linalg.lapack import get_lapack_funcs

from ..core.errors import (
    DimensionMismatch, NotPositiveDefinite, NotStable, SingularPencil
)

Matrix = NDArray[np.float64]

EPS_STAB = 1e-12
EPS_PENCIL = 1e-12
SPD_CLIP = 1e-14


def sym(X: Matrix) -> Matrix:
    """Symmetric part (X + X^T) / 2"""
    return 0.5 * (X + X.T)


def skew(X: Matrix) -> Matrix:
    """Skew-symmetric part (X - X^T) / 2"""
    return 0.5 * (X - X.T)


def as_square(A, name: str = "A") -> Matrix:
    """Convert to a float 2-D array and check it is square and finite"""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {A.shape}")
    if A.shape[0] < 1:
        raise DimensionMismatch(f"{name} must have order >= 1")
    return A


@dataclass(frozen=True, eq=False)
class SchurFactor:
    """Real Schur decomposition A = U T U^T, reusable for A and A^T"""

    T: Matrix
    U: Matrix
    eigenvalues: NDArray[np.complex128] = field(repr=False)

    @classmethod
    def of(cls, A) -> "SchurFactor":
        A = as_square(A)
        T, U = linalg.schur(A, output='real')
        return cls(T=T, U=U, eigenvalues=linalg.eigvals(T))

    @property
    def order(self) -> int:
        return self.T.shape[0]

    def spectral_abscissa(self) -> float:
        """Largest real part of the spectrum"""
        return float(np.max(self.eigenvalues.real))

    def require_stable(self, eps: float = EPS_STAB) -> None:
        abscissa = self.spectral_abscissa()
        if abscissa >= -eps:
            raise NotStable(f"matrix is not Hurwitz: max Re(lambda) = {abscissa:.3e}")


def _trsyl(T_a: Matrix, T_b: Matrix, C: Matrix, trana: str, tranb: str) -> Matrix:
    """Quasi-triangular back-substitution op(T_a) X + X op(T_b) = C"""
    trsyl, = get_lapack_funcs(('trsyl',), (T_a, T_b, C))
    X, scale, info = trsyl(T_a, T_b, C, trana=trana, tranb=tranb)
    if info < 0:
        raise SingularPencil(f"trsyl: illegal value in argument {-info}")
    if info == 1:
        raise SingularPencil("A and -B have (nearly) common eigenvalues")
    return scale * X


def solve_sylvester_factored(fa: SchurFactor, fb: SchurFactor, W: Matrix,
                             trans_a: bool = False, trans_b: bool = False) -> Matrix:
    """
    Solve op(A) X + X op(B) + W = 0 with cached Schur factors

    op(M) is M or M^T depending on the trans flags. Both factors are reused
    unchanged for the transposed forms, which is what lets the objective run
    all of its per-point and per-direction solves off two factorizations.
    """
    W = np.asarray(W, dtype=float)
    if W.shape != (fa.order, fb.order):
        raise DimensionMismatch(
            f"right-hand side has shape {W.shape}, expected {(fa.order, fb.order)}")

    lam = fa.eigenvalues[:, None] + fb.eigenvalues[None, :]
    scale = 1.0 + max(np.max(np.abs(fa.T)), np.max(np.abs(fb.T)))
    if np.min(np.abs(lam)) < EPS_PENCIL * scale:
        raise SingularPencil(
            f"min |lambda_i(A) + lambda_j(B)| = {np.min(np.abs(lam)):.3e}")

    rhs = -(fa.U.T @ W @ fb.U)
    Xs = _trsyl(fa.T, fb.T, rhs, 'T' if trans_a else 'N', 'T' if trans_b else 'N')
    return fa.U @ Xs @ fb.U.T


def solve_sylvester(A, B, W) -> Matrix:
    """Solve A X + X B + W = 0 (Bartels-Stewart)"""
    A = as_square(A, "A")
    B = as_square(B, "B")
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if W.shape != (A.shape[0], B.shape[0]):
        raise DimensionMismatch(
            f"W has shape {W.shape}, expected {(A.shape[0], B.shape[0])}")
    return solve_sylvester_factored(SchurFactor.of(A), SchurFactor.of(B), W)


def solve_lyapunov_factored(fa: SchurFactor, W: Matrix, dual: bool = False,
                            eps: float = EPS_STAB) -> Matrix:
    """A X + X A^T + W = 0 (dual: A^T X + X A + W = 0) from a Schur factor"""
    fa.require_stable(eps)
    W = np.asarray(W, dtype=float)
    if W.shape != (fa.order, fa.order):
        raise DimensionMismatch(f"W has shape {W.shape}, expected {(fa.order, fa.order)}")
    X = solve_sylvester_factored(fa, fa, sym(W), trans_a=dual, trans_b=not dual)
    return sym(X)


def solve_lyapunov_primal(A, W, eps: float = EPS_STAB) -> Matrix:
    """Solve A X + X A^T + W = 0 for stable A"""
    return solve_lyapunov_factored(SchurFactor.of(A), np.atleast_2d(W), dual=False, eps=eps)


def solve_lyapunov_dual(A, W, eps: float = EPS_STAB) -> Matrix:
    """Solve A^T X + X A + W = 0 for stable A"""
    return solve_lyapunov_factored(SchurFactor.of(A), np.atleast_2d(W), dual=True, eps=eps)


def cholesky_lower(S) -> Matrix:
    """Lower Cholesky factor L with S = L L^T"""
    S = as_square(S, "S")
    try:
        return linalg.cholesky(sym(S), lower=True)
    except linalg.LinAlgError as e:
        raise NotPositiveDefinite(f"Cholesky failed: {e}") from e


def is_spd(S) -> bool:
    try:
        cholesky_lower(S)
    except NotPositiveDefinite:
        return False
    return True


def _spd_eigh(S) -> Tuple[NDArray[np.float64], Matrix]:
    S = as_square(S, "S")
    w, V = linalg.eigh(sym(S))
    if w[-1] <= 0 or w[0] <= SPD_CLIP * w[-1]:
        raise NotPositiveDefinite(
            f"eigenvalues not safely positive: min {w[0]:.3e}, max {w[-1]:.3e}")
    return w, V


def spd_sqrt(S) -> Matrix:
    """S^{1/2} via symmetric eigendecomposition"""
    w, V = _spd_eigh(S)
    return sym((V * np.sqrt(w)) @ V.T)


def spd_sqrt_pair(S) -> Tuple[Matrix, Matrix]:
    """(S^{1/2}, S^{-1/2}) from one eigendecomposition"""
    w, V = _spd_eigh(S)
    root = np.sqrt(w)
    return sym((V * root) @ V.T), sym((V / root) @ V.T)


def mat_exp(X) -> Matrix:
    """Matrix exponential (scaling and squaring with Pade approximant)"""
    return linalg.expm(as_square(X, "X"))


def is_stable(A, margin: float = 0.0) -> bool:
    """True iff max Re(eig(A)) < -margin"""
    A = as_square(A)
    return bool(np.max(linalg.eigvals(A).real) < -margin)
