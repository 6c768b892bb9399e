"""
Structured (J - R) Realization
Lyapunov certificate + Cholesky congruence that turns a stable realization
into x' = (J - R) x + B u with J skew and R SPD, and the way back
"""

from dataclasses import dataclass
from typing import Optional, Tuple
import logging

import numpy as np
from scipy import linalg

from ..core.errors import DimensionMismatch, ManifoldViolation, NotStable
from ..linalg.matrix_equations import (
    EPS_STAB, Matrix, cholesky_lower, is_spd, is_stable, skew, solve_lyapunov_factored, sym
)
from ..optimization.manifold import ManifoldPoint
from .lti import StateSpace

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StructuredRealization:
    """(Jt, Rt, Bt, Ct) with Jt skew and Rt SPD"""

    Jt: Matrix
    Rt: Matrix
    Bt: Matrix
    Ct: Matrix

    @property
    def A_eff(self) -> Matrix:
        return self.Jt - self.Rt

    @property
    def n(self) -> int:
        return self.Jt.shape[0]

    def to_state_space(self) -> StateSpace:
        return StateSpace(self.A_eff, self.Bt, self.Ct)

    def as_point(self) -> ManifoldPoint:
        """The full model viewed as a point of the order-n manifold"""
        return ManifoldPoint(J=self.Jt, R=self.Rt, B=self.Bt, C=self.Ct)


@dataclass(frozen=True, eq=False)
class StructuredTransform:
    """Lyapunov certificate Q (A^T Q + Q A + W = 0) and its Cholesky factor"""

    Q: Matrix
    L: Matrix

    def to_structured_coordinates(self, sys: StateSpace) -> StateSpace:
        """x_tilde = L^T x"""
        L = self.L
        A_t = L.T @ linalg.solve_triangular(L, sys.A.T, lower=True).T
        B_t = L.T @ sys.B
        C_t = linalg.solve_triangular(L, sys.C.T, lower=True).T
        return StateSpace(A_t, B_t, C_t)

    def to_original_coordinates(self, structured: StructuredRealization) -> StateSpace:
        """x = L^-T x_tilde"""
        L = self.L
        A = linalg.solve_triangular(L, structured.A_eff, lower=True, trans='T') @ L.T
        B = linalg.solve_triangular(L, structured.Bt, lower=True, trans='T')
        C = structured.Ct @ L.T
        return StateSpace(A, B, C)


def to_structured(sys: StateSpace, W: Optional[Matrix] = None,
                  eps: float = EPS_STAB) -> Tuple[StructuredRealization, StructuredTransform]:
    """
    Structured realization of a stable system

    Q solves A^T Q + Q A + W = 0 (W = I by default), Q = L L^T, and in the
    coordinates x_tilde = L^T x the state matrix is A_t = L^T A L^-T. Its
    skew part is Jt = L^T J L and minus its symmetric part is Rt = L^T R L
    with J = (A Q^-1 - Q^-1 A^T)/2 and R = -(A Q^-1 + Q^-1 A^T)/2.
    """
    factor = sys.require_stable(eps)
    if W is None:
        W = np.eye(sys.n)
    else:
        W = np.atleast_2d(np.asarray(W, dtype=float))
        if W.shape != (sys.n, sys.n):
            raise DimensionMismatch(f"W must be {sys.n}x{sys.n}, got {W.shape}")
        if not is_spd(W):
            raise ManifoldViolation("W must be symmetric positive definite")

    Q = solve_lyapunov_factored(factor, W, dual=True, eps=eps)
    L = cholesky_lower(Q)
    transform = StructuredTransform(Q=Q, L=L)

    moved = transform.to_structured_coordinates(sys)
    structured = StructuredRealization(
        Jt=skew(moved.A), Rt=-sym(moved.A), Bt=moved.B, Ct=moved.C)
    logger.debug(f"Structured realization built (n={sys.n}, cond(Q)={np.linalg.cond(Q):.2e})")
    return structured, transform


def point_to_state_space(point: ManifoldPoint) -> StateSpace:
    """Reduced model x' = (J_r - R_r) x + B_r u, y = C_r x"""
    point.validate()
    A = point.A
    if not is_stable(A):
        raise NotStable("J_r - R_r is not Hurwitz although R_r is SPD")
    return StateSpace(A, point.B, point.C)


def assemble_from_jrq(J: Matrix, R: Matrix, Q: Matrix, B: Matrix, C: Matrix) -> StateSpace:
    """State-space form A = (J - R) Q of a port-Hamiltonian-like triple"""
    J, R, Q = (np.atleast_2d(np.asarray(M, dtype=float)) for M in (J, R, Q))
    n = J.shape[0]
    for name, M in (("J", J), ("R", R), ("Q", Q)):
        if M.shape != (n, n):
            raise DimensionMismatch(f"{name} must be {n}x{n}, got {M.shape}")
    sys = StateSpace((J - R) @ Q, B, C)
    if is_spd(R) and is_spd(Q) and not sys.is_stable():
        raise NotStable("(J - R) Q is not Hurwitz for SPD R and Q")
    return sys
