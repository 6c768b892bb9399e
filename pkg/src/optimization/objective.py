"""
H2 Error Objective
f(J_r, R_r, B_r, C_r) = ||G - G_r||_H2^2 with its Riemannian gradient and
Hessian-vector product, all driven by Lyapunov/Sylvester solves
"""

from dataclasses import dataclass
from typing import Tuple
import logging

import numpy as np

from ..linalg.matrix_equations import Matrix, SchurFactor, solve_lyapunov_factored, solve_sylvester_factored
from ..systems.structured_form import StructuredRealization
from .manifold import EuclideanGradient, ManifoldPoint, ReducedModelManifold, TangentVector

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ObjectiveData:
    """Full-model quantities that do not depend on the reduced point"""

    full: StructuredRealization
    sigma_c: Matrix
    sigma_o: Matrix
    const_term: float
    schur_full: SchurFactor


@dataclass(frozen=True, eq=False)
class PointWorkspace:
    """
    Solutions at one reduced point:
        A_r P + P A_r^T + B_r B_r^T = 0
        A_r^T Q + Q A_r + C_r^T C_r = 0
        A_t X + X A_r^T + B_t B_r^T = 0
        A_t^T Y + Y A_r - C_t^T C_r = 0
    """

    P: Matrix
    Q: Matrix
    X: Matrix
    Y: Matrix
    schur_reduced: SchurFactor

    @property
    def coupling(self) -> Matrix:
        """Q P + Y^T X, the common factor of the gradient"""
        return self.Q @ self.P + self.Y.T @ self.X


@dataclass(frozen=True, eq=False)
class DerivativeWorkspace:
    """Directional derivatives (P', Q', X', Y') of the workspace"""

    Pp: Matrix
    Qp: Matrix
    Xp: Matrix
    Yp: Matrix


def build_data(full: StructuredRealization) -> ObjectiveData:
    """Gramians of the structured full model and the constant ||G||^2"""
    schur_full = SchurFactor.of(full.A_eff)
    sigma_c = solve_lyapunov_factored(schur_full, full.Bt @ full.Bt.T, dual=False)
    sigma_o = solve_lyapunov_factored(schur_full, full.Ct.T @ full.Ct, dual=True)
    const_term = max(float(np.trace(full.Ct @ sigma_c @ full.Ct.T)), 0.0)
    logger.info(f"Objective data ready: n={full.n}, ||G||_H2^2={const_term:.6e}")
    return ObjectiveData(full=full, sigma_c=sigma_c, sigma_o=sigma_o,
                         const_term=const_term, schur_full=schur_full)


def build_workspace(data: ObjectiveData, point: ManifoldPoint) -> PointWorkspace:
    full = data.full
    schur_r = SchurFactor.of(point.A)
    schur_r.require_stable()
    Br, Cr = point.B, point.C
    P = solve_lyapunov_factored(schur_r, Br @ Br.T, dual=False)
    Q = solve_lyapunov_factored(schur_r, Cr.T @ Cr, dual=True)
    X = solve_sylvester_factored(data.schur_full, schur_r, full.Bt @ Br.T, trans_b=True)
    Y = solve_sylvester_factored(data.schur_full, schur_r, -(full.Ct.T @ Cr), trans_a=True)
    return PointWorkspace(P=P, Q=Q, X=X, Y=Y, schur_reduced=schur_r)


def eval_f(data: ObjectiveData, point: ManifoldPoint) -> Tuple[float, PointWorkspace]:
    """tr(Ct Sc Ct^T + C_r P C_r^T - 2 C_r X^T Ct^T)"""
    ws = build_workspace(data, point)
    Ct, Cr = data.full.Ct, point.C
    value = data.const_term + np.trace(Cr @ ws.P @ Cr.T) - 2.0 * np.trace(Cr @ ws.X.T @ Ct.T)
    return max(float(value), 0.0), ws


def eval_f_dual(data: ObjectiveData, point: ManifoldPoint, ws: PointWorkspace) -> float:
    """tr(Bt^T So Bt + B_r^T Q B_r + 2 Bt^T Y B_r)"""
    Bt, Br = data.full.Bt, point.B
    value = (np.trace(Bt.T @ data.sigma_o @ Bt) + np.trace(Br.T @ ws.Q @ Br)
             + 2.0 * np.trace(Bt.T @ ws.Y @ Br))
    return max(float(value), 0.0)


def euclidean_gradient(data: ObjectiveData, point: ManifoldPoint,
                       ws: PointWorkspace) -> EuclideanGradient:
    """2 (QP + Y^T X, -(QP + Y^T X), Q B_r + Y^T Bt, C_r P - Ct X)"""
    M = ws.coupling
    return EuclideanGradient(
        J=2.0 * M,
        R=-2.0 * M,
        B=2.0 * (ws.Q @ point.B + ws.Y.T @ data.full.Bt),
        C=2.0 * (point.C @ ws.P - data.full.Ct @ ws.X),
    )


def riemannian_gradient(data: ObjectiveData, point: ManifoldPoint,
                        ws: PointWorkspace) -> TangentVector:
    manifold = ReducedModelManifold.of(point)
    return manifold.egrad_to_rgrad(point, euclidean_gradient(data, point, ws))


def derivative_workspace(data: ObjectiveData, point: ManifoldPoint, ws: PointWorkspace,
                         t: TangentVector) -> DerivativeWorkspace:
    """Differentiate the four workspace equations along t"""
    full = data.full
    Ar_dot = t.xi - t.eta
    Br, Cr = point.B, point.C
    Bp, Cp = t.zeta, t.kappa
    schur_r = ws.schur_reduced

    W_P = Ar_dot @ ws.P + ws.P @ Ar_dot.T + Bp @ Br.T + Br @ Bp.T
    W_Q = Ar_dot.T @ ws.Q + ws.Q @ Ar_dot + Cp.T @ Cr + Cr.T @ Cp
    W_X = ws.X @ Ar_dot.T + full.Bt @ Bp.T
    W_Y = ws.Y @ Ar_dot - full.Ct.T @ Cp

    return DerivativeWorkspace(
        Pp=solve_lyapunov_factored(schur_r, W_P, dual=False),
        Qp=solve_lyapunov_factored(schur_r, W_Q, dual=True),
        Xp=solve_sylvester_factored(data.schur_full, schur_r, W_X, trans_b=True),
        Yp=solve_sylvester_factored(data.schur_full, schur_r, W_Y, trans_a=True),
    )


def hessian_vec(data: ObjectiveData, point: ManifoldPoint, ws: PointWorkspace,
                t: TangentVector) -> TangentVector:
    """Riemannian Hessian of f applied to t"""
    manifold = ReducedModelManifold.of(point)
    if t.is_zero():
        return manifold.zero_vector()
    d = derivative_workspace(data, point, ws, t)
    full = data.full
    D = d.Qp @ ws.P + ws.Q @ d.Pp + d.Yp.T @ ws.X + ws.Y.T @ d.Xp
    ehess = EuclideanGradient(
        J=2.0 * D,
        R=-2.0 * D,
        B=2.0 * (d.Qp @ point.B + ws.Q @ t.zeta + d.Yp.T @ full.Bt),
        C=2.0 * (t.kappa @ ws.P + point.C @ d.Pp - full.Ct @ d.Xp),
    )
    return manifold.ehess_to_rhess(point, euclidean_gradient(data, point, ws), ehess, t)


class H2Objective:
    """Bundles ObjectiveData with the manifold for the trust-region solver"""

    def __init__(self, data: ObjectiveData, manifold: ReducedModelManifold):
        self.data = data
        self.manifold = manifold
        self.evaluations = 0

    def cost(self, point: ManifoldPoint) -> Tuple[float, PointWorkspace]:
        self.evaluations += 1
        return eval_f(self.data, point)

    def gradient(self, point: ManifoldPoint, ws: PointWorkspace) -> TangentVector:
        return riemannian_gradient(self.data, point, ws)

    def hessian(self, point: ManifoldPoint, ws: PointWorkspace, t: TangentVector) -> TangentVector:
        return hessian_vec(self.data, point, ws, t)
