"""
Reduced-Model Manifold
Skew(r) x Sym+(r) x R^{r x m} x R^{p x r}: points, tangent vectors, the
product metric (affine-invariant on the SPD factor), gradient/Hessian
conversion and the exponential map
"""

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Optional, Sequence
import math

import numpy as np
from scipy import linalg
from typing_extensions import Self

from ..core.errors import DimensionMismatch, ManifoldViolation, NotPositiveDefinite
from ..linalg.matrix_equations import (
    Matrix, cholesky_lower, mat_exp, skew, spd_sqrt_pair, sym
)

STRUCTURE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    """A reduced model (J_r, R_r, B_r, C_r) with A_r = J_r - R_r"""

    J: Matrix
    R: Matrix
    B: Matrix
    C: Matrix

    def __post_init__(self):
        for name in ("J", "R", "B", "C"):
            object.__setattr__(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        r = self.J.shape[0]
        if self.J.shape != (r, r) or self.R.shape != (r, r):
            raise DimensionMismatch(f"J and R must be {r}x{r}, got {self.J.shape}, {self.R.shape}")
        if self.B.shape[0] != r or self.C.shape[1] != r:
            raise DimensionMismatch(f"B must have {r} rows and C {r} columns")

    @property
    def order(self) -> int:
        return self.J.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.C.shape[0]

    @property
    def A(self) -> Matrix:
        return self.J - self.R

    @cached_property
    def R_cholesky(self) -> Matrix:
        try:
            return cholesky_lower(self.R)
        except NotPositiveDefinite as e:
            raise ManifoldViolation(f"R_r is not SPD: {e}") from e

    def validate(self, tol: float = STRUCTURE_TOL) -> Self:
        """Raise ManifoldViolation unless J is skew and R is SPD"""
        scale = max(1.0, float(np.max(np.abs(self.J))))
        if np.max(np.abs(self.J + self.J.T)) > tol * scale:
            raise ManifoldViolation("J_r is not skew-symmetric")
        scale = max(1.0, float(np.max(np.abs(self.R))))
        if np.max(np.abs(self.R - self.R.T)) > tol * scale:
            raise ManifoldViolation("R_r is not symmetric")
        _ = self.R_cholesky
        return self

    def solve_R(self, X: Matrix) -> Matrix:
        """R^{-1} X"""
        return linalg.cho_solve((self.R_cholesky, True), X)


@dataclass(frozen=True, eq=False)
class TangentVector:
    """(xi, eta, zeta, kappa) with xi skew and eta symmetric"""

    xi: Matrix
    eta: Matrix
    zeta: Matrix
    kappa: Matrix

    def __add__(self, other: Self) -> Self:
        return TangentVector(self.xi + other.xi, self.eta + other.eta,
                             self.zeta + other.zeta, self.kappa + other.kappa)

    def __sub__(self, other: Self) -> Self:
        return TangentVector(self.xi - other.xi, self.eta - other.eta,
                             self.zeta - other.zeta, self.kappa - other.kappa)

    def __mul__(self, scalar: float) -> Self:
        return TangentVector(scalar * self.xi, scalar * self.eta,
                             scalar * self.zeta, scalar * self.kappa)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> Self:
        return self * (1.0 / scalar)

    def __neg__(self) -> Self:
        return self * -1.0

    def is_zero(self) -> bool:
        return not (np.any(self.xi) or np.any(self.eta) or np.any(self.zeta) or np.any(self.kappa))


class EuclideanGradient(NamedTuple):
    """Euclidean derivative of the flat extension, one block per factor"""

    J: Matrix
    R: Matrix
    B: Matrix
    C: Matrix


class ReducedModelManifold:
    """Product manifold of reduced models with r states, m inputs, p outputs"""

    def __init__(self, r: int, m: int, p: int):
        if r < 1 or m < 1 or p < 1:
            raise DimensionMismatch(f"need r, m, p >= 1, got {(r, m, p)}")
        self.r = r
        self.m = m
        self.p = p

    @classmethod
    def of(cls, point: ManifoldPoint) -> "ReducedModelManifold":
        return cls(point.order, point.n_inputs, point.n_outputs)

    @property
    def dim(self) -> int:
        r = self.r
        return r * (r - 1) // 2 + r * (r + 1) // 2 + r * self.m + self.p * r

    @property
    def typical_dist(self) -> float:
        return math.sqrt(self.dim)

    def check_point(self, point: ManifoldPoint) -> None:
        if (point.order, point.n_inputs, point.n_outputs) != (self.r, self.m, self.p):
            raise DimensionMismatch(
                f"point has shape {(point.order, point.n_inputs, point.n_outputs)}, "
                f"manifold is {(self.r, self.m, self.p)}")

    def check_tangent(self, t: TangentVector, tol: float = 1e-12) -> None:
        """Tangent invariants: xi skew, eta symmetric"""
        if np.max(np.abs(t.xi + t.xi.T), initial=0.0) > tol * max(1.0, np.max(np.abs(t.xi), initial=0.0)):
            raise ManifoldViolation("xi is not skew-symmetric")
        if np.max(np.abs(t.eta - t.eta.T), initial=0.0) > tol * max(1.0, np.max(np.abs(t.eta), initial=0.0)):
            raise ManifoldViolation("eta is not symmetric")

    def zero_vector(self) -> TangentVector:
        r, m, p = self.r, self.m, self.p
        return TangentVector(np.zeros((r, r)), np.zeros((r, r)), np.zeros((r, m)), np.zeros((p, r)))

    def inner(self, point: ManifoldPoint, t1: TangentVector, t2: TangentVector) -> float:
        """tr(xi1^T xi2) + tr(R^-1 eta1 R^-1 eta2) + tr(zeta1^T zeta2) + tr(kappa1^T kappa2)"""
        S1 = point.solve_R(t1.eta)
        S2 = S1 if t2 is t1 else point.solve_R(t2.eta)
        spd_part = float(np.sum(S1 * S2.T))
        return (float(np.sum(t1.xi * t2.xi)) + spd_part
                + float(np.sum(t1.zeta * t2.zeta)) + float(np.sum(t1.kappa * t2.kappa)))

    def norm(self, point: ManifoldPoint, t: TangentVector) -> float:
        return math.sqrt(max(self.inner(point, t, t), 0.0))

    def project_tangent(self, raw: Sequence[Matrix]) -> TangentVector:
        """Map an ambient 4-tuple onto the tangent space (sk, sym, id, id)"""
        xi, eta, zeta, kappa = (np.atleast_2d(np.asarray(x, dtype=float)) for x in raw)
        r, m, p = self.r, self.m, self.p
        expected = ((r, r), (r, r), (r, m), (p, r))
        for name, M, shape in zip(("xi", "eta", "zeta", "kappa"), (xi, eta, zeta, kappa), expected):
            if M.shape != shape:
                raise DimensionMismatch(f"{name} has shape {M.shape}, expected {shape}")
        return TangentVector(skew(xi), sym(eta), zeta.copy(), kappa.copy())

    def egrad_to_rgrad(self, point: ManifoldPoint, eg: Sequence[Matrix]) -> TangentVector:
        """Riesz representative: (sk(g_J), R sym(g_R) R, g_B, g_C)"""
        g_J, g_R, g_B, g_C = eg
        R = point.R
        return TangentVector(skew(g_J), sym(R @ sym(g_R) @ R), np.array(g_B, dtype=float),
                             np.array(g_C, dtype=float))

    def ehess_to_rhess(self, point: ManifoldPoint, eg: Sequence[Matrix],
                       ehess: Sequence[Matrix], t: TangentVector) -> TangentVector:
        """
        Riemannian Hessian from the Euclidean gradient and its directional
        derivative along t

        Flat factors take the projected derivative; the SPD factor gets
        R sym(D g_R[t]) R + sym(eta sym(g_R) R).
        """
        _, g_R, _, _ = eg
        h_J, h_R, h_B, h_C = ehess
        R = point.R
        eta_part = R @ sym(h_R) @ R + sym(t.eta @ sym(g_R) @ R)
        return TangentVector(skew(h_J), sym(eta_part), np.array(h_B, dtype=float),
                             np.array(h_C, dtype=float))

    def exp_map(self, point: ManifoldPoint, t: TangentVector) -> ManifoldPoint:
        """(J + xi, R^1/2 exp(R^-1/2 eta R^-1/2) R^1/2, B + zeta, C + kappa)"""
        self.check_point(point)
        self.check_tangent(t, tol=1e-8)
        if not np.any(t.eta):
            R_new = point.R.copy()
        else:
            try:
                root, inv_root = spd_sqrt_pair(point.R)
            except NotPositiveDefinite as e:
                raise ManifoldViolation(f"R_r is not SPD: {e}") from e
            R_new = sym(root @ mat_exp(sym(inv_root @ t.eta @ inv_root)) @ root)
        return ManifoldPoint(J=skew(point.J + t.xi), R=R_new, B=point.B + t.zeta, C=point.C + t.kappa)

    def random_tangent(self, point: ManifoldPoint, seed: Optional[int] = None) -> TangentVector:
        """Unit-norm random tangent vector (test support)"""
        rng = np.random.default_rng(seed)
        r, m, p = self.r, self.m, self.p
        t = self.project_tangent((rng.standard_normal((r, r)), rng.standard_normal((r, r)),
                                  rng.standard_normal((r, m)), rng.standard_normal((p, r))))
        return t / self.norm(point, t)

    def random_point(self, seed: Optional[int] = None) -> ManifoldPoint:
        """Random point with a well-conditioned R (test support)"""
        rng = np.random.default_rng(seed)
        r, m, p = self.r, self.m, self.p
        G = rng.standard_normal((r, r))
        return ManifoldPoint(J=skew(rng.standard_normal((r, r))), R=sym(G @ G.T / r + np.eye(r)),
                             B=rng.standard_normal((r, m)), C=rng.standard_normal((p, r)))
