"""
Balanced Truncation
Square-root balanced truncation (DC-matched or plain) and the structured
initial point built from it
"""

from dataclasses import dataclass
from typing import Optional
import logging

import numpy as np
from scipy import linalg
from typing_extensions import Literal

from ..core.errors import DegenerateTruncation, DomainError, NumericalError
from ..linalg.matrix_equations import EPS_STAB, Matrix
from ..optimization.manifold import ManifoldPoint
from ..systems.lti import HankelSpectrum, StateSpace, error_system, gramian_factors, hinf_norm
from ..systems.structured_form import to_structured

logger = logging.getLogger(__name__)

GAP_TOL = 1e-12

BtMethod = Literal["match_dc", "truncate"]


@dataclass(frozen=True, eq=False)
class BtResult:
    """Reduced matrices of order r and the full Hankel spectrum"""

    Ar: Matrix
    Br: Matrix
    Cr: Matrix
    sigmas: HankelSpectrum
    method: str = "match_dc"
    # residualization feedthrough, not part of state_space
    feedthrough: Optional[Matrix] = None

    @property
    def order(self) -> int:
        return self.Ar.shape[0]

    @property
    def state_space(self) -> StateSpace:
        return StateSpace(self.Ar, self.Br, self.Cr)

    @property
    def error_bound(self) -> float:
        """2 * sum of the discarded Hankel singular values, plus ||D_r|| when it is dropped"""
        bound = 2.0 * self.sigmas.tail_sum(self.order)
        if self.feedthrough is not None and self.feedthrough.size:
            bound += float(np.linalg.norm(self.feedthrough, 2))
        return bound

    @property
    def sigma_next(self) -> float:
        """sigma_{r+1}, 0 when nothing was truncated"""
        r = self.order
        return self.sigmas.sigma(r + 1) if r < len(self.sigmas) else 0.0


def _fix_signs(U: Matrix, Vt: Matrix) -> None:
    """Make the first nonzero entry of every left singular vector positive"""
    for i in range(U.shape[1]):
        nonzero = np.flatnonzero(np.abs(U[:, i]) > 0)
        if len(nonzero) and U[nonzero[0], i] < 0:
            U[:, i] *= -1.0
            Vt[i, :] *= -1.0


def _eliminate_truncated(sys: StateSpace, Lc: Matrix, Lo: Matrix, U2: Matrix, V2: Matrix,
                         W: Matrix, T: Matrix, Ar: Matrix, Br: Matrix, Cr: Matrix):
    """
    Residualize the discarded balanced states

    The discarded block is taken in the coordinates T2 = Lc V2, W2 = Lo U2 S2^-1,
    where S2 cancels from A22^-1 [A21, B2]; only N = U2^T Lo^T A Lc V2 is inverted.
    """
    AT2 = sys.A @ (Lc @ V2)
    N = U2.T @ (Lo.T @ AT2)
    rhs = np.hstack([U2.T @ (Lo.T @ (sys.A @ T)), U2.T @ (Lo.T @ sys.B)])
    try:
        X = linalg.solve(N, rhs)
    except linalg.LinAlgError as e:
        raise NumericalError("discarded balanced block is singular; use method='truncate'") from e
    r = Ar.shape[0]
    A12 = W.T @ AT2
    C2 = sys.C @ (Lc @ V2)
    return Ar - A12 @ X[:, :r], Br - A12 @ X[:, r:], Cr - C2 @ X[:, :r], -C2 @ X[:, r:]


def bt_reduce(sys: StateSpace, r: int, verify_bound: bool = False,
              eps: float = EPS_STAB, method: BtMethod = "match_dc") -> BtResult:
    """
    Square-root balanced reduction to order r

    With Sc = Lc Lc^T, So = Lo Lo^T and Lo^T Lc = U S V^T, the projections
    W = Lo U_r S_r^-1/2 and T = Lc V_r S_r^-1/2 give the truncated model
    (W^T A T, W^T B, C T). The default "match_dc" method instead eliminates
    the discarded balanced states with x2' = 0, so G_r(0) + D_r = G(0); the
    feedthrough D_r is returned separately and left out of the strictly
    proper reduced model. "truncate" returns the plain projection.
    """
    if method not in ("match_dc", "truncate"):
        raise DomainError(f"method must be match_dc or truncate, got {method!r}")
    if not 1 <= r <= sys.n:
        raise DomainError(f"order must satisfy 1 <= r <= {sys.n}, got {r}")
    sys.require_stable(eps)

    Lc, Lo = gramian_factors(sys, eps)
    U, s, Vt = linalg.svd(Lo.T @ Lc)
    _fix_signs(U, Vt)
    sigmas = HankelSpectrum(sigmas=s)

    if s[r - 1] <= GAP_TOL * s[0]:
        raise DegenerateTruncation(f"sigma_{r} = {s[r - 1]:.3e} is numerically zero")
    if r < len(s) and s[r - 1] - s[r] < GAP_TOL * s[0]:
        raise DegenerateTruncation(
            f"sigma_{r} = {s[r - 1]:.6e} and sigma_{r + 1} = {s[r]:.6e} coincide")

    scale = 1.0 / np.sqrt(s[:r])
    W = Lo @ U[:, :r] * scale
    T = Lc @ Vt[:r, :].T * scale
    Ar, Br, Cr = W.T @ sys.A @ T, W.T @ sys.B, sys.C @ T
    if method == "match_dc" and r < sys.n:
        Ar, Br, Cr, Dr = _eliminate_truncated(sys, Lc, Lo, U[:, r:], Vt[r:, :].T, W, T, Ar, Br, Cr)
    else:
        Dr = np.zeros((sys.p, sys.m))
    result = BtResult(Ar=Ar, Br=Br, Cr=Cr, sigmas=sigmas, method=method, feedthrough=Dr)

    if not result.state_space.is_stable():
        raise NumericalError(f"balanced truncation to r={r} produced an unstable model")

    if verify_bound:
        err, _ = hinf_norm(error_system(sys, result.state_space))
        bound = result.error_bound
        if err > bound * (1.0 + 1e-6) + 1e-12:
            raise NumericalError(f"Hinf error {err:.6e} violates the bound 2*sum(sigma) = {bound:.6e}")
        logger.debug(f"BT bound check r={r}: {err:.6e} <= {bound:.6e}")

    logger.info(f"Balanced reduction ({method}) n={sys.n} -> r={r}, sigma_r+1={result.sigma_next:.5e}")
    return result


def bt_initial_point(sys: StateSpace, r: int, bt: Optional[BtResult] = None) -> ManifoldPoint:
    """
    Structured initial point from the BT model

    The BT matrices are moved into the J - R form through their own Lyapunov
    certificate, which leaves the transfer function unchanged.
    """
    if bt is None:
        bt = bt_reduce(sys, r)
    elif bt.order != r:
        raise DomainError(f"BT result has order {bt.order}, expected {r}")
    structured, _ = to_structured(bt.state_space)
    return structured.as_point().validate()
