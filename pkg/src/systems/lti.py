"""
LTI System Analysis
Transfer-function evaluation, Gramians, H2/Hinf norms, Hankel singular values,
Bode data, fixed-step simulation and the L-infinity output-error bound check
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple, Union
import logging

import numpy as np
from numpy.typing import NDArray
from scipy import integrate, linalg

from ..core.errors import DimensionMismatch, DomainError, NotPositiveDefinite, SingularResolvent
from ..linalg.matrix_equations import (
    EPS_STAB, Matrix, SchurFactor, cholesky_lower, is_stable, solve_lyapunov_factored
)

logger = logging.getLogger(__name__)

InputSignal = Union[NDArray[np.float64], Callable[[float], NDArray[np.float64]]]

HINF_GRID = (1e-3, 1e3, 400)


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Continuous-time realization x' = A x + B u, y = C x"""

    A: Matrix
    B: Matrix
    C: Matrix

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        n = A.shape[0]
        if B.ndim != 2 or B.shape[0] != n:
            raise DimensionMismatch(f"B must have {n} rows, got {B.shape}")
        if C.ndim != 2 or C.shape[1] != n:
            raise DimensionMismatch(f"C must have {n} columns, got {C.shape}")
        for name, M in (("A", A), ("B", B), ("C", C)):
            if not np.all(np.isfinite(M)):
                raise DomainError(f"{name} has non-finite entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def is_stable(self, margin: float = 0.0) -> bool:
        return is_stable(self.A, margin)

    def require_stable(self, eps: float = EPS_STAB) -> SchurFactor:
        """Schur factor of A, raising NotStable if A is not Hurwitz"""
        factor = SchurFactor.of(self.A)
        factor.require_stable(eps)
        return factor

    def similarity(self, T: Matrix) -> "StateSpace":
        """Realization in coordinates x = T z"""
        Tinv_A = linalg.solve(T, self.A)
        return StateSpace(Tinv_A @ T, linalg.solve(T, self.B), self.C @ T)


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    """G(i*omega) sampled on an increasing frequency grid"""

    frequencies: NDArray[np.float64]
    values: NDArray[np.complex128]  # shape (len(frequencies), p, m)

    def __post_init__(self):
        if len(self.frequencies) != len(self.values):
            raise DimensionMismatch("frequencies and values differ in length")
        if np.any(np.diff(self.frequencies) <= 0):
            raise DomainError("frequencies must be strictly increasing")

    @property
    def magnitudes_db(self) -> NDArray[np.float64]:
        with np.errstate(divide='ignore'):
            return 20.0 * np.log10(np.abs(self.values))

    @property
    def phases_deg(self) -> NDArray[np.float64]:
        return np.degrees(np.angle(self.values))

    def columns(self, label: str = "") -> Tuple[List[str], NDArray[np.float64]]:
        """CSV column names and data (mag_db_ij..., phase_deg_ij...)"""
        _, p, m = self.values.shape
        prefix = f"{label}_" if label else ""
        names = [f"{prefix}mag_db_{i + 1}{j + 1}" for i in range(p) for j in range(m)]
        names += [f"{prefix}phase_deg_{i + 1}{j + 1}" for i in range(p) for j in range(m)]
        k = len(self.frequencies)
        data = np.hstack([self.magnitudes_db.reshape(k, -1), self.phases_deg.reshape(k, -1)])
        return names, data

    def to_csv(self, path: str) -> None:
        names, data = self.columns()
        np.savetxt(path, np.column_stack([self.frequencies, data]), delimiter=',',
                   header=','.join(["omega"] + names), comments='')


@dataclass(frozen=True, eq=False)
class HankelSpectrum:
    """Hankel singular values in descending order"""

    sigmas: NDArray[np.float64]

    def __len__(self) -> int:
        return len(self.sigmas)

    def __getitem__(self, i):
        return self.sigmas[i]

    def sigma(self, k: int) -> float:
        """1-based access, sigma(1) is the largest"""
        return float(self.sigmas[k - 1])

    def tail_sum(self, r: int) -> float:
        return float(np.sum(self.sigmas[r:]))


@dataclass(frozen=True, eq=False)
class SimulationTrace:
    """Sampled input/output trajectory on a uniform time grid"""

    times: NDArray[np.float64]
    inputs: NDArray[np.float64]   # (N, m)
    outputs: NDArray[np.float64]  # (N, p)

    def to_csv(self, path: str) -> None:
        m, p = self.inputs.shape[1], self.outputs.shape[1]
        header = ["t"] + [f"u{j + 1}" for j in range(m)] + [f"y{i + 1}" for i in range(p)]
        np.savetxt(path, np.column_stack([self.times, self.inputs, self.outputs]),
                   delimiter=',', header=','.join(header), comments='')


@dataclass(frozen=True, eq=False)
class BoundCheck:
    lhs: float
    rhs: float
    holds: bool
    # input and output error y - y_r
    trace: Optional[SimulationTrace] = None


def transfer_eval(sys: StateSpace, omega: float) -> NDArray[np.complex128]:
    """G(i*omega) = C (i*omega*I - A)^{-1} B"""
    M = 1j * omega * np.eye(sys.n) - sys.A
    try:
        X = linalg.solve(M, sys.B.astype(complex))
    except linalg.LinAlgError as e:
        raise SingularResolvent(f"resolvent singular at omega={omega}") from e
    if not np.all(np.isfinite(X)):
        raise SingularResolvent(f"resolvent not finite at omega={omega}")
    return sys.C @ X


def sigma_max(sys: StateSpace, omega: float) -> float:
    """Largest singular value of G(i*omega)"""
    return float(linalg.svdvals(transfer_eval(sys, omega))[0])


def gramians(sys: StateSpace, eps: float = EPS_STAB) -> Tuple[Matrix, Matrix]:
    """Controllability and observability Gramians"""
    factor = sys.require_stable(eps)
    Sc = solve_lyapunov_factored(factor, sys.B @ sys.B.T, dual=False, eps=eps)
    So = solve_lyapunov_factored(factor, sys.C.T @ sys.C, dual=True, eps=eps)
    return Sc, So


def h2_norm(sys: StateSpace, eps: float = EPS_STAB) -> float:
    """H2 norm sqrt(tr(C Sc C^T))"""
    factor = sys.require_stable(eps)
    if not np.any(sys.C) or not np.any(sys.B):
        return 0.0
    Sc = solve_lyapunov_factored(factor, sys.B @ sys.B.T, dual=False, eps=eps)
    return float(np.sqrt(max(np.trace(sys.C @ Sc @ sys.C.T), 0.0)))


def h2_norm_dual(sys: StateSpace, eps: float = EPS_STAB) -> float:
    """H2 norm through the observability Gramian, sqrt(tr(B^T So B))"""
    factor = sys.require_stable(eps)
    So = solve_lyapunov_factored(factor, sys.C.T @ sys.C, dual=True, eps=eps)
    return float(np.sqrt(max(np.trace(sys.B.T @ So @ sys.B), 0.0)))


def error_system(full: StateSpace, reduced: StateSpace) -> StateSpace:
    """Realization of G - G_r: blkdiag(A, A_r), [B; B_r], [C, -C_r]"""
    if full.m != reduced.m or full.p != reduced.p:
        raise DimensionMismatch(
            f"input/output sizes differ: ({full.m},{full.p}) vs ({reduced.m},{reduced.p})")
    return StateSpace(
        linalg.block_diag(full.A, reduced.A),
        np.vstack([full.B, reduced.B]),
        np.hstack([full.C, -reduced.C]),
    )


def h2_error_norm(full: StateSpace, reduced: StateSpace, eps: float = EPS_STAB) -> float:
    """||G - G_r||_H2"""
    full.require_stable(eps)
    reduced.require_stable(eps)
    return h2_norm(error_system(full, reduced), eps)


def _hamiltonian(sys: StateSpace, gamma: float) -> Matrix:
    A, B, C = sys.A, sys.B, sys.C
    return np.block([[A, (B @ B.T) / gamma], [-(C.T @ C) / gamma, -A.T]])


def _imaginary_axis_frequencies(H: Matrix, tol: float) -> NDArray[np.float64]:
    ev = linalg.eigvals(H)
    on_axis = np.abs(ev.real) <= tol * np.maximum(1.0, np.abs(ev))
    return np.sort(ev.imag[on_axis])


def hinf_norm(sys: StateSpace, tol: float = 1e-6, grid_only: bool = False,
              grid: Tuple[float, float, int] = HINF_GRID, eig_tol: float = 1e-8,
              max_iter: int = 50, eps: float = EPS_STAB) -> Tuple[float, float]:
    """
    Hinf norm and the peak frequency

    The lower bound is seeded by a log-spaced grid scan (plus DC and the
    imaginary parts of the poles), then refined with the Hamiltonian
    imaginary-axis test: a level gamma is an upper bound iff
    [[A, BB^T/gamma], [-C^TC/gamma, -A^T]] has no eigenvalue on iR; otherwise
    the crossing frequencies bracket the intervals where sigma_max > gamma and
    the midpoints give the next lower bound.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    factor = sys.require_stable(eps)
    if not np.any(sys.C) or not np.any(sys.B):
        return 0.0, 0.0

    wmin, wmax, points = grid
    poles = np.abs(factor.eigenvalues.imag)
    candidates = np.unique(np.concatenate([[0.0], np.logspace(np.log10(wmin), np.log10(wmax), points),
                                           poles[poles > 0]]))
    values = np.array([sigma_max(sys, w) for w in candidates])
    k = int(np.argmax(values))
    gamma_lb, omega_peak = float(values[k]), float(candidates[k])
    if grid_only or gamma_lb == 0.0:
        return gamma_lb, omega_peak

    for _ in range(max_iter):
        gamma = (1.0 + tol) * gamma_lb
        crossings = _imaginary_axis_frequencies(_hamiltonian(sys, gamma), eig_tol)
        if len(crossings) == 0:
            break
        if len(crossings) == 1:
            mids = np.abs(crossings)
        else:
            mids = np.abs(0.5 * (crossings[:-1] + crossings[1:]))
        mid_values = np.array([sigma_max(sys, w) for w in mids])
        j = int(np.argmax(mid_values))
        if mid_values[j] <= gamma_lb:
            # crossings are numerical artefacts of a near-tangent peak
            break
        gamma_lb, omega_peak = float(mid_values[j]), float(mids[j])
    else:
        logger.warning(f"Hinf refinement did not converge in {max_iter} iterations")

    return gamma_lb, omega_peak


def _gramian_factor(S: Matrix) -> Matrix:
    """Factor F with S = F F^T; eigenvalue fallback for semidefinite Gramians"""
    try:
        return cholesky_lower(S)
    except NotPositiveDefinite:
        w, V = linalg.eigh(S)
        return V * np.sqrt(np.clip(w, 0.0, None))


def gramian_factors(sys: StateSpace, eps: float = EPS_STAB) -> Tuple[Matrix, Matrix]:
    Sc, So = gramians(sys, eps)
    return _gramian_factor(Sc), _gramian_factor(So)


def hankel_singular_values(sys: StateSpace, eps: float = EPS_STAB) -> HankelSpectrum:
    """sqrt(eig(Sc So)) computed as singular values of Lo^T Lc"""
    Lc, Lo = gramian_factors(sys, eps)
    return HankelSpectrum(sigmas=linalg.svdvals(Lo.T @ Lc))


def bode_data(sys: StateSpace, wmin: float, wmax: float, points: int) -> FrequencyResponse:
    """Frequency response on a log-spaced grid"""
    if wmin <= 0 or wmin >= wmax:
        raise DomainError(f"need 0 < wmin < wmax, got wmin={wmin}, wmax={wmax}")
    if points < 2:
        raise DomainError(f"need at least 2 points, got {points}")
    omegas = np.logspace(np.log10(wmin), np.log10(wmax), int(points))
    values = np.array([transfer_eval(sys, w) for w in omegas])
    return FrequencyResponse(frequencies=omegas, values=values)


def _input_at(u: InputSignal, t: float, k: float, m: int) -> NDArray[np.float64]:
    if callable(u):
        return np.atleast_1d(np.asarray(u(t), dtype=float)).reshape(m)
    samples = u
    lo = int(np.floor(k))
    hi = min(lo + 1, len(samples) - 1)
    frac = k - lo
    return (1.0 - frac) * samples[lo] + frac * samples[hi]


def simulate(sys: StateSpace, u: InputSignal, dt: float,
             t_final: Optional[float] = None) -> SimulationTrace:
    """
    Fixed-step RK4 from x(0) = 0

    `u` is either an (N, m) array sampled on the grid k*dt (linearly
    interpolated at half steps) or a callable t -> m-vector, in which case
    `t_final` sets the horizon.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    if callable(u):
        if t_final is None:
            raise DomainError("t_final is required for a callable input")
        steps = int(round(t_final / dt))
    else:
        u = np.asarray(u, dtype=float).reshape(len(u), -1)
        if u.shape[1] != sys.m:
            raise DimensionMismatch(f"input has {u.shape[1]} channels, system has {sys.m}")
        steps = len(u) - 1

    A, B, C = sys.A, sys.B, sys.C
    times = dt * np.arange(steps + 1)
    inputs = np.zeros((steps + 1, sys.m))
    states = np.zeros((steps + 1, sys.n))
    x = np.zeros(sys.n)

    def rhs(x_, u_):
        return A @ x_ + B @ u_

    inputs[0] = _input_at(u, 0.0, 0, sys.m)
    for k in range(steps):
        t = times[k]
        u0 = inputs[k]
        u_half = _input_at(u, t + 0.5 * dt, k + 0.5, sys.m)
        u1 = _input_at(u, t + dt, k + 1, sys.m)
        k1 = rhs(x, u0)
        k2 = rhs(x + 0.5 * dt * k1, u_half)
        k3 = rhs(x + 0.5 * dt * k2, u_half)
        k4 = rhs(x + dt * k3, u1)
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        states[k + 1] = x
        inputs[k + 1] = u1

    return SimulationTrace(times=times, inputs=inputs, outputs=states @ C.T)


def signal_l2_norm(times: NDArray[np.float64], values: NDArray[np.float64]) -> float:
    """Trapezoidal L2 norm of a vector signal"""
    sq = np.sum(np.asarray(values).reshape(len(times), -1) ** 2, axis=1)
    return float(np.sqrt(integrate.trapezoid(sq, times)))


def choose_horizon(u: Callable[[float], NDArray[np.float64]], dt: float,
                   t_start: float = 10.0, t_max: float = 1e4, ratio: float = 1e-8) -> float:
    """Smallest doubling of t_start with ||u(T)|| < ratio * max ||u||"""
    T = t_start
    while True:
        ts = np.arange(0.0, T + dt / 2, dt)
        norms = np.array([np.linalg.norm(u(t)) for t in ts])
        peak = norms.max() if len(norms) else 0.0
        if peak == 0.0 or norms[-1] < ratio * peak or T >= t_max:
            return T
        T *= 2.0


def linf_bound_check(full: StateSpace, reduced: StateSpace, u: InputSignal, dt: float,
                     t_final: Optional[float] = None) -> BoundCheck:
    """
    Check ||y - y_r||_Linf <= ||G - G_r||_H2 * ||u||_L2 by simulation

    Both models are simulated on the same grid and the outputs subtracted,
    so identical models give an exactly zero error.
    """
    if full.m != reduced.m or full.p != reduced.p:
        raise DimensionMismatch(f"io sizes differ: ({full.p}, {full.m}) vs ({reduced.p}, {reduced.m})")
    if callable(u) and t_final is None:
        t_final = choose_horizon(u, dt)
    y = simulate(full, u, dt, t_final)
    y_r = simulate(reduced, u, dt, t_final)
    trace = SimulationTrace(times=y.times, inputs=y.inputs, outputs=y.outputs - y_r.outputs)
    lhs = float(np.max(np.linalg.norm(trace.outputs, axis=1)))
    rhs = h2_error_norm(full, reduced) * signal_l2_norm(trace.times, trace.inputs)
    return BoundCheck(lhs=lhs, rhs=rhs, holds=bool(lhs <= rhs * (1.0 + 1e-3)), trace=trace)
