"""
Riemannian Trust-Region Solver
Outer trust-region loop on the reduced-model manifold with a truncated
(Steihaug-Toint) conjugate-gradient subproblem solver
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, List, NamedTuple, Optional
import csv
import logging
import math
import time

import numpy as np
from dataclasses_json import dataclass_json
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, model_validator
from pydantic import ValidationError as PydanticValidationError

from ..core.errors import DomainError, IoError, NumericalError, ValidationError
from ..core.event_manager import EventManager, EventType
from .manifold import ManifoldPoint, ReducedModelManifold, TangentVector
from .objective import H2Objective, ObjectiveData, PointWorkspace

HessianOperator = Callable[[TangentVector], TangentVector]

TRACE_HEADER = ("k", "f", "grad_norm", "delta", "rho", "accepted", "tcg_reason")


class TrustRegionConfig(BaseModel):
    """
    Trust-region settings

    Fields left as None are data dependent and filled by resolve():
    delta_bar = sqrt(dim), delta0 = delta_bar / 8,
    grad_tol = grad_tol_rel * max(1, ||grad f(p0)||), tcg_max_inner = dim.
    """

    model_config = ConfigDict(frozen=True, extra='forbid')

    delta_bar: Optional[PositiveFloat] = None
    delta0: Optional[PositiveFloat] = None
    gamma_prime: float = Field(0.1, ge=0.0, lt=0.25)
    max_iters: int = Field(500, ge=0)
    grad_tol: Optional[PositiveFloat] = None
    grad_tol_rel: PositiveFloat = 1e-6
    tcg_max_inner: Optional[PositiveInt] = None
    tcg_min_inner: int = Field(1, ge=0)
    tcg_kappa: float = Field(0.1, gt=0.0, lt=1.0)
    tcg_theta: PositiveFloat = 1.0
    min_delta: PositiveFloat = 1e-14
    decrease_guard: PositiveFloat = 1e-14
    perturbed_restart: bool = False
    restart_scale: PositiveFloat = 1e-3
    seed: int = 0

    @model_validator(mode='after')
    def _check_radii(self) -> "TrustRegionConfig":
        if self.delta_bar is not None and self.delta0 is not None and not self.delta0 < self.delta_bar:
            raise ValueError(f"delta0 ({self.delta0}) must be smaller than delta_bar ({self.delta_bar})")
        return self

    @classmethod
    def build(cls, **settings) -> "TrustRegionConfig":
        """Construct from loose settings, dropping None values"""
        try:
            return cls(**{k: v for k, v in settings.items() if v is not None})
        except PydanticValidationError as e:
            raise DomainError(f"invalid trust-region settings: {e}") from e

    def resolve(self, dim: int, grad0: float) -> "TrustRegionConfig":
        """Fill the data-dependent defaults for a manifold of dimension dim"""
        delta_bar = self.delta_bar if self.delta_bar is not None else math.sqrt(dim)
        delta0 = self.delta0 if self.delta0 is not None else delta_bar / 8.0
        update = {
            "delta_bar": delta_bar,
            "delta0": delta0,
            "grad_tol": self.grad_tol if self.grad_tol is not None
            else self.grad_tol_rel * max(1.0, grad0),
            "tcg_max_inner": self.tcg_max_inner if self.tcg_max_inner is not None else dim,
        }
        try:
            return TrustRegionConfig.model_validate({**self.model_dump(), **update})
        except PydanticValidationError as e:
            raise DomainError(f"invalid trust-region settings: {e}") from e


class TcgStopReason(Enum):
    NEGATIVE_CURVATURE = "negative curvature"
    EXCEEDED_TR = "exceeded trust region"
    REACHED_TARGET_LINEAR = "reached target residual-kappa (linear)"
    REACHED_TARGET_SUPERLINEAR = "reached target residual-theta (superlinear)"
    MAX_INNER_ITER = "maximum inner iterations"
    MODEL_INCREASED = "model increased"

    @property
    def on_boundary(self) -> bool:
        return self in (TcgStopReason.NEGATIVE_CURVATURE, TcgStopReason.EXCEEDED_TR)


class TerminationReason(Enum):
    GRADIENT_TOLERANCE = "gradient_tolerance"
    MAX_ITERATIONS = "max_iterations"
    RADIUS_COLLAPSED = "radius_collapsed"


@dataclass_json
@dataclass
class IterationRecord:
    """One outer iteration; k = 0 records the initial point"""

    k: int
    f_value: float
    grad_norm: float
    delta: float
    rho: Optional[float] = None
    step_accepted: bool = False
    tcg_stop_reason: Optional[str] = None
    inner_iterations: int = 0

    def csv_row(self) -> list:
        return [self.k, repr(self.f_value), repr(self.grad_norm), repr(self.delta),
                "" if self.rho is None else repr(self.rho),
                int(self.step_accepted), self.tcg_stop_reason or ""]


class TcgResult(NamedTuple):
    step: TangentVector
    hess_step: TangentVector
    iterations: int
    reason: TcgStopReason


@dataclass(eq=False)
class TrustRegionResult:
    point: ManifoldPoint
    f_value: float
    grad_norm: float
    trace: List[IterationRecord]
    termination: TerminationReason
    config: TrustRegionConfig
    wall_time_s: float = 0.0
    restarted: bool = False
    workspace: Optional[PointWorkspace] = field(default=None, repr=False)

    @property
    def iterations(self) -> int:
        return max(0, len(self.trace) - 1)

    @property
    def accepted_steps(self) -> int:
        return sum(1 for rec in self.trace if rec.step_accepted)

    @property
    def converged(self) -> bool:
        return self.termination is TerminationReason.GRADIENT_TOLERANCE


def model_value(manifold: ReducedModelManifold, point: ManifoldPoint, f0: float,
                grad: TangentVector, hess: HessianOperator, step: TangentVector) -> float:
    """Quadratic model f0 + <grad, s> + 1/2 <H s, s>"""
    if step.is_zero():
        return f0
    return f0 + manifold.inner(point, grad, step) + 0.5 * manifold.inner(point, hess(step), step)


def cauchy_point(manifold: ReducedModelManifold, point: ManifoldPoint, grad: TangentVector,
                 hess: HessianOperator, delta: float) -> TcgResult:
    """Minimizer of the model along -grad inside the trust region"""
    norm_g = manifold.norm(point, grad)
    Hg = hess(grad)
    g_Hg = manifold.inner(point, grad, Hg)
    if g_Hg <= 0:
        tau = 1.0
    else:
        tau = min(norm_g ** 3 / (delta * g_Hg), 1.0)
    scale = -tau * delta / norm_g
    reason = TcgStopReason.EXCEEDED_TR if tau == 1.0 else TcgStopReason.MODEL_INCREASED
    return TcgResult(scale * grad, scale * Hg, 1, reason)


def truncated_cg(point: ManifoldPoint, grad: TangentVector, hess: HessianOperator, delta: float,
                 cfg: TrustRegionConfig, manifold: ReducedModelManifold) -> TcgResult:
    """
    Steihaug-Toint truncated CG for min <grad, s> + 1/2 <H s, s>, ||s|| <= delta

    Starts from s = 0, so the first iterate is the Cauchy step; stops on
    negative curvature or at the boundary (both land exactly on ||s|| = delta),
    when ||r|| <= ||r0|| min(||r0||^theta, kappa), or after tcg_max_inner steps.
    A zero result (model increase on the very first step) falls back to the
    Cauchy point.
    """
    inner = lambda a, b: manifold.inner(point, a, b)
    max_inner = cfg.tcg_max_inner if cfg.tcg_max_inner is not None else manifold.dim

    eta = manifold.zero_vector()
    Heta = manifold.zero_vector()
    r = grad
    r_r = inner(r, r)
    norm_r0 = math.sqrt(r_r)
    z_r = r_r
    e_Pe = 0.0
    e_Pd = 0.0
    d_Pd = z_r
    d = -r
    model = 0.0

    reason = TcgStopReason.MAX_INNER_ITER
    j = 0
    for j in range(max_inner):
        Hd = hess(d)
        d_Hd = inner(d, Hd)
        alpha = z_r / d_Hd if d_Hd != 0 else math.inf
        e_Pe_new = e_Pe + 2.0 * alpha * e_Pd + alpha ** 2 * d_Pd

        if d_Hd <= 0 or e_Pe_new >= delta ** 2:
            tau = (-e_Pd + math.sqrt(e_Pd * e_Pd + d_Pd * (delta ** 2 - e_Pe))) / d_Pd
            eta = eta + tau * d
            Heta = Heta + tau * Hd
            reason = TcgStopReason.NEGATIVE_CURVATURE if d_Hd <= 0 else TcgStopReason.EXCEEDED_TR
            break

        new_eta = eta + alpha * d
        new_Heta = Heta + alpha * Hd
        new_model = inner(new_eta, grad) + 0.5 * inner(new_eta, new_Heta)
        if new_model >= model:
            reason = TcgStopReason.MODEL_INCREASED
            break
        e_Pe = e_Pe_new
        eta, Heta, model = new_eta, new_Heta, new_model

        r = r + alpha * Hd
        r_r = inner(r, r)
        norm_r = math.sqrt(max(r_r, 0.0))
        if norm_r == 0.0 or (j + 1 >= cfg.tcg_min_inner
                             and norm_r <= norm_r0 * min(norm_r0 ** cfg.tcg_theta, cfg.tcg_kappa)):
            if cfg.tcg_kappa < norm_r0 ** cfg.tcg_theta:
                reason = TcgStopReason.REACHED_TARGET_LINEAR
            else:
                reason = TcgStopReason.REACHED_TARGET_SUPERLINEAR
            break

        z_r_old = z_r
        z_r = r_r
        beta = z_r / z_r_old
        d = -r + beta * d
        e_Pd = beta * (e_Pd + alpha * d_Pd)
        d_Pd = z_r + beta * beta * d_Pd

    if eta.is_zero():
        return cauchy_point(manifold, point, grad, hess, delta)
    return TcgResult(eta, Heta, j + 1, reason)


class RiemannianTrustRegion:
    """
    Trust-region iteration on the reduced-model manifold

    Every candidate comes from the exponential map, so the SPD factor stays
    positive definite and each visited reduced model is stable.
    """

    def __init__(self, objective: H2Objective, config: Optional[TrustRegionConfig] = None,
                 event_manager: Optional[EventManager] = None):
        self.objective = objective
        self.manifold = objective.manifold
        self.config = config or TrustRegionConfig()
        self.event_manager = event_manager
        self.logger = logging.getLogger(__name__)

    def _emit(self, event_type: EventType, **data) -> None:
        if self.event_manager is not None:
            self.event_manager.emit(event_type, data, sender=self, immediate=True)

    def _evaluate_candidate(self, candidate_of: Callable[[], ManifoldPoint]):
        """(point, f, ws) or None when the candidate is numerically unusable"""
        try:
            candidate = candidate_of()
            f_new, ws_new = self.objective.cost(candidate)
        except (NumericalError, ValidationError) as e:
            self.logger.debug(f"Candidate rejected: {e}")
            return None
        if not np.isfinite(f_new):
            return None
        return candidate, f_new, ws_new

    def solve(self, p0: ManifoldPoint) -> TrustRegionResult:
        """Run the trust-region loop from p0"""
        start = time.perf_counter()
        result = self._run(p0, self.config)
        cfg = result.config

        if cfg.perturbed_restart:
            kick = cfg.restart_scale * cfg.delta_bar * self.manifold.random_tangent(result.point, seed=cfg.seed)
            perturbed = self._evaluate_candidate(lambda: self.manifold.exp_map(result.point, kick))
            if perturbed is not None:
                self.logger.info("Perturbed restart from the returned point")
                # cfg is already resolved, so the restart keeps the first run's grad_tol
                second = self._run(perturbed[0], cfg)
                if second.f_value < result.f_value:
                    second.trace = result.trace + second.trace
                    second.restarted = True
                    result = second

        result.wall_time_s = time.perf_counter() - start
        return result

    def _run(self, p0: ManifoldPoint, base_cfg: TrustRegionConfig) -> TrustRegionResult:
        manifold = self.manifold
        manifold.check_point(p0)
        p0.validate()

        x = p0
        fx, ws = self.objective.cost(x)
        grad = self.objective.gradient(x, ws)
        norm_grad = manifold.norm(x, grad)
        cfg = base_cfg.resolve(manifold.dim, norm_grad)
        delta = cfg.delta0

        trace = [IterationRecord(k=0, f_value=fx, grad_norm=norm_grad, delta=delta)]
        self._emit(EventType.TR_ITERATION, record=trace[0])
        self.logger.info(f"Trust region start: dim={manifold.dim}, f={fx:.6e}, "
                         f"|grad|={norm_grad:.3e}, grad_tol={cfg.grad_tol:.3e}")

        termination = TerminationReason.MAX_ITERATIONS
        k = 0
        while True:
            if norm_grad <= cfg.grad_tol:
                termination = TerminationReason.GRADIENT_TOLERANCE
                break
            if k >= cfg.max_iters:
                termination = TerminationReason.MAX_ITERATIONS
                break
            if delta < cfg.min_delta:
                termination = TerminationReason.RADIUS_COLLAPSED
                break

            x_ws = ws
            hess = lambda t, _x=x, _ws=x_ws: self.objective.hessian(_x, _ws, t)
            tcg = truncated_cg(x, grad, hess, delta, cfg, manifold)

            decrease = -(manifold.inner(x, grad, tcg.step) + 0.5 * manifold.inner(x, tcg.hess_step, tcg.step))
            model_decreased = decrease >= 0
            evaluated = self._evaluate_candidate(lambda: manifold.exp_map(x, tcg.step))

            if evaluated is None:
                rho = -math.inf
                x_new = f_new = ws_new = None
            else:
                x_new, f_new, ws_new = evaluated
                if abs(decrease) < cfg.decrease_guard * (1.0 + abs(fx)):
                    rho = 1.0 if f_new <= fx else 0.0
                else:
                    rho = (fx - f_new) / decrease

            if rho < 0.25 or not model_decreased:
                delta = delta / 4.0
            elif rho > 0.75 and tcg.reason.on_boundary:
                delta = min(2.0 * delta, cfg.delta_bar)

            accepted = evaluated is not None and model_decreased and rho > cfg.gamma_prime and f_new <= fx
            k += 1
            if accepted:
                x, fx, ws = x_new, f_new, ws_new
                grad = self.objective.gradient(x, ws)
                norm_grad = manifold.norm(x, grad)
                self._emit(EventType.TR_STEP_ACCEPTED, k=k, f=fx, rho=rho, point=x)
            else:
                self._emit(EventType.TR_STEP_REJECTED, k=k, rho=rho, delta=delta)

            record = IterationRecord(k=k, f_value=fx, grad_norm=norm_grad, delta=delta,
                                     rho=None if not math.isfinite(rho) else rho,
                                     step_accepted=accepted, tcg_stop_reason=tcg.reason.value,
                                     inner_iterations=tcg.iterations)
            trace.append(record)
            self.logger.debug(f"{'acc' if accepted else 'REJ'} k={k:4d} f={fx:.10e} "
                              f"|grad|={norm_grad:.3e} delta={delta:.3e} rho={rho:.3f} "
                              f"inner={tcg.iterations} ({tcg.reason.value})")
            self._emit(EventType.TR_ITERATION, record=record)

        if termination is TerminationReason.GRADIENT_TOLERANCE:
            self.logger.info(f"Trust region converged in {k} iterations: f={fx:.6e}, |grad|={norm_grad:.3e}")
            self._emit(EventType.TR_CONVERGED, k=k, f=fx, grad_norm=norm_grad)
        else:
            self.logger.warning(f"Trust region stopped ({termination.value}) after {k} iterations: "
                                f"f={fx:.6e}, |grad|={norm_grad:.3e}")
            self._emit(EventType.TR_MAX_ITERATIONS, k=k, f=fx, grad_norm=norm_grad,
                       reason=termination.value)

        return TrustRegionResult(point=x, f_value=fx, grad_norm=norm_grad, trace=trace,
                                 termination=termination, config=cfg, workspace=ws)


def trust_region_solve(data: ObjectiveData, p0: ManifoldPoint,
                       cfg: Optional[TrustRegionConfig] = None,
                       event_manager: Optional[EventManager] = None) -> TrustRegionResult:
    """Minimize the squared H2 error starting from p0"""
    objective = H2Objective(data, ReducedModelManifold.of(p0))
    return RiemannianTrustRegion(objective, cfg, event_manager).solve(p0)


def write_trace_csv(trace: List[IterationRecord], path) -> Path:
    """k,f,grad_norm,delta,rho,accepted,tcg_reason"""
    path = Path(path)
    try:
        with path.open('w', newline='') as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_HEADER)
            for record in trace:
                writer.writerow(record.csv_row())
    except OSError as e:
        raise IoError(f"cannot write trace to {path}: {e}") from e
    return path
