"""
Main Application Class
Orchestrates generation, reduction, evaluation, Bode export and the
benchmark runs; owns logging setup and the event manager
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence
import csv
import logging
import time

import numpy as np
from dataclasses_json import dataclass_json
from typing_extensions import Literal

from .config import ReductionConfig
from .errors import DomainError, IoError
from .event_manager import Event, EventManager, EventType
from ..models.msd import gen_msd
from ..models.system_io import load_any, load_reduced, load_system, save_point, save_system
from ..optimization.manifold import ManifoldPoint, ReducedModelManifold
from ..optimization.objective import H2Objective, ObjectiveData, build_data
from ..optimization.trust_region import IterationRecord, RiemannianTrustRegion, write_trace_csv
from ..reduction.balanced_truncation import BtResult, bt_initial_point, bt_reduce
from ..systems.lti import (
    StateSpace, bode_data, error_system, h2_error_norm, hankel_singular_values, hinf_norm,
    linf_bound_check
)
from ..systems.structured_form import point_to_state_space, to_structured

METHODS = ("bt", "riemannian")


def decaying_input(m: int):
    """u_j(t) = exp(-t/2) sin((j + 1) t), j = 0..m-1"""
    freqs = np.arange(1, m + 1, dtype=float)
    return lambda t: np.exp(-0.5 * t) * np.sin(freqs * t)


@dataclass_json
@dataclass
class RunReport:
    """One reduction run: the row structure of the comparison tables"""

    method: str
    r: int
    h2_error: float
    hinf_error: float
    sigma_next: float
    grad_norm_final: float
    iterations: int
    wall_time_s: float
    termination: Optional[str] = None
    hinf_omega: Optional[float] = None


@dataclass
class BenchRow:
    r: int
    sigma_next: float
    bt: RunReport
    proposed: RunReport


class TraceCollector:
    """TR_ITERATION listener that keeps the records for CSV export"""

    def __init__(self):
        self.records: List[IterationRecord] = []

    def __call__(self, event: Event) -> None:
        self.records.append(event.get_data("record"))

    def write(self, path) -> Path:
        return write_trace_csv(self.records, path)


class ReductionApp:
    """Main Application Class"""

    def __init__(self, config: Optional[ReductionConfig] = None):
        self.config = config or ReductionConfig()

        # Setup logging
        if self.config.debug:
            log_level = logging.DEBUG
        elif self.config.quiet:
            log_level = logging.WARNING
        else:
            log_level = logging.INFO
        logging.basicConfig(
            level=log_level,
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )
        self.logger = logging.getLogger(__name__)
        self.event_manager = EventManager()

    # ------------------------------------------------------------------ helpers

    def _hinf(self, sys: StateSpace):
        cfg = self.config
        return hinf_norm(sys, tol=cfg.hinf_tol, grid_only=cfg.hinf_grid_only,
                         grid=cfg.hinf_grid, eps=cfg.eps_stab)

    def _bt(self, full: StateSpace, r: int) -> BtResult:
        return bt_reduce(full, r, eps=self.config.stability_tol, method=self.config.bt_method)

    def _check_margin(self, sys: StateSpace, label: str) -> bool:
        margin = self.config.stability_margin
        if margin > 0 and not sys.is_stable(margin):
            self.logger.warning(f"{label} model has eigenvalues within {margin:g} of the imaginary axis")
            return False
        return True

    def _progress_logger(self, event: Event) -> None:
        record = event.get_data("record")
        if record is not None and record.k % 10 == 0:
            self.logger.debug(f"TR k={record.k} f={record.f_value:.6e} |grad|={record.grad_norm:.3e}")

    def prepare(self, full: StateSpace) -> ObjectiveData:
        """Structured realization and objective data of a full model"""
        full.require_stable(self.config.stability_tol)
        structured, _ = to_structured(full, eps=self.config.stability_tol)
        return build_data(structured)

    def _report(self, method: str, full: StateSpace, point: ManifoldPoint, sigma_next: float,
                grad_norm: float, iterations: int, wall_time: float,
                termination: Optional[str] = None) -> RunReport:
        reduced = point_to_state_space(point)
        self._check_margin(reduced, f"Reduced (r={point.order})")
        h2 = h2_error_norm(full, reduced, self.config.eps_stab)
        hinf, omega = self._hinf(error_system(full, reduced))
        if hinf < sigma_next - 1e-9:
            self.logger.warning(f"Hinf error {hinf:.6e} below sigma_r+1 = {sigma_next:.6e} (r={point.order})")
        return RunReport(method=method, r=point.order, h2_error=h2, hinf_error=hinf,
                         sigma_next=sigma_next, grad_norm_final=grad_norm, iterations=iterations,
                         wall_time_s=wall_time, termination=termination, hinf_omega=omega)

    def _gradient_norm(self, data: ObjectiveData, point: ManifoldPoint) -> float:
        objective = H2Objective(data, ReducedModelManifold.of(point))
        _, ws = objective.cost(point)
        return objective.manifold.norm(point, objective.gradient(point, ws))

    # --------------------------------------------------------------- reductions

    def run_bt(self, full: StateSpace, r: int, data: Optional[ObjectiveData] = None,
               bt: Optional[BtResult] = None):
        """(point, report) of balanced truncation in structured form"""
        start = time.perf_counter()
        bt = bt or self._bt(full, r)
        point = bt_initial_point(full, r, bt)
        data = data or self.prepare(full)
        grad_norm = self._gradient_norm(data, point)
        report = self._report("bt", full, point, bt.sigma_next, grad_norm, 0,
                              time.perf_counter() - start)
        return point, report

    def run_riemannian(self, full: StateSpace, r: int, data: Optional[ObjectiveData] = None,
                       init: Optional[ManifoldPoint] = None, trace_path=None,
                       bt: Optional[BtResult] = None):
        """(point, report, result) of the trust-region method started from BT"""
        start = time.perf_counter()
        bt = bt or self._bt(full, r)
        p0 = init if init is not None else bt_initial_point(full, r, bt)
        if p0.order != r:
            raise DomainError(f"initial point has order {p0.order}, expected {r}")
        data = data or self.prepare(full)

        run_events = EventManager()
        run_events.subscribe(EventType.TR_ITERATION, self._progress_logger)
        collector = TraceCollector()
        if trace_path is not None:
            run_events.subscribe(EventType.TR_ITERATION, collector)

        objective = H2Objective(data, ReducedModelManifold.of(p0))
        result = RiemannianTrustRegion(objective, self.config.trust_region, run_events).solve(p0)
        if trace_path is not None:
            collector.write(trace_path)

        report = self._report("riemannian", full, result.point, bt.sigma_next, result.grad_norm,
                              result.iterations, time.perf_counter() - start,
                              termination=result.termination.value)
        return result.point, report, result

    # ----------------------------------------------------------------- commands

    def cmd_gen(self, n: int, out) -> Path:
        sys, _ = gen_msd(n)
        path = save_system(sys, out)
        self.logger.info(f"MSD model n={n} written to {path}")
        return path

    def cmd_reduce(self, input_path, order: int, method: Literal["bt", "riemannian"], out, report_path=None,
                   trace_path=None, init_path=None) -> RunReport:
        if method not in METHODS:
            raise DomainError(f"method must be one of {METHODS}, got {method!r}")
        full = load_system(input_path)
        self.event_manager.emit(EventType.REDUCTION_START, {"method": method, "r": order}, immediate=True)
        if method == "bt":
            point, report = self.run_bt(full, order)
        else:
            init = load_reduced(init_path) if init_path is not None else None
            point, report, _ = self.run_riemannian(full, order, init=init, trace_path=trace_path)

        out = Path(out)
        save_point(point, out)
        report_path = Path(report_path) if report_path else out.with_name(out.stem + ".report.json")
        _write_json(report_path, report.to_json(indent=1))
        self.event_manager.emit(EventType.REDUCTION_COMPLETE, {"report": report}, immediate=True)
        self.logger.info(f"Reduction completed ({method}, r={order}): H2 error {report.h2_error:.5e}")
        return report

    def cmd_eval(self, full_path, reduced_path, norm: Literal["h2", "hinf", "both"] = "both",
                 linf: bool = False, trace_path=None) -> Dict[str, object]:
        """
        Error norms between two systems

        With `linf` (or a trace path) the output error bound
        ||y - y_r||_Linf <= ||G - G_r||_H2 ||u||_L2 is checked by simulating both
        models on the sim_dt / sim_t_final grid for a decaying multi-sine input.
        """
        if norm not in ("h2", "hinf", "both"):
            raise DomainError(f"norm must be h2, hinf or both, got {norm!r}")
        full = load_any(full_path)
        reduced = load_any(reduced_path)
        self._check_margin(reduced, "Reduced")
        result: Dict[str, object] = {}
        if norm in ("h2", "both"):
            result["h2_error"] = h2_error_norm(full, reduced, self.config.eps_stab)
        if norm in ("hinf", "both"):
            value, omega = self._hinf(error_system(full, reduced))
            result["hinf_error"] = value
            result["hinf_omega"] = omega
        if linf or trace_path is not None:
            cfg = self.config
            check = linf_bound_check(full, reduced, decaying_input(full.m), cfg.sim_dt, cfg.sim_t_final)
            result.update(linf_error=float(check.lhs), linf_bound=float(check.rhs), linf_holds=bool(check.holds))
            if not check.holds:
                self.logger.warning(f"Output error {check.lhs:.6e} exceeds the H2 bound {check.rhs:.6e}")
            if trace_path is not None:
                path = Path(trace_path)
                try:
                    path.parent.mkdir(parents=True, exist_ok=True)
                    check.trace.to_csv(str(path))
                except OSError as e:
                    raise IoError(f"cannot write {path}: {e}") from e
        return result

    def cmd_bode(self, input_paths: Sequence, out, wmin: Optional[float] = None,
                 wmax: Optional[float] = None, points: Optional[int] = None) -> Path:
        cfg = self.config
        wmin = cfg.bode_wmin if wmin is None else wmin
        wmax = cfg.bode_wmax if wmax is None else wmax
        points = cfg.bode_points if points is None else points
        if not input_paths:
            raise DomainError("bode needs at least one input file")

        names: List[str] = ["omega"]
        blocks = []
        frequencies = None
        for path in input_paths:
            response = bode_data(load_any(path), wmin, wmax, points)
            frequencies = response.frequencies
            cols, data = response.columns(label=Path(path).stem)
            names += cols
            blocks.append(data)

        out = Path(out)
        try:
            out.parent.mkdir(parents=True, exist_ok=True)
            np.savetxt(out, np.column_stack([frequencies] + blocks), delimiter=',',
                       header=','.join(names), comments='')
        except OSError as e:
            raise IoError(f"cannot write {out}: {e}") from e
        self.logger.info(f"Bode data for {len(input_paths)} systems written to {out}")
        return out

    def _bench_order(self, full: StateSpace, data: ObjectiveData, r: int) -> BenchRow:
        bt = self._bt(full, r)
        _, bt_report = self.run_bt(full, r, data=data, bt=bt)
        _, prop_report, _ = self.run_riemannian(full, r, data=data, bt=bt)
        row = BenchRow(r=r, sigma_next=bt.sigma_next, bt=bt_report, proposed=prop_report)
        self.event_manager.emit(EventType.BENCH_ROW, {"row": row})
        return row

    def cmd_bench(self, n: int, orders: Sequence[int], out_dir) -> List[BenchRow]:
        """Reproduce the H2 / Hinf / gradient-norm comparison tables for the MSD chain"""
        full, _ = gen_msd(n)
        data = self.prepare(full)
        orders = sorted(set(int(r) for r in orders))
        for r in orders:
            if not 1 <= r < n:
                raise DomainError(f"orders must lie in [1, {n - 1}], got {r}")

        workers = max(1, min(self.config.threads, len(orders)))
        self.logger.info(f"Benchmark MSD n={n}, orders={orders}, {workers} worker(s)")
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda r: self._bench_order(full, data, r), orders))

        out_dir = Path(out_dir)
        for row in rows:
            for report in (row.bt, row.proposed):
                _write_json(out_dir / "reports" / f"{report.method}_r{report.r}.json",
                            report.to_json(indent=1))
        # rows queued by the workers, in completion order
        self.event_manager.process_events()

        _write_table(out_dir / "h2_errors.csv", ["r", "bt", "proposed"],
                     [[row.r, row.bt.h2_error, row.proposed.h2_error] for row in rows])
        _write_table(out_dir / "hinf_errors.csv", ["r", "bt", "proposed", "sigma_next"],
                     [[row.r, row.bt.hinf_error, row.proposed.hinf_error, row.sigma_next] for row in rows])
        _write_table(out_dir / "grad_norms.csv", ["r", "bt", "proposed"],
                     [[row.r, row.bt.grad_norm_final, row.proposed.grad_norm_final] for row in rows])
        self.logger.info(f"Benchmark tables written to {out_dir}")
        return rows

    def cmd_check(self, building_path=None, r: int = 3) -> Dict[str, object]:
        """Building-model comparison (BT vs trust region) for a user-supplied file"""
        if building_path is None or not Path(building_path).is_file():
            self.logger.warning("Building model file not provided; check skipped")
            return {"status": "skipped", "reason": "building model file not found"}
        full = load_system(building_path)
        data = self.prepare(full)
        spectrum = hankel_singular_values(full, self.config.stability_tol)
        _, bt_report = self.run_bt(full, r, data=data)
        _, prop_report, _ = self.run_riemannian(full, r, data=data)
        return {
            "status": "ok",
            "n": full.n,
            "r": r,
            "sigma_next": spectrum.sigma(r + 1) if r < len(spectrum) else 0.0,
            "bt_h2_error": bt_report.h2_error,
            "proposed_h2_error": prop_report.h2_error,
            "bt_hinf_error": bt_report.hinf_error,
            "proposed_hinf_error": prop_report.hinf_error,
            "proposed_grad_norm": prop_report.grad_norm_final,
        }


def _write_json(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def _write_table(path: Path, header: List[str], rows: List[list]) -> None:
    """CSV with fixed 6-significant-digit formatting so reruns compare equal"""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open('w', newline='') as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([row[0]] + [f"{v:.6e}" for v in row[1:]])
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e
