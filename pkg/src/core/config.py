"""
Reduction Configuration Class
Numerical tolerances, frequency grids, simulation and solver settings
"""

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple
import os

from ..optimization.trust_region import TrustRegionConfig
from .errors import DomainError, IoError, ParseError

THREADS_ENV = "H2REDUCE_THREADS"
BT_METHODS = ("match_dc", "truncate")


@dataclass
class ReductionConfig:
    """Reduction Configuration Class"""

    # Debug settings
    debug: bool = False
    quiet: bool = False

    # Stability settings
    stability_margin: float = 0.0
    eps_stab: float = 1e-12

    # Balanced truncation (match_dc or truncate)
    bt_method: str = "match_dc"

    # Hinf settings
    hinf_tol: float = 1e-6
    hinf_grid_min: float = 1e-3
    hinf_grid_max: float = 1e3
    hinf_grid_points: int = 400
    hinf_grid_only: bool = False

    # Bode settings (rad/s)
    bode_wmin: float = 1e-2
    bode_wmax: float = 1e2
    bode_points: int = 200

    # Simulation settings
    sim_dt: float = 1e-2
    sim_t_final: float = 40.0

    # Parallelism (None: H2REDUCE_THREADS or the CPU count)
    threads: Optional[int] = None

    # Optimizer settings
    trust_region: TrustRegionConfig = field(default_factory=TrustRegionConfig)

    def __post_init__(self):
        """Post-initialization processing, resolve thread cap and check ranges"""
        if self.threads is None:
            env = os.environ.get(THREADS_ENV)
            if env:
                try:
                    self.threads = int(env)
                except ValueError as e:
                    raise DomainError(f"{THREADS_ENV} must be an integer, got {env!r}") from e
            else:
                self.threads = os.cpu_count() or 1
        if self.threads < 1:
            raise DomainError(f"thread cap must be >= 1, got {self.threads}")
        if not 0 < self.bode_wmin < self.bode_wmax:
            raise DomainError(f"need 0 < wmin < wmax, got [{self.bode_wmin}, {self.bode_wmax}]")
        if self.bode_points < 2 or self.hinf_grid_points < 2:
            raise DomainError("frequency grids need at least 2 points")
        if self.hinf_tol <= 0 or self.eps_stab <= 0 or self.sim_dt <= 0:
            raise DomainError("tolerances and time steps must be positive")
        if self.stability_margin < 0 or self.sim_t_final <= self.sim_dt:
            raise DomainError("need stability_margin >= 0 and sim_t_final > sim_dt")
        if self.bt_method not in BT_METHODS:
            raise DomainError(f"bt_method must be one of {BT_METHODS}, got {self.bt_method!r}")

    @property
    def stability_tol(self) -> float:
        """Required distance of the spectral abscissa from the imaginary axis"""
        return max(self.eps_stab, self.stability_margin)

    @property
    def hinf_grid(self) -> Tuple[float, float, int]:
        return (self.hinf_grid_min, self.hinf_grid_max, self.hinf_grid_points)

    @property
    def bode_range(self) -> Tuple[float, float, int]:
        return (self.bode_wmin, self.bode_wmax, self.bode_points)

    @classmethod
    def from_file(cls, path) -> "ReductionConfig":
        """
        Read a key=value file

        Lines starting with '#' are comments; keys prefixed with
        'trust_region.' go to the optimizer settings.
        """
        path = Path(path)
        try:
            lines = path.read_text().splitlines()
        except OSError as e:
            raise IoError(f"cannot read config {path}: {e}") from e

        top: Dict[str, Any] = {}
        nested: Dict[str, Any] = {}
        for lineno, raw in enumerate(lines, start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ParseError("expected key=value", line=lineno)
            key, value = (part.strip() for part in line.split('=', 1))
            if key.startswith("trust_region."):
                name = key[len("trust_region."):]
                if name not in TrustRegionConfig.model_fields:
                    raise ParseError("unknown trust-region setting", field=key, line=lineno)
                nested[name] = value
            else:
                top[key] = _coerce(key, value, lineno)

        return cls(trust_region=TrustRegionConfig.build(**nested), **top)

    def with_overrides(self, trust_region: Optional[Dict[str, Any]] = None, **overrides) -> "ReductionConfig":
        """Copy with the non-None overrides applied (command-line flags win)"""
        updates = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(updates) - {f.name for f in fields(self)}
        if unknown:
            raise DomainError(f"unknown settings: {sorted(unknown)}")
        tr_updates = {k: v for k, v in (trust_region or {}).items() if v is not None}
        if tr_updates:
            updates["trust_region"] = TrustRegionConfig.build(
                **{**self.trust_region.model_dump(exclude_none=True), **tr_updates})
        return replace(self, **updates)


_BOOL_WORDS = {"true": True, "yes": True, "1": True, "on": True,
               "false": False, "no": False, "0": False, "off": False}


def _coerce(key: str, value: str, lineno: int) -> Any:
    """Convert a text value to the type of the matching ReductionConfig field"""
    types = {f.name: f.type for f in fields(ReductionConfig) if f.name != "trust_region"}
    if key not in types:
        raise ParseError("unknown setting", field=key, line=lineno)
    kind = str(types[key])
    try:
        if "bool" in kind:
            return _BOOL_WORDS[value.lower()]
        if "int" in kind:
            return int(value)
        if "str" in kind:
            return value
        return float(value)
    except (KeyError, ValueError) as e:
        raise ParseError(f"cannot parse {value!r}", field=key, line=lineno) from e
