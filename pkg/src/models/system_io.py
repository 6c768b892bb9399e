"""
System Files
JSON records for full systems {"n","m","p","A","B","C"} and reduced models
{"J","R","B","C"}, plus MATLAB .mat ingestion for external benchmarks
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Union
import json
import logging

import numpy as np
from dataclasses_json import dataclass_json
from scipy import io as sio
from scipy import sparse

from ..core.errors import IoError, ParseError
from ..optimization.manifold import ManifoldPoint
from ..systems.lti import StateSpace
from ..systems.structured_form import point_to_state_space

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
Rows = List[List[float]]


@dataclass_json
@dataclass
class SystemRecord:
    n: int
    m: int
    p: int
    A: Rows
    B: Rows
    C: Rows

    @classmethod
    def of(cls, sys: StateSpace) -> "SystemRecord":
        return cls(n=sys.n, m=sys.m, p=sys.p, A=sys.A.tolist(), B=sys.B.tolist(), C=sys.C.tolist())

    def to_state_space(self) -> StateSpace:
        A = _matrix(self.A, "A", (self.n, self.n))
        B = _matrix(self.B, "B", (self.n, self.m))
        C = _matrix(self.C, "C", (self.p, self.n))
        return StateSpace(A, B, C)


@dataclass_json
@dataclass
class ReducedRecord:
    J: Rows
    R: Rows
    B: Rows
    C: Rows

    @classmethod
    def of(cls, point: ManifoldPoint) -> "ReducedRecord":
        return cls(J=point.J.tolist(), R=point.R.tolist(), B=point.B.tolist(), C=point.C.tolist())

    def to_point(self) -> ManifoldPoint:
        J = _matrix(self.J, "J")
        r = J.shape[0]
        R = _matrix(self.R, "R", (r, r))
        B = _matrix(self.B, "B")
        C = _matrix(self.C, "C")
        if B.shape[0] != r:
            raise ParseError(f"B must have {r} rows, got {B.shape[0]}", field="B")
        if C.shape[1] != r:
            raise ParseError(f"C must have {r} columns, got {C.shape[1]}", field="C")
        return ManifoldPoint(J=J, R=R, B=B, C=C).validate()


def _matrix(rows: Any, name: str, shape=None) -> np.ndarray:
    """Row-major nested list to a 2-D float array, with field context on failure"""
    try:
        M = np.array(rows, dtype=float)
    except (TypeError, ValueError) as e:
        raise ParseError(f"matrix is not a rectangular numeric array: {e}", field=name) from e
    if M.ndim == 1 and M.size:
        M = M.reshape(1, -1)
    if M.ndim != 2:
        raise ParseError(f"expected a 2-D array, got {M.ndim} dimensions", field=name)
    if shape is not None and M.shape != tuple(shape):
        raise ParseError(f"expected shape {tuple(shape)}, got {M.shape}", field=name)
    if not np.all(np.isfinite(M)):
        raise ParseError("non-finite entries", field=name)
    return M


def _read_json(path: Path) -> Dict[str, Any]:
    try:
        text = path.read_text()
    except OSError as e:
        raise IoError(f"cannot read {path}: {e}") from e
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON in {path}: {e.msg}", line=e.lineno) from e
    if not isinstance(obj, dict):
        raise ParseError(f"{path} must contain a JSON object")
    return obj


def _require(obj: Dict[str, Any], keys, path: Path) -> None:
    for key in keys:
        if key not in obj:
            raise ParseError(f"missing key in {path}", field=key)


def _check_dimension(obj: Dict[str, Any], key: str) -> None:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ParseError(f"dimension must be a positive integer, got {value!r}", field=key)


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def _load_mat(path: Path) -> StateSpace:
    try:
        contents = sio.loadmat(str(path))
    except (OSError, ValueError) as e:
        raise IoError(f"cannot read {path}: {e}") from e
    _require(contents, ("A", "B", "C"), path)
    mats = []
    for name in ("A", "B", "C"):
        M = contents[name]
        if sparse.issparse(M):
            M = M.toarray()
        mats.append(_matrix(np.asarray(M, dtype=float), name))
    A, B, C = mats
    n = A.shape[0]
    _matrix(A, "A", (n, n))
    if B.shape[0] != n:
        raise ParseError(f"B must have {n} rows, got {B.shape[0]}", field="B")
    if C.shape[1] != n:
        raise ParseError(f"C must have {n} columns, got {C.shape[1]}", field="C")
    return StateSpace(A, B, C)


def load_system(path: PathLike) -> StateSpace:
    """Read a full system from .json (or .mat with variables A, B, C)"""
    path = Path(path)
    if path.suffix.lower() == ".mat":
        sys = _load_mat(path)
    else:
        obj = _read_json(path)
        _require(obj, ("n", "m", "p", "A", "B", "C"), path)
        for key in ("n", "m", "p"):
            _check_dimension(obj, key)
        sys = SystemRecord.from_dict(obj).to_state_space()
    logger.info(f"Loaded system from {path}: n={sys.n}, m={sys.m}, p={sys.p}")
    return sys


def save_system(sys: StateSpace, path: PathLike) -> Path:
    path = Path(path)
    if path.suffix.lower() == ".mat":
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            sio.savemat(str(path), {"A": sys.A, "B": sys.B, "C": sys.C})
        except OSError as e:
            raise IoError(f"cannot write {path}: {e}") from e
    else:
        _write_text(path, SystemRecord.of(sys).to_json(indent=1))
    return path


def load_reduced(path: PathLike) -> ManifoldPoint:
    """Read a reduced model {"J","R","B","C"}; the point is validated"""
    path = Path(path)
    obj = _read_json(path)
    _require(obj, ("J", "R", "B", "C"), path)
    return ReducedRecord.from_dict(obj).to_point()


def save_point(point: ManifoldPoint, path: PathLike) -> Path:
    path = Path(path)
    _write_text(path, ReducedRecord.of(point).to_json(indent=1))
    return path


def is_reduced_file(path: PathLike) -> bool:
    """True when a JSON file holds the {"J","R","B","C"} schema"""
    path = Path(path)
    if path.suffix.lower() == ".mat":
        return False
    obj = _read_json(path)
    return "J" in obj and "R" in obj


def load_any(path: PathLike) -> StateSpace:
    """Full system or reduced model file, as a state-space realization"""
    if is_reduced_file(path):
        return point_to_state_space(load_reduced(path))
    return load_system(path)
