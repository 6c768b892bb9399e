"""
Error Hierarchy
Exceptions raised by the numerical kernels, the model files and the CLI
"""

from typing import Optional


class ReductionError(Exception):
    """Base class for every h2reduce failure"""

    exit_code = 1


class ValidationError(ReductionError):
    """Bad input: wrong shapes, wrong ranges, malformed files"""

    exit_code = 2


class NumericalError(ReductionError):
    """A numerical precondition failed (stability, definiteness, ...)"""

    exit_code = 3


class DimensionMismatch(ValidationError):
    """Matrix shapes are inconsistent"""


class DomainError(ValidationError):
    """An argument is outside its admissible range"""


class ManifoldViolation(ValidationError):
    """A point or tangent vector does not satisfy the skew/SPD structure"""


class IoError(ValidationError):
    """A file could not be read or written"""


class ParseError(ValidationError):
    """A system file is malformed"""

    def __init__(self, message: str, field: Optional[str] = None,
                 line: Optional[int] = None):
        self.field = field
        self.line = line
        context = []
        if field is not None:
            context.append(f"field '{field}'")
        if line is not None:
            context.append(f"line {line}")
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)


class NotStable(NumericalError):
    """A matrix required to be Hurwitz has an eigenvalue with Re >= -eps"""


class SingularPencil(NumericalError):
    """Sylvester equation with overlapping spectra of A and -B"""


class NotPositiveDefinite(NumericalError):
    """Cholesky or SPD square root failed"""


class SingularResolvent(NumericalError):
    """(i*omega*I - A) could not be solved"""


class DegenerateTruncation(NumericalError):
    """sigma_r and sigma_{r+1} coincide, truncation is not unique"""
