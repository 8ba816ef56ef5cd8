"""
Exception hierarchy shared by the services, the CLI and the HTTP router.
"""
from typing import Any, List, Optional, Sequence, Tuple


class ToolkitError(Exception):
    """Base class for every failure the toolkit reports to a caller."""


class DomainError(ToolkitError, ValueError):
    """An input violates a physical or mathematical precondition."""


class NoSolutionError(DomainError):
    """A bracketed root search found no sign change."""

    def __init__(self, message: str, bracket: Tuple[float, float], residuals: Tuple[float, float]):
        super().__init__(
            f"{message}: no solution in bracket ({bracket[0]:g}, {bracket[1]:g}) um, "
            f"residuals {residuals[0]:.6g} / {residuals[1]:.6g}"
        )
        self.bracket = bracket
        self.residuals = residuals


class CalibrationError(ToolkitError):
    """Sideband calibration could not be performed."""


class FitError(ToolkitError):
    """A least-squares fit failed or did not converge."""

    def __init__(self, message: str, residual: Optional[float] = None):
        if residual is not None:
            message = f"{message} (last rms residual {residual:.6g})"
        super().__init__(message)
        self.residual = residual


class AmbiguityError(ToolkitError):
    """A mode ladder admits no consistent assignment."""

    def __init__(self, message: str, candidates: Sequence[Any] = ()):
        self.candidates: List[Any] = list(candidates)
        if self.candidates:
            listed = "; ".join(str(candidate) for candidate in self.candidates)
            message = f"{message}; candidates: {listed}"
        super().__init__(message)


class InputFormatError(ToolkitError):
    """An input file is empty or lacks required columns."""
