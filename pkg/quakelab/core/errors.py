"""Exception hierarchy shared by services and the command line."""

from typing import Optional, Sequence


class QuakelabError(Exception):
    """Base class for every error raised by quakelab."""

    exit_code = 4


class ValidationError(QuakelabError, ValueError):
    exit_code = 2


class DegenerateConfigurationError(ValidationError):
    pass


class NonHyperbolicError(ValidationError):
    exit_code = 1


class UnsupportedFastPathError(ValidationError):
    pass


class UnsupportedTopologyError(ValidationError):
    pass


class ConstructionError(QuakelabError):
    exit_code = 1

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class BudgetExhaustedError(QuakelabError):
    exit_code = 3

    def __init__(self, message: str, last_counts: Sequence[int] = ()):
        counts = tuple(last_counts)
        super().__init__(f"budget exhausted: {message} (last counts {counts})")
        self.last_counts = counts


class SolverError(QuakelabError):
    exit_code = 4


class ConditioningError(SolverError):
    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition={condition:.3e})")
        self.condition = condition


class EscapingMinimumError(SolverError):
    pass


class NotLeftEarthquakeImageError(SolverError):
    def __init__(self, message: str, weights: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.weights = tuple(weights) if weights is not None else ()


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, QuakelabError):
        return exc.exit_code
    if isinstance(exc, ValueError):
        return 2
    return 4
