from typing import Optional


class DimerError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 1


class UsageError(DimerError):
    exit_code = 2


class DomainError(DimerError):
    """An operation was called outside the range where it is defined."""

    exit_code = 2


class ResourceLimitError(DimerError):
    exit_code = 3


class OracleBudgetExceeded(ResourceLimitError):
    """The brute-force counter ran out of steps or wall-clock time."""

    def __init__(self, message: str, steps: int, elapsed: float):
        super().__init__(message)
        self.steps = steps
        self.elapsed = elapsed


class PrecisionInsufficientError(ResourceLimitError):
    def __init__(self, message: str, precision_bits: int):
        super().__init__(message)
        self.precision_bits = precision_bits


class ConvergenceError(ResourceLimitError):
    pass


class ConsistencyError(DimerError):
    """Two independent computations of the same quantity disagree."""

    exit_code = 1


class CoefficientDiscrepancyError(ConsistencyError):
    def __init__(self, coordinate: str, structural: int, expanded: int, stage: Optional[int] = None):
        where = f" at stage {stage}" if stage is not None else ""
        super().__init__(
            f"Structural and expanded forms disagree for {coordinate}'{where}: "
            f"structural={structural} expanded={expanded}"
        )
        self.coordinate = coordinate
        self.structural = structural
        self.expanded = expanded
        self.stage = stage
