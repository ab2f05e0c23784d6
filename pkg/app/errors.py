"""
Error types for CPWalk.

Every error a run can end with derives from `SimulationError` and carries
the process exit code the CLI returns for it.
"""

from __future__ import annotations


class SimulationError(Exception):
    """Base class for all engine errors."""

    exit_code = 1


class NegativeRate(SimulationError):
    pass


class EmptyRow(SimulationError):
    pass


class DimensionMismatch(SimulationError):
    pass


class ResourceLimit(SimulationError):
    pass


class TimeOutOfRange(SimulationError):
    pass


class WalkerLeftSafeRegion(SimulationError):
    """The walker queried a site outside the region where the box is exact."""

    def __init__(self, site, radius: int) -> None:
        super().__init__(f"site {tuple(int(v) for v in site)} outside safe radius {radius}")
        self.site = tuple(int(v) for v in site)
        self.radius = radius


class ObserverContractViolation(SimulationError):
    pass


class InconclusiveFit(SimulationError):
    exit_code = 3


class ReplicaAbortBudgetExceeded(SimulationError):
    exit_code = 4

    def __init__(self, aborted: int, replicas: int, budget: float) -> None:
        super().__init__(
            f"{aborted} of {replicas} replicas aborted (budget {budget:.2%})"
        )
        self.aborted = aborted
        self.replicas = replicas
        self.budget = budget


class ConfigError(SimulationError):
    exit_code = 2


class ParseError(ConfigError):
    def __init__(self, message: str, location: str | None = None) -> None:
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class ValidationError(ConfigError):
    def __init__(self, field: str, message: str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


class RhoMismatchWarning(UserWarning):
    """Occupation densities from the full and the empty start disagree."""


class DriftDirectionWarning(UserWarning):
    """The rightmost-particle observer is used with a rightward vacant drift."""
