"""
Exception hierarchy for the spectrum sharing simulator.
"""


class SimulationError(RuntimeError):
    """Base class for every error raised by the simulator."""


class ConfigError(SimulationError, ValueError):
    """Invalid or infeasible configuration."""


class UsageError(SimulationError, ValueError):
    """An operation was called outside its preconditions."""


class DomainError(SimulationError, ValueError):
    """A numerical routine was evaluated outside its domain."""


class OracleTooLargeError(SimulationError):
    """Exhaustive enumeration refused because the instance is too large."""
