"""
Custom exceptions for the connection router.
"""


class RouterError(Exception):
    """Base class for all application errors."""
    pass


class ConfigurationError(RouterError):
    """Raised when configuration is invalid or missing."""
    pass


class WorkloadError(ConfigurationError):
    """Raised when a workload configuration violates its parameter ranges."""
    pass


class TraceFormatError(RouterError):
    """Raised when a trace or mapping file cannot be interpreted."""
    pass


class GenomeError(RouterError):
    """Raised when a policy genome is malformed."""
    pass


class SimulationError(RouterError):
    """Raised when the simulator detects a broken internal invariant."""
    pass


class ObjectiveError(RouterError):
    """Raised when objectives are requested on empty input."""
    pass


class TrainingError(RouterError):
    """Raised when a training run cannot be set up."""
    pass
