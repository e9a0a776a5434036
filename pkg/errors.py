"""Exceptions raised across the toolkit."""


class WindingsError(Exception):
    """Base class for all toolkit errors."""

    pass


class DomainError(WindingsError, ValueError):
    """Raised when an argument lies outside the domain of a formula or sampler."""

    pass


class QuadratureError(WindingsError):
    """Raised when a quadrature does not reach its tolerance."""

    pass


class BudgetExhaustedError(WindingsError):
    """Raised when a path simulation runs out of steps before its stopping event."""

    def __init__(self, message: str, budget: int):
        super().__init__(message)
        self.budget = budget


class SegmentThroughOriginError(WindingsError):
    """Raised when a straight segment between two path points passes through 0."""

    pass


class OriginProximityError(WindingsError):
    """Raised when a planar path comes within the origin tolerance of 0."""

    pass


class NonIntegerOrderError(DomainError):
    """Raised when a sampler needs an integer order m = pi/(2c)."""

    pass


class DegenerateWeightsError(WindingsError):
    """Raised when every importance weight is zero."""

    pass


class UnknownExperimentError(WindingsError, KeyError):
    """Raised when an experiment name is not in the registry."""

    pass


class ConfigError(WindingsError):
    """Raised when a configuration file or flag is invalid."""

    pass


class StoreError(WindingsError):
    """Raised when the results database cannot be read or written."""

    pass


class RunNotFoundError(StoreError):
    """Raised when a run is not found in the results database."""

    pass
