"""Exception hierarchy shared across the package.

Validation-type errors (bad parameters, bad config) map to CLI exit code 2,
runtime/numeric errors to exit code 3.
"""


class DuogameError(Exception):
    pass


class ParameterError(DuogameError, ValueError):
    """A function argument or model parameter is out of its admissible range."""


class ConfigError(DuogameError, ValueError):
    """Configuration file is malformed, has unknown keys, or violates ranges."""


class StateError(DuogameError):
    """Simulation state is inadmissible (NaN, negative stock, non-positive price)."""


class ReplicationError(DuogameError):
    """A replication blew up numerically. Carries the simulated day and seed."""

    def __init__(self, message, day=None, seed=None):
        super().__init__(message)
        self.day = day
        self.seed = seed


class IncompleteGameError(DuogameError):
    """A payoff query or solve needs profiles that were never simulated."""

    def __init__(self, message, missing=()):
        super().__init__(message)
        self.missing = list(missing)


class InsufficientDataError(DuogameError):
    """Not enough samples for the requested statistic."""


class DesignError(DuogameError):
    """Experimental design is unusable (missing cells, over budget)."""
