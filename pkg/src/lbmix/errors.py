"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A simulation configuration failed to parse or validate."""


class SolverError(RuntimeError):
    """A solver step failed (non-convergence, lost positivity, bad state)."""
