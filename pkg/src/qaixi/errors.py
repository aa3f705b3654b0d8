"""Exception types shared across the package.

Argument errors (bad dimensions, unknown labels, invalid subsystem indices)
are plain ``ValueError``.
"""


class ConfigError(ValueError):
    """Experiment configuration or environment file cannot be used."""


class CapacityError(RuntimeError):
    """A requested computation exceeds a declared size bound."""


class ImpossibleObservationError(RuntimeError):
    """Every hypothesis in the mixture assigns (numerically) zero probability
    to an observed outcome, so the model class is misspecified."""
