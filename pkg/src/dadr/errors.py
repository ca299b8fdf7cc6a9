"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: shape/dimension mismatches, bad option values."""


class NonFiniteError(RuntimeError):
    """NaN or Inf encountered where finite values are required."""


class TrainingDiverged(RuntimeError):
    """Training produced a non-finite loss and was aborted."""
