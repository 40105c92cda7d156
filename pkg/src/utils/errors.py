class ConfigError(ValueError):
    """Bad user input: unknown keys, violated constraints, unreadable files."""


class NumericalError(RuntimeError):
    """A numerical routine could not deliver a trustworthy value."""


class ConvergenceError(NumericalError):
    def __init__(self, message: str, estimate: complex | float, error_bound: float):
        super().__init__(f"{message} (best estimate {estimate!r}, error bound {error_bound:.3g})")
        self.estimate = estimate
        self.error_bound = error_bound


class ConsistencyError(NumericalError):
    """Computed quantities violate an identity they must satisfy."""
