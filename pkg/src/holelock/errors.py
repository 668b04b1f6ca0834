"""Exception types shared across the toolkit."""


class ParameterError(ValueError):
    """Raised when physical or configuration parameters violate an invariant."""


class NumericalError(RuntimeError):
    """Raised when a numerical routine fails to reach its accuracy contract."""
