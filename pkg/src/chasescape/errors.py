"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument violates a documented precondition."""


class UnsupportedTopologyError(ParameterError):
    """The requested estimator is undefined for the box topology."""


class AbsorbedError(RuntimeError):
    """step() was called on a state with total rate zero."""
