"""Exception types shared by all ablab modules."""


class ABLabError(Exception):
    """Base class for every error raised by ablab."""


class InvalidSpecError(ABLabError, ValueError):
    """A domain object was constructed with parameters violating its invariants.

    Parameters
    ----------
    field : str
        Name of the offending field (dotted for nested config entries).
    message : str
        Human-readable explanation.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class SingularityError(ABLabError, ValueError):
    """Evaluation at a point where the field is singular."""


class UnsupportedGeometryError(ABLabError, ValueError):
    """The requested operation has no implementation for this source kind."""


class GeometryError(ABLabError, ValueError):
    """A path, trajectory or evaluation point violates a geometric precondition."""


class ConvergenceError(ABLabError, RuntimeError):
    """Adaptive quadrature (or an iterative solve) failed to reach tolerance.

    The best available estimate is kept on the exception so callers can still
    inspect it.
    """

    def __init__(self, message, estimate=None, error=None):
        self.estimate = estimate
        self.error = error
        super().__init__(message)


class StabilityError(ABLabError, RuntimeError):
    """Time stepping parameters are unstable or the norm blew up."""


class ShapeError(ABLabError, ValueError):
    """Array shapes are inconsistent."""


class NoFringeError(ABLabError, ValueError):
    """An interference profile has no dominant oscillatory harmonic."""
