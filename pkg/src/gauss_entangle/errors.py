"""Exception hierarchy for gauss_entangle."""


class GaussEntangleError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameter(GaussEntangleError, ValueError):
    """A physical parameter is out of its admissible range."""


class InvalidEnvironment(GaussEntangleError, ValueError):
    """Environment coefficients violate complete positivity (strict mode)."""


class DegenerateCovariance(GaussEntangleError, ValueError):
    """A covariance matrix is numerically inconsistent (negative discriminant)."""


class NoAsymptoticState(GaussEntangleError, ValueError):
    """The drift matrix is not Hurwitz, so no stationary state exists."""


class PreconditionViolation(GaussEntangleError, ValueError):
    """A closed-form formula was requested outside its domain of validity."""


class EventRefinementFailure(GaussEntangleError, RuntimeError):
    """Bisection on a sign change did not converge."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket
