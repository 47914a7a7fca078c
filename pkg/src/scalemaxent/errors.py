"""Exception hierarchy shared by all modules."""


class ScaleMaxentError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ScaleMaxentError, ValueError):
    """An argument lies outside the domain of a scale or reduction."""


class NotNormalizableError(ScaleMaxentError):
    """The unnormalized density does not have a finite integral."""


class QuadratureError(ScaleMaxentError):
    """Adaptive quadrature failed to reach the requested accuracy."""


class UnattainableTargetError(ScaleMaxentError):
    """No multiplier in the feasible range reproduces the constraint target."""


class ParameterRangeError(ScaleMaxentError, ValueError):
    """Family parameters fall outside their admissible range."""


class NonMonotoneError(ScaleMaxentError):
    """A cumulative function failed the sampled monotonicity check."""

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class DegenerateError(ScaleMaxentError):
    """The variance function is degenerate for the requested operation."""


class NotCanonicalError(ScaleMaxentError):
    """A variance function is not in one of the canonical positions."""

    def __init__(self, message, hint=""):
        super().__init__(message if not hint else f"{message}; {hint}")
        self.message = message
        self.hint = hint


class RangeError(ScaleMaxentError, ValueError):
    """A mean or natural parameter lies outside the family's range."""


class SupportError(ScaleMaxentError, ValueError):
    """A point lies outside the support of a distribution."""


class SpecParseError(ScaleMaxentError, ValueError):
    """A serialized scale specification could not be parsed."""
