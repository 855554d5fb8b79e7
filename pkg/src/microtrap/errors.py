"""Exception hierarchy shared by every module."""


class MicrotrapError(Exception):
    """Base class for all package errors."""


class NonConvergence(MicrotrapError, ArithmeticError):
    """A series or continued fraction hit its term cap."""


class PoleAtC(MicrotrapError, ArithmeticError):
    """Second Kummer parameter sits on a non-positive integer."""


class DivergentAtZero(MicrotrapError, ArithmeticError):
    """Tricomi U is infinite at z = 0 for the requested parameters."""


class IntegerC(MicrotrapError, ArithmeticError):
    """The c-derivative series needs a non-integer second parameter."""


class DivergentIntegral(MicrotrapError, ArithmeticError):
    """Upper incomplete gamma with a <= 0 at z = 0."""


class PoleAtNonPositiveInteger(MicrotrapError, ArithmeticError):
    """Digamma evaluated at one of its poles."""


class InvalidInitialCapital(MicrotrapError, ValueError):
    """Initial capital below the scheme's critical capital."""


class SingularMatching(MicrotrapError, ArithmeticError):
    """The barrier matching system is numerically singular."""


class BracketFailure(MicrotrapError, ArithmeticError):
    """Root bracket endpoints could not be evaluated."""


class MonotonicityViolation(MicrotrapError, ArithmeticError):
    """Objective is not monotone across the bracket."""
