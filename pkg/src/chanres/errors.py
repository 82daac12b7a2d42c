"""Exception hierarchy shared by all chanres modules."""


class ChanresError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(ChanresError, ValueError):
    pass


class ShapeMismatch(DimensionMismatch):
    pass


class CompletenessViolation(ChanresError, ValueError):
    """Kraus operators do not sum to the identity."""


class InvalidState(ChanresError, ValueError):
    pass


class DimensionGuardExceeded(ChanresError, ValueError):
    """A tensor power or SDP would exceed the configured size limit."""


class NumericalFailure(ChanresError, ArithmeticError):
    pass


class SolverFailure(ChanresError, RuntimeError):
    """The conic solver broke down (as opposed to certifying infeasibility)."""


class UnsupportedDims(ChanresError, ValueError):
    pass


class UnsupportedTheory(ChanresError, ValueError):
    pass


class EpsilonOutOfRange(ChanresError, ValueError):
    pass


class MissingTarget(ChanresError, KeyError):
    pass
