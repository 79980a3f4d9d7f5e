"""Exception hierarchy shared by every nestlab module."""


class NestLabError(Exception):
    """Base class for all nestlab failures."""


class NonFinite(NestLabError, ValueError):
    pass


class RankDeficient(NestLabError, ValueError):
    pass


class DimensionMismatch(NestLabError, ValueError):
    pass


class NotAProjection(NestLabError, ValueError):
    """Input fails the Hermitian/idempotent check."""


class NotOrthogonal(NestLabError, ValueError):
    pass


class TooFar(NestLabError):
    """A distance that must be strictly below one is not."""


class UniquenessViolated(NestLabError):
    """Two chain elements are both closer than one to a projection.

    Mathematically impossible; seeing it means the tolerances broke down.
    """


class RankMismatch(NestLabError):
    """Paired atoms have different ranks."""


class BadFlag(NestLabError, ValueError):
    pass


class NoSuccessor(NestLabError, IndexError):
    pass


class NotInvertible(NestLabError):
    pass


class NotDistanceOne(NestLabError, ValueError):
    pass


class OutOfRange(NestLabError, ValueError):
    pass


class InvariantViolated(NestLabError):
    """A computed object failed one of its own post-conditions."""
