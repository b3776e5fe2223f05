"""Exception types raised by the curve constructions."""


class CurveError(Exception):
    """Base class for all errors raised by this package."""


class SearchFailure(CurveError):
    """A shooting, bracketing or event search did not produce a result."""


class NoBracket(SearchFailure):
    pass


class MaxIterExceeded(SearchFailure):
    pass


class EventNotFound(SearchFailure):
    pass


class ClosureNotReached(SearchFailure):
    pass


class NonFiniteDerivative(CurveError):
    pass


class ParallelPlanes(CurveError):
    pass


class ParallelLines(CurveError):
    pass


class NearIdentity(CurveError):
    pass


class RegimeViolation(CurveError, ValueError):
    pass


class BadInitialAngle(CurveError, ValueError):
    pass


class ImaginaryRate(CurveError, ValueError):
    pass


class CurvatureTooSmall(CurveError, ValueError):
    pass


class OffSurface(CurveError, ValueError):
    pass


class NotTangent(CurveError, ValueError):
    pass


class NotSkewSymmetric(CurveError, ValueError):
    pass


class NotSymmetric(CurveError, ValueError):
    pass


class DegenerateSamples(UserWarning):
    """Three consecutive samples are collinear; curvature there is reported as 0."""
