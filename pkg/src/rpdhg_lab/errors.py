"""Exception hierarchy shared by every module of the package."""


class LpError(Exception):
    """Base class for all package errors."""


class InvalidInstance(LpError):
    pass


class DimensionMismatch(InvalidInstance):
    pass


class NonFiniteData(InvalidInstance):
    pass


class RankDeficient(InvalidInstance):
    pass


class NumericalError(LpError):
    """A numerical routine failed or produced an unusable result."""


class FactorizationFailure(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class BisectionFailure(NumericalError):
    pass


class SingularBasis(NumericalError):
    pass


class InvalidStepSizes(LpError):
    pass


class DegenerateCertificate(LpError):
    pass


class ZeroObjectiveProjection(LpError):
    pass


class NonPositiveWeights(LpError):
    pass


class IterationLimit(LpError):
    pass


class TooLarge(LpError):
    pass


class Infeasible(LpError):
    pass


class Unbounded(LpError):
    pass


class MultipleOptima(LpError):
    """Raised when more than one basis is optimal; ``result`` holds all of them."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NeverStabilized(LpError):
    def __init__(self, message, split=None):
        super().__init__(message)
        self.split = split


class InsufficientData(LpError):
    pass


class UnsupportedFormat(LpError):
    pass
