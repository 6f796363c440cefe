"""Exception types shared across the toolkit."""


class Rank2GeoError(Exception):
    """Base class for all toolkit errors."""


class PointTooCloseToBoundary(Rank2GeoError):
    pass


class OrderUnsupported(Rank2GeoError):
    pass


class NotImmersed(Rank2GeoError):
    pass


class DegenerateShape(Rank2GeoError):
    pass


class FlagDimensionAnomaly(Rank2GeoError):
    pass


class NotSpherical(Rank2GeoError):
    pass


class SpecInvariantViolated(Rank2GeoError):
    def __init__(self, which, where, detail=""):
        self.which = which
        self.where = where
        super().__init__(f"curve-data invariant ({which}) violated at s={where}: {detail}")


class ZeroCurvature(Rank2GeoError):
    pass


class InsufficientSmoothness(Rank2GeoError):
    pass


class NotRuled(Rank2GeoError):
    pass


class UnboundedA1(Rank2GeoError):
    pass


class SolutionsResidualTooLarge(Rank2GeoError):
    pass


class PhiNotInSigma(Rank2GeoError):
    pass


class PhiNotInKernel(Rank2GeoError):
    pass


class NotClosed(Rank2GeoError):
    pass


class NoMarchingDirection(Rank2GeoError):
    pass


class StabilityViolation(Rank2GeoError):
    pass


class AUDegenerate(Rank2GeoError):
    pass


class NotInvertible(Rank2GeoError):
    pass


class Xi2Vanishes(Rank2GeoError):
    pass


class SingularSampleMajority(Rank2GeoError):
    pass


class SBoundViolated(Rank2GeoError):
    pass


class FrameDegenerate(Rank2GeoError):
    pass


class FitResidualTooLarge(Rank2GeoError):
    pass


class ScenarioError(Rank2GeoError):
    """Raised for malformed or incomplete scenario input."""
