"""Exception hierarchy."""


class HJRestrictError(Exception):
    """Base class for all errors raised by the package."""


class GeometryError(HJRestrictError):
    pass


class NotOnManifold(GeometryError):
    pass


class RankDeficient(GeometryError):
    pass


class NotTangent(GeometryError):
    pass


class NotNormal(GeometryError):
    pass


class OutsideTube(GeometryError):
    """Point is not strictly inside the tubular neighbourhood, or Newton failed there."""


class NonUniqueProjection(OutsideTube):
    """Two distinct closest points were found at the same distance."""


class SingularMap(GeometryError):
    pass


class ChartDomain(GeometryError):
    pass


class NonFiniteGradient(HJRestrictError):
    pass


class StepRejected(HJRestrictError):
    pass


class CFLViolation(HJRestrictError):
    pass


class NonFinite(HJRestrictError):
    pass


class OutOfGrid(HJRestrictError):
    pass


class HypothesisViolated(HJRestrictError):
    """The invariance hypothesis required by a restriction experiment does not hold."""


class ConfigurationError(HJRestrictError):
    pass
