"""Exception types shared across the package."""


class PoincareLabError(Exception):
    """Base class for all package errors."""


class InvalidDomainSpec(PoincareLabError):
    """Domain description is malformed or has out-of-range parameters."""


class FeatureTooFine(PoincareLabError):
    """Grid spacing is too coarse to resolve a geometric feature."""


class EmptyDomain(PoincareLabError):
    """No lattice node falls inside the domain."""


class UndefinedAtCorner(PoincareLabError):
    """Boundary curvature queried at a polygon vertex."""


class GridMismatch(PoincareLabError):
    """Fields or stencils built on different grids were combined."""


class SingularPoint(PoincareLabError):
    """Closed-form metric evaluated on its singular locus."""


class InvalidParameters(PoincareLabError):
    """Parameter tuple outside the allowed range."""


class NoAdmissibleScale(PoincareLabError):
    """Scale search ran outside its bracket."""


class CurvatureOverflow(PoincareLabError):
    """Discrete curvature left the representable floating range."""


class NewtonDiverged(PoincareLabError):
    """Damped Newton failed to reduce the residual."""


class MonotonicityViolated(PoincareLabError):
    """Successive blow-up levels failed to increase monotonically."""


class LadderNotConverged(PoincareLabError):
    """Blow-up ladder exhausted its levels without stabilising."""


class WindowSequenceInvalid(PoincareLabError):
    """Exhaustion windows are not an increasing sequence."""


class ProbeTooShort(PoincareLabError):
    """Too few usable sample points along a probe line."""


class FitIllConditioned(PoincareLabError):
    """Least-squares design matrix is numerically rank deficient."""


class Disconnected(PoincareLabError):
    """No path between the requested nodes in the metric graph."""


class NotSimplyConnected(PoincareLabError):
    """Operation requires a domain without holes."""


class CutCrossesNode(PoincareLabError):
    """Branch cut for the conjugate passes through a lattice node."""


class DerivativeDegenerate(PoincareLabError):
    """Discrete derivative of the map vanished on the whole mask."""
