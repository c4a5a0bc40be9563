"""Exception hierarchy shared by every starris module."""


class StarRisError(Exception):
    """Base class for all errors raised by starris."""


class InvalidParameter(StarRisError, ValueError):
    """A scalar argument is outside its admissible range."""


class SingularPoint(StarRisError, ValueError):
    """Field and source points coincide (or volumes overlap)."""


class DegenerateFrame(StarRisError, ValueError):
    """A local frame or an angle cannot be built from coincident points."""


class ParaxialDomainViolation(StarRisError, ValueError):
    """The paraxial kernel was requested too close to the receiver."""


class ConvergenceFailure(StarRisError, RuntimeError):
    """An iterative eigen-solver hit its iteration cap."""


class DegenerateRegion(StarRisError, ValueError):
    """The reactive boundary is not inside the radiating boundary."""


class InvalidGrouping(StarRisError, ValueError):
    """An element grouping is not a partition of the layout."""


class RegimeMismatch(StarRisError, ValueError):
    """A user is on the wrong side of the field boundary for a formula."""


class SingularAngle(StarRisError, ValueError):
    """The shadow-edge diffraction law diverges at zero angle."""
