"""Exception hierarchy shared by all modules."""


class NewtonMeasureError(Exception):
    """Base class for every error raised by the package."""


class DegenerateProblem(NewtonMeasureError, ValueError):
    pass


class ConfigError(NewtonMeasureError, ValueError):
    pass


class OverflowRegion(NewtonMeasureError, ArithmeticError):
    """Requested value needs exp of an argument beyond the double range."""


class ToleranceNotMet(NewtonMeasureError, ArithmeticError):
    pass


class PoleHit(NewtonMeasureError, ArithmeticError):
    pass


class NotInG(NewtonMeasureError, ValueError):
    """Point lies in the closed disk of radius R or on the cut [0, inf)."""


class SeedEscape(NewtonMeasureError, ArithmeticError):
    pass


class NonConvergence(NewtonMeasureError, ArithmeticError):
    pass


class BakerDomainLikely(NonConvergence):
    """Sector constant does not settle: its limit is zero or absent."""


class RegionViolation(NewtonMeasureError, ValueError):
    pass


class AnchorTooLow(NewtonMeasureError, ValueError):
    pass


class MaxIterations(NewtonMeasureError, ArithmeticError):
    pass


class DivergedFromSeed(NewtonMeasureError, ArithmeticError):
    pass


class BelowThreshold(NewtonMeasureError, ValueError):
    pass


class ContainmentViolated(NewtonMeasureError, ArithmeticError):
    pass


class NoConvergence(NewtonMeasureError, ArithmeticError):
    pass


class NumericLoss(NewtonMeasureError, ArithmeticError):
    pass
