"""Exception types shared across the package."""


class CylscatError(Exception):
    """Base class for package errors."""


class ConfigError(CylscatError):
    """Invalid configuration; carries the offending key path."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"[{path}] {message}")


class ThresholdProximityError(CylscatError):
    """Energy too close to a transverse threshold."""


class GridMismatchError(CylscatError):
    """Operands live on incompatible grids."""


class EllipticityError(CylscatError):
    """I + A_eff failed positive definiteness at some node."""


class MatchRadiusError(CylscatError):
    """Coupling has not decayed below tolerance at the matching radius."""


class HorizonError(CylscatError):
    """Time horizon too short: integrand tail mass above tolerance."""


class NonConvergedError(CylscatError):
    """An iterative certificate (Cauchy sequence, eigensolve) failed."""


class PrerequisiteError(CylscatError):
    """A pipeline stage was requested before its inputs exist."""
