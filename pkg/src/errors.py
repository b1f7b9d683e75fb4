"""
exception hierarchy shared by every module.

each class also derives from the closest builtin so callers that only know about
ValueError / ArithmeticError / RuntimeError keep working.
"""


class BuffdynError(Exception):
    """
    base class for every error raised by the library
    """


# germ
class DomainExceededError(BuffdynError, ValueError):
    pass


class NonFiniteError(BuffdynError, ArithmeticError):
    pass


class OrbitEscapedError(BuffdynError, ValueError):
    pass


class NoConvergenceError(BuffdynError, ArithmeticError):
    pass


class CriticalPointError(BuffdynError, ArithmeticError):
    pass


class QuadratureError(BuffdynError, ArithmeticError):
    pass


# fixpoint
class RootFinderError(BuffdynError, RuntimeError):
    pass


class BoundaryRootError(BuffdynError, ValueError):
    pass


class ContourConflictError(BuffdynError, ValueError):
    pass


class BranchCutError(BuffdynError, ValueError):
    pass


class UnitMultiplierError(BuffdynError, ValueError):
    pass


class InsufficientDataError(BuffdynError, ValueError):
    pass


class WrongCountError(BuffdynError, ValueError):
    pass


class DegenerateMultiplierError(BuffdynError, ValueError):
    pass


# buffform / rectify
class PoleProximityError(BuffdynError, ValueError):
    def __init__(self, message: str, pole: complex = None):
        super().__init__(message)
        self.pole = pole


class SegmentNearPoleError(PoleProximityError):
    pass


class PositivityError(BuffdynError, ValueError):
    pass


class PreconditionError(BuffdynError, ValueError):
    pass


class StepConsistencyError(BuffdynError, ArithmeticError):
    """
    a lifted invariant curve fails F^-1(Gamma(t)) = Gamma(t - 1) by more than the tolerance
    """

    def __init__(self, message: str, mismatch: float):
        super().__init__(message)
        self.mismatch = mismatch


# flow
class ResidueNotImaginaryError(BuffdynError, ValueError):
    pass


class NoClosedOrbitError(BuffdynError, RuntimeError):
    pass


# rays
class NonEscapingError(BuffdynError, ArithmeticError):
    pass


class InvalidAngleError(BuffdynError, ValueError):
    pass


class PotentialFloorError(BuffdynError, RuntimeError):
    pass


class EmptyRayError(BuffdynError, ValueError):
    pass


class GridMismatchError(BuffdynError, ValueError):
    pass


class RayLandsInsideError(BuffdynError, ValueError):
    pass


# cli
class ConfigParseError(BuffdynError, ValueError):
    pass


class ExperimentError(BuffdynError, RuntimeError):
    """
    wraps any error propagated out of an experiment with the stage it happened in
    """

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
