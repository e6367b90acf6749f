"""Exception hierarchy shared by the numeric and combinatorial layers."""


class ShiftLocusError(Exception):
    """Base class for all errors raised by this package."""


# numeric side


class RootFindingFailure(ShiftLocusError):
    pass


class UnreliableCoordinate(ShiftLocusError):
    """The point is not above every critical height, so theta is not canonical."""


class CriticalHit(ShiftLocusError):
    """A descending flowline ran into a critical point of the Green's function.

    The partial polyline (ending near the critical point) is kept on ``path``.
    """

    def __init__(self, message, path=None, point=None):
        super().__init__(message)
        self.path = path
        self.point = point


class StepCollapse(ShiftLocusError):
    pass


class AngleResolutionFailure(ShiftLocusError):
    pass


class NotInShiftLocus(ShiftLocusError):
    pass


# combinatorial side


class NonGeneric(ShiftLocusError):
    """Configuration outside the generic regime the construction is defined on."""


class SharedAngle(NonGeneric):
    pass


class HeightCollision(NonGeneric):
    pass


class NoValidMatching(NonGeneric):
    pass


class MultipleValidMatchings(NonGeneric):
    pass


class OutOfBand(ShiftLocusError):
    pass


class TruncationTooShallow(ShiftLocusError):
    pass


class IndexOutOfRange(ShiftLocusError):
    pass


class DegenerateCube(ShiftLocusError):
    pass


class NonPowerOfTwoLength(ShiftLocusError):
    """An l-value that is not a power of two; indicates a construction bug."""


class SnapFailure(ShiftLocusError):
    pass


class InvariantBreach(ShiftLocusError):
    """An internal consistency check failed."""
