"""Exception hierarchy shared by every module of the package."""


class GhzAnonError(Exception):
    """Base class for all errors raised by this package."""


class BehaviorError(GhzAnonError, ValueError):
    pass


class LengthMismatch(BehaviorError):
    pass


class NegativeEntry(BehaviorError):
    def __init__(self, index, value):
        super().__init__(f"negative probability {value} at table index {index}")
        self.index = index
        self.value = value


class NotNormalized(BehaviorError):
    def __init__(self, inputs, total):
        super().__init__(f"row for inputs {inputs} sums to {total}, expected 1")
        self.inputs = inputs
        self.total = total


class CapacityExceeded(BehaviorError):
    pass


class SignalingBehavior(BehaviorError):
    pass


class EmptySubset(BehaviorError):
    pass


class OverlappingSubsets(BehaviorError):
    pass


class IncompleteCover(BehaviorError):
    pass


class SizeMismatch(BehaviorError):
    pass


class WeightSumNotOne(BehaviorError):
    pass


class KOutOfRange(GhzAnonError, ValueError):
    pass


class InvalidBipartition(GhzAnonError, ValueError):
    pass


class GroupTooLarge(GhzAnonError, ValueError):
    pass


class DimensionMismatch(GhzAnonError, ValueError):
    pass


class TooFewParties(GhzAnonError, ValueError):
    pass


class InvalidMask(GhzAnonError, ValueError):
    pass


class ParseError(GhzAnonError, ValueError):
    pass


class NotAPartition(GhzAnonError, ValueError):
    pass
