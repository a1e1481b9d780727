"""Exception hierarchy shared by all modules."""


class KFSDError(ValueError):
    """Base class for every error raised by this package."""


class DimensionMismatch(KFSDError):
    pass


class NonFiniteValue(KFSDError):
    """A curve contains NaN/inf or a missing cell.

    ``row`` is the zero-based index of the offending curve.
    """

    def __init__(self, row, message=None):
        self.row = row
        super().__init__(message or f"row {row} contains a missing or non-finite value")


class InvalidGrid(KFSDError):
    pass


class DegenerateSample(KFSDError):
    pass


class NumericalBreakdown(KFSDError):
    pass


class NonPositiveSigma(KFSDError):
    pass


class NonPositiveBandwidth(KFSDError):
    pass


class NonSymmetricCovariance(KFSDError):
    pass


class EmptyPool(KFSDError):
    pass


class ZeroWeightSum(KFSDError):
    pass


class EmptyDepths(KFSDError):
    pass


class EmptyPeripheralSet(KFSDError):
    pass


class AllReplicationsEmpty(KFSDError):
    pass


class ConfigError(KFSDError):
    pass
