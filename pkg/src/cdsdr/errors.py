"""Exception types raised by the estimators and helpers."""


class SDRError(Exception):
    """Base class for all package errors."""


class DataError(SDRError, ValueError):
    """Input data violates a precondition."""


class InvalidBandwidthError(DataError):
    pass


class DimensionError(DataError):
    pass


class DegenerateResponseError(DataError):
    pass


class NumericalError(SDRError, ArithmeticError):
    """A numeric step could not be carried out."""


class RankDeficiencyError(NumericalError):
    pass


class NotPSDError(NumericalError):
    pass


class EmptyWindowError(NumericalError):
    pass


class FullyTrimmedError(NumericalError):
    pass


class IllPosedStepError(NumericalError):
    pass


class RankCollapseError(NumericalError):
    pass


class SamplingStallError(NumericalError):
    pass
