"""Exception hierarchy.

Every error raised on bad input derives from :class:`AlignmentError`, which is
itself a ``ValueError`` so generic callers can keep catching that.
"""


class AlignmentError(ValueError):
    """Base class for all input errors raised by repalign."""


class NonFiniteError(AlignmentError):
    pass


class ZeroRowError(AlignmentError):
    def __init__(self, index, message=None):
        self.index = int(index)
        super().__init__(message or f"row {self.index} has (numerically) zero norm")


class EmptyMatrixError(AlignmentError):
    pass


class EmptyListError(AlignmentError):
    pass


class NoConvergenceError(AlignmentError):
    pass


class RowCountMismatchError(AlignmentError):
    pass


class DimMismatchError(AlignmentError):
    pass


class TooFewSamplesError(AlignmentError):
    pass


class RankDeficientError(AlignmentError):
    pass


class KTooLargeError(AlignmentError):
    pass


class SampleTooLargeError(AlignmentError):
    pass


class BatchTooLargeError(AlignmentError):
    pass


class IndexOutOfRangeError(AlignmentError, IndexError):
    pass


class BadThresholdsError(AlignmentError):
    pass


class AllZeroError(AlignmentError):
    pass


class TooFewColumnsError(AlignmentError):
    pass


class InfeasibleError(AlignmentError):
    pass


class DegenerateSignalError(AlignmentError):
    pass


class NotSquareError(AlignmentError):
    pass


class DegenerateNullError(AlignmentError):
    pass


class WindowTooLargeError(AlignmentError):
    pass


class ConstantXError(AlignmentError):
    pass


class TooFewModelsError(AlignmentError):
    pass


class SingularError(AlignmentError):
    pass


class BadMagicError(AlignmentError):
    pass


class TruncatedPayloadError(AlignmentError):
    pass


class MissingSaeError(AlignmentError):
    pass


class ManifestError(AlignmentError):
    pass
