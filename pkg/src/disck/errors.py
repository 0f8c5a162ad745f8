"""Exception hierarchy shared by every disck module."""


class DisckError(Exception):
    """Base class for all errors raised by disck."""


class FeatureFormatError(DisckError, ValueError):
    """A serialized feature string (or a feature object) is malformed."""


class NormalizationError(DisckError, ValueError):
    """Normalization of an empty vector is undefined."""


class TrainingError(DisckError, ValueError):
    """Training data cannot produce a model (single label, non-finite weights)."""


class SamplingError(DisckError, ValueError):
    """The candidate pool is too small for the requested sample."""


class IndexBuildError(DisckError, ValueError):
    """Candidate vectors violate an index invariant (binary weights, unique ids)."""


class IndexFormatError(DisckError):
    """An index file could not be decoded."""


class IndexVersionError(IndexFormatError):
    pass


class IndexTruncatedError(IndexFormatError):
    pass


class IndexChecksumError(IndexFormatError):
    pass


class DataError(DisckError, ValueError):
    """Input data (corpus, qrels, run or model files) is invalid.

    ``line`` is the 1-based line number when the error can be pinned to one.
    """

    def __init__(self, message: str, *, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
