"""Exception hierarchy shared by the library and the CLI."""


class DepthCauseError(Exception):
    """Base class for all errors raised by depthcause."""


class DataError(DepthCauseError, ValueError):
    """Malformed, inconsistent or missing input data."""


class DegenerateAnalysisError(DepthCauseError, ValueError):
    """The analysis cannot proceed, e.g. a depth split left a group empty."""


class SparseGridWarning(UserWarning):
    """Extremal depth evaluated on a grid that is not much longer than the sample."""
