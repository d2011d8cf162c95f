"""Exception hierarchy shared across the package."""


class MorphnerError(Exception):
    """Base class for all errors raised by this package."""


class MalformedAnalysisError(MorphnerError):
    """An analysis string that cannot be split into root and tags."""


class CorpusLoadError(MorphnerError):
    """A corpus file that violates the on-disk format."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class ConfigurationError(MorphnerError):
    """Inconsistent dimensions, unknown architecture, or bad config keys."""


class DataValidationError(MorphnerError):
    """Corpus content that the requested operation cannot work with."""


class DegenerateVarianceError(MorphnerError):
    """Both samples of a two-sample test have zero variance."""
