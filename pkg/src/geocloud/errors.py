"""Exception hierarchy shared by every geocloud module."""


class GeoCloudError(Exception):
    """Base class for all errors raised by geocloud."""


class DimensionError(GeoCloudError, ValueError):
    pass


class ParseError(GeoCloudError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TruncationError(GeoCloudError, ValueError):
    pass


class IoError(GeoCloudError, OSError):
    pass


class EmptyRequest(GeoCloudError, ValueError):
    pass


class InsufficientPoints(GeoCloudError, ValueError):
    pass


class RatioError(GeoCloudError, ValueError):
    pass


class SizeMismatch(GeoCloudError, ValueError):
    pass


class TooLargeForExact(GeoCloudError, ValueError):
    pass


class CovarianceError(GeoCloudError, ValueError):
    pass


class InsufficientData(GeoCloudError, ValueError):
    pass


class UnsupportedDimension(GeoCloudError, ValueError):
    pass


class FormatError(GeoCloudError, ValueError):
    pass


class SizeError(GeoCloudError, ValueError):
    pass


class TooShort(GeoCloudError, ValueError):
    pass


class SchemaError(GeoCloudError, ValueError):
    pass


class PipelineError(GeoCloudError):
    """Wraps an error raised inside a pipeline stage, keeping the stage name."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
