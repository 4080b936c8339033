"""Exception types shared across the toolkit."""


class SaaiError(Exception):
    """Base class for all toolkit errors."""


class BoundsError(SaaiError, ValueError):
    """A pixel or cell coordinate lies outside its valid domain."""


class DegeneratePlaneError(SaaiError, ValueError):
    """The camera lies on the focal plane; projection is undefined."""


class InvalidPoseError(SaaiError, ValueError):
    """A pose cannot be used (e.g. camera below the scene geometry)."""


class SingularCovarianceError(SaaiError, ValueError):
    """Covariance matrix is singular and no regularization was requested."""


class EmptyInputError(SaaiError, ValueError):
    """An operation received an empty frame sequence or dataset."""


class CoverageError(SaaiError, ValueError):
    """The focal-plane grid does not cover the required region."""


class GridMismatchError(SaaiError, ValueError):
    """Two plane-grid rasters do not share the same grid definition."""


class ManifestError(SaaiError, ValueError):
    """A dataset manifest is malformed.

    ``line`` carries the 1-based line number of the offending record when
    the error was raised while parsing.
    """

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ConfigError(SaaiError, ValueError):
    """A scene or pipeline configuration document is invalid.

    ``location`` names the offending key or document position.
    """

    def __init__(self, message: str, location: str | None = None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location


class GeodeticError(SaaiError, ValueError):
    """Geodetic import records are unusable (missing fields, span too large)."""


class OrderingError(SaaiError, ValueError):
    """Stream frames arrived with non-increasing indices."""


class PipelineError(SaaiError, RuntimeError):
    """A pipeline stage failed; ``frame_index`` identifies the frame."""

    def __init__(self, message: str, frame_index: int | None = None):
        super().__init__(message)
        self.frame_index = frame_index
