"""Exception types shared across the library."""


class FlowPoseError(Exception):
    """Base class for library errors."""


class CheiralityError(FlowPoseError):
    """A point mapped behind or onto the camera plane."""


class InsufficientDataError(FlowPoseError):
    """Too few valid pixels / matched samples to proceed."""


class DegenerateGeometryError(FlowPoseError):
    """Normal equations are singular or too ill-conditioned to solve."""


class RasterFormatError(FlowPoseError):
    """Malformed raster or trajectory file."""
