"""motionbox: controllable video generation from bounding-box motion tracks."""

__version__ = "0.1.0"

from .core import Box, BoxTrackSet, LatentCode, ObjectTrack
from .errors import (
    CapabilityError,
    DimensionError,
    FormatError,
    MotionboxError,
    NumericError,
    PlacementError,
    TrainingError,
    ValidationError,
)

__all__ = [
    "Box",
    "BoxTrackSet",
    "LatentCode",
    "ObjectTrack",
    "MotionboxError",
    "ValidationError",
    "FormatError",
    "DimensionError",
    "PlacementError",
    "TrainingError",
    "NumericError",
    "CapabilityError",
    "__version__",
]
