"""Exception hierarchy for the motionbox package.

ValidationError and its subclasses signal bad user input (CLI exit code 1);
everything else derived from MotionboxError is a runtime failure (exit code 2).
"""


class MotionboxError(Exception):
    """Base class for all package errors."""


class ValidationError(MotionboxError):
    """Input violates a documented contract (schema, range, mode)."""


class FormatError(ValidationError):
    """On-disk artifact is malformed (missing frames, bad manifest)."""


class DimensionError(ValidationError):
    """Array shapes disagree or do not match a trained configuration."""


class PlacementError(MotionboxError):
    """Synthetic world could not place sprites without overlap."""


class TrainingError(MotionboxError):
    """Training aborted (divergence, NaN loss)."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"{message} (step {step})")
        self.step = step


class NumericError(MotionboxError):
    """Non-finite values where finite ones are required."""


class CapabilityError(MotionboxError):
    """Requested feature is unavailable in this environment."""
