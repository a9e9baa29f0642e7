"""Shared domain types, validation helpers and the deterministic RNG policy.

Array layout convention used everywhere: videos are numpy float32 arrays of
shape (n, H, W, C) with values in [0, 1]; single frames are (H, W, C);
masks and motion-reference videos use C=1 with values exactly in {0, 1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .errors import DimensionError, NumericError, ValidationError

VALID_CHANNELS = (1, 3)
LATENT_KINDS = ("motion", "content", "noise")

# Desk-scale defaults: 16 frames, 64x64 pixels.
DEFAULT_FRAMES = 16
DEFAULT_SIZE = 64


def validate_video(v, channels: int | None = None, min_hw: int = 8) -> np.ndarray:
    """Check VideoTensor invariants and return the array as float32.

    min_hw is 8 for pipeline videos; loss helpers operating on small test
    arrays relax it to 1.
    """
    arr = np.asarray(v)
    if arr.ndim != 4:
        raise DimensionError(f"video must be 4-D (n,H,W,C), got shape {arr.shape}")
    n, h, w, c = arr.shape
    if n < 1:
        raise ValidationError("video needs at least one frame")
    if h < min_hw or w < min_hw:
        raise DimensionError(f"video spatial dims must be >= {min_hw}, got {h}x{w}")
    if c not in VALID_CHANNELS:
        raise DimensionError(f"channel count must be 1 or 3, got {c}")
    if channels is not None and c != channels:
        raise DimensionError(f"expected {channels} channels, got {c}")
    if not np.isfinite(arr).all():
        raise NumericError("video contains NaN or Inf")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValidationError(
            f"video values must lie in [0,1], got range [{arr.min()}, {arr.max()}]"
        )
    return np.ascontiguousarray(arr, dtype=np.float32)


def validate_binary_video(v, min_hw: int = 8) -> np.ndarray:
    """BinaryVideo: single channel and exact membership in {0, 1}."""
    arr = validate_video(v, channels=1, min_hw=min_hw)
    if not np.isin(arr, (0.0, 1.0)).all():
        raise ValidationError("binary video must contain only 0 and 1")
    return arr


def validate_frame(f, channels: int | None = None, min_hw: int = 8) -> np.ndarray:
    """Single (H, W, C) frame with the same value invariants as videos."""
    arr = np.asarray(f)
    if arr.ndim != 3:
        raise DimensionError(f"frame must be 3-D (H,W,C), got shape {arr.shape}")
    return validate_video(arr[None], channels=channels, min_hw=min_hw)[0]


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle, half-open [x0, x1) x [y0, y1) in pixel units."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        for name in ("x0", "y0", "x1", "y1"):
            val = getattr(self, name)
            if not isinstance(val, (int, np.integer)):
                raise ValidationError(f"box coordinate {name} must be an integer, got {val!r}")
            object.__setattr__(self, name, int(val))
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValidationError(
                f"box must have positive extent, got [{self.x0},{self.y0},{self.x1},{self.y1}]"
            )
        if self.x0 < 0 or self.y0 < 0:
            raise ValidationError("box coordinates must be non-negative")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    def area(self) -> int:
        return self.width * self.height

    def iou(self, other: "Box") -> float:
        ix0, iy0 = max(self.x0, other.x0), max(self.y0, other.y0)
        ix1, iy1 = min(self.x1, other.x1), min(self.y1, other.y1)
        inter = max(0, ix1 - ix0) * max(0, iy1 - iy0)
        if inter == 0:
            return 0.0
        return inter / float(self.area() + other.area() - inter)

    def as_list(self) -> list[int]:
        return [self.x0, self.y0, self.x1, self.y1]


@dataclass
class ObjectTrack:
    """One object's per-frame boxes; None marks frames with no detection."""

    id: int
    boxes: list[Box | None]


@dataclass
class BoxTrackSet:
    """Per-object, per-frame box tracks over an H x W canvas."""

    num_frames: int
    width: int
    height: int
    objects: list[ObjectTrack] = field(default_factory=list)

    def __post_init__(self):
        if self.num_frames < 1:
            raise ValidationError("track set needs num_frames >= 1")
        if self.width < 1 or self.height < 1:
            raise ValidationError("track set needs positive width and height")
        seen: set[int] = set()
        for obj in self.objects:
            if obj.id in seen:
                raise ValidationError(f"duplicate object id {obj.id}")
            seen.add(obj.id)
            if len(obj.boxes) != self.num_frames:
                raise ValidationError(
                    f"object {obj.id} has {len(obj.boxes)} boxes, expected {self.num_frames}"
                )
            for frame_idx, box in enumerate(obj.boxes):
                if box is None:
                    continue
                if box.x1 > self.width or box.y1 > self.height:
                    raise ValidationError(
                        f"object {obj.id} frame {frame_idx}: box {box.as_list()} "
                        f"exceeds {self.width}x{self.height} canvas"
                    )

    def boxes_at(self, frame_idx: int) -> list[Box]:
        return [o.boxes[frame_idx] for o in self.objects if o.boxes[frame_idx] is not None]


@dataclass
class LatentCode:
    """Fixed-length real vector for motion, content, or noise."""

    values: np.ndarray
    kind: str

    def __post_init__(self):
        if self.kind not in LATENT_KINDS:
            raise ValidationError(f"latent kind must be one of {LATENT_KINDS}, got {self.kind!r}")
        arr = np.asarray(self.values, dtype=np.float32).reshape(-1)
        if not np.isfinite(arr).all():
            raise NumericError("latent code contains NaN or Inf")
        self.values = arr

    def __len__(self) -> int:
        return self.values.shape[0]


def seeded_rng(*parts: int) -> np.random.Generator:
    """Deterministic numpy generator derived from one or more integer parts."""
    return np.random.default_rng(list(parts))


def seeded_torch_generator(seed: int) -> torch.Generator:
    gen = torch.Generator(device="cpu")
    gen.manual_seed(int(seed) & 0x7FFFFFFFFFFFFFFF)
    return gen


def video_to_tensor(v: np.ndarray) -> torch.Tensor:
    """(n,H,W,C) numpy -> (1,C,n,H,W) torch float32."""
    return torch.from_numpy(np.ascontiguousarray(v, dtype=np.float32)).permute(3, 0, 1, 2)[None]


def tensor_to_video(t: torch.Tensor) -> np.ndarray:
    """(1,C,n,H,W) or (C,n,H,W) torch -> (n,H,W,C) numpy float32."""
    if t.dim() == 5:
        t = t[0]
    return t.permute(1, 2, 3, 0).detach().cpu().numpy().astype(np.float32)


def frame_to_tensor(f: np.ndarray) -> torch.Tensor:
    """(H,W,C) numpy -> (1,C,H,W) torch float32."""
    return torch.from_numpy(np.ascontiguousarray(f, dtype=np.float32)).permute(2, 0, 1)[None]


def tensor_to_frame(t: torch.Tensor) -> np.ndarray:
    if t.dim() == 4:
        t = t[0]
    return t.permute(1, 2, 0).detach().cpu().numpy().astype(np.float32)
