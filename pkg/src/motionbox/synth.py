"""Synthetic sprite world with exact ground-truth tracks.

Episodes are rendered over a fixed background (shared across a dataset) with
solid-color sprites moving at constant integer velocity and bouncing off the
frame edges, so every track box is exact and detection can be verified
against a known answer.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.optimize import linear_sum_assignment

from .core import Box, BoxTrackSet, ObjectTrack, seeded_rng, validate_video
from .errors import PlacementError, ValidationError
from .videoio import encode_frame_png, decode_frame_png, save_tracks, save_video

# Detection threshold: far above 8-bit quantization noise, far below
# sprite/background contrast.
DETECT_THRESHOLD = 0.05
DETECT_MIN_AREA = 4

_BACKGROUND_STREAM = 0x42
_EPISODE_STREAM = 0x45

BACKGROUND_LEVEL = 0.15
SPRITE_CHANNEL_LO = 0.55


@dataclass
class WorldConfig:
    num_objects: int = 1
    sprite_size: int = 10
    background: str = "flat"  # "flat" | "textured"
    velocity_range: int = 2
    n: int = 16
    height: int = 64
    width: int = 64
    seed: int = 0
    mixed_shapes: bool = False  # squares only by default; circles mixed in when set

    def __post_init__(self):
        if self.num_objects < 1:
            raise ValidationError("world needs at least one object")
        if self.sprite_size < 2 or self.sprite_size > min(self.height, self.width):
            raise ValidationError("sprite must fit in the frame (and be at least 2px)")
        if self.velocity_range < 0:
            raise ValidationError("velocity_range must be >= 0")
        if self.velocity_range > min(self.height, self.width) - self.sprite_size:
            raise ValidationError("velocity_range too large for single-bounce dynamics")
        if self.background not in ("flat", "textured"):
            raise ValidationError(f"unknown background kind {self.background!r}")
        if self.n < 1 or self.height < 8 or self.width < 8:
            raise ValidationError("need n >= 1 and at least 8x8 frames")


def render_background(cfg: WorldConfig) -> np.ndarray:
    """(H,W,3) background shared by every episode of a dataset (seeded by cfg)."""
    if cfg.background == "flat":
        return np.full((cfg.height, cfg.width, 3), BACKGROUND_LEVEL, dtype=np.float32)
    rng = seeded_rng(cfg.seed, _BACKGROUND_STREAM)
    block = 8
    coarse = rng.uniform(0.05, 0.3, size=(cfg.height // block + 1, cfg.width // block + 1, 3))
    tex = np.kron(coarse, np.ones((block, block, 1)))[: cfg.height, : cfg.width]
    return tex.astype(np.float32)


def _sprite_color(rng: np.random.Generator) -> np.ndarray:
    # Bright colors keep |frame - background| well above DETECT_THRESHOLD.
    color = rng.uniform(0.0, 1.0, size=3).astype(np.float32)
    color[rng.integers(0, 3)] = rng.uniform(SPRITE_CHANNEL_LO, 1.0)
    return np.clip(color, 0.0, 1.0)


def _paint_sprite(frame: np.ndarray, box: Box, color: np.ndarray, shape: str) -> None:
    if shape == "square":
        frame[box.y0 : box.y1, box.x0 : box.x1] = color
        return
    s = box.width
    yy, xx = np.mgrid[box.y0 : box.y1, box.x0 : box.x1]
    cy, cx = box.y0 + s / 2.0, box.x0 + s / 2.0
    inside = (yy + 0.5 - cy) ** 2 + (xx + 0.5 - cx) ** 2 <= (s / 2.0) ** 2
    region = frame[box.y0 : box.y1, box.x0 : box.x1]
    region[inside] = color


def _place_initial(rng, cfg: WorldConfig, placed: list[tuple[int, int]]) -> tuple[int, int]:
    s = cfg.sprite_size
    for _ in range(1000):
        x = int(rng.integers(0, cfg.width - s + 1))
        y = int(rng.integers(0, cfg.height - s + 1))
        if all(abs(x - px) >= s or abs(y - py) >= s for px, py in placed):
            return x, y
    raise PlacementError(
        f"could not place {cfg.num_objects} non-overlapping sprites after 1000 attempts"
    )


def _bounce(pos: int, vel: int, limit: int) -> tuple[int, int]:
    # limit = max valid coordinate; velocity_range <= limit guarantees at most
    # one reflection per step.
    nxt = pos + vel
    if nxt < 0:
        return -nxt, -vel
    if nxt > limit:
        return 2 * limit - nxt, -vel
    return nxt, vel


def generate_episode(
    cfg: WorldConfig,
    seed: int,
    initial_boxes: list[Box] | None = None,
    velocities: list[tuple[int, int]] | None = None,
) -> tuple[np.ndarray, BoxTrackSet]:
    """Render one episode; returns the video and its exact tight box tracks.

    initial_boxes / velocities pin the kinematics for tests; by default both
    are drawn from the episode RNG.
    """
    rng = seeded_rng(cfg.seed, _EPISODE_STREAM, seed)
    bg = render_background(cfg)
    s = cfg.sprite_size

    positions: list[tuple[int, int]] = []
    if initial_boxes is not None:
        if len(initial_boxes) != cfg.num_objects:
            raise ValidationError("initial_boxes length must equal num_objects")
        for b in initial_boxes:
            if b.width != s or b.height != s or b.x1 > cfg.width or b.y1 > cfg.height:
                raise ValidationError(f"initial box {b.as_list()} must be {s}x{s} inside the frame")
            positions.append((b.x0, b.y0))
    else:
        placed: list[tuple[int, int]] = []
        for _ in range(cfg.num_objects):
            placed.append(_place_initial(rng, cfg, placed))
        positions = placed

    if velocities is not None:
        if len(velocities) != cfg.num_objects:
            raise ValidationError("velocities length must equal num_objects")
        vels = [(int(vx), int(vy)) for vx, vy in velocities]
    else:
        vr = cfg.velocity_range
        vels = [
            (int(rng.integers(-vr, vr + 1)), int(rng.integers(-vr, vr + 1)))
            for _ in range(cfg.num_objects)
        ]

    colors = [_sprite_color(rng) for _ in range(cfg.num_objects)]
    shapes = [
        "circle" if (cfg.mixed_shapes and rng.integers(0, 2) == 1) else "square"
        for _ in range(cfg.num_objects)
    ]

    frames = np.empty((cfg.n, cfg.height, cfg.width, 3), dtype=np.float32)
    tracks = [ObjectTrack(id=i, boxes=[]) for i in range(cfg.num_objects)]
    pos = list(positions)
    vel = list(vels)
    for t in range(cfg.n):
        frame = bg.copy()
        for i in range(cfg.num_objects):
            x, y = pos[i]
            box = Box(x, y, x + s, y + s)
            _paint_sprite(frame, box, colors[i], shapes[i])
            tracks[i].boxes.append(box)
        frames[t] = frame
        for i in range(cfg.num_objects):
            x, y = pos[i]
            vx, vy = vel[i]
            x, vx = _bounce(x, vx, cfg.width - s)
            y, vy = _bounce(y, vy, cfg.height - s)
            pos[i] = (x, y)
            vel[i] = (vx, vy)

    track_set = BoxTrackSet(
        num_frames=cfg.n, width=cfg.width, height=cfg.height, objects=tracks
    )
    return validate_video(frames), track_set


def _frame_components(
    frame: np.ndarray, bg: np.ndarray, tau: float, min_area: int
) -> list[tuple[Box, tuple[float, float]]]:
    diff = np.abs(frame - bg).max(axis=2) > tau
    labels, count = ndimage.label(diff, structure=np.ones((3, 3), dtype=int))
    comps = []
    for idx in range(1, count + 1):
        ys, xs = np.nonzero(labels == idx)
        if ys.size < min_area:
            continue
        box = Box(int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1)
        comps.append((box, (float(ys.mean()), float(xs.mean()))))
    comps.sort(key=lambda c: (c[0].y0, c[0].x0))
    return comps


def oracle_detect(
    v: np.ndarray,
    background: np.ndarray,
    tau: float = DETECT_THRESHOLD,
    min_area: int = DETECT_MIN_AREA,
) -> BoxTrackSet:
    """Detect objects as connected components of |frame - background| > tau.

    Component-to-id association uses nearest-centroid matching across frames;
    unmatched frames yield absent boxes for that object.
    """
    video = validate_video(v, channels=3)
    bg = np.asarray(background, dtype=np.float32)
    if bg.shape != video.shape[1:]:
        raise ValidationError(f"background shape {bg.shape} does not match video {video.shape[1:]}")
    n = video.shape[0]

    objects: list[ObjectTrack] = []
    centroids: dict[int, tuple[float, float]] = {}
    for t in range(n):
        comps = _frame_components(video[t], bg, tau, min_area)
        active_ids = [oid for oid in centroids]
        assigned: dict[int, int] = {}
        if comps and active_ids:
            cost = np.empty((len(comps), len(active_ids)))
            for ci, (_, cen) in enumerate(comps):
                for oi, oid in enumerate(active_ids):
                    oy, ox = centroids[oid]
                    cost[ci, oi] = (cen[0] - oy) ** 2 + (cen[1] - ox) ** 2
            rows, cols = linear_sum_assignment(cost)
            assigned = {int(r): active_ids[int(c)] for r, c in zip(rows, cols)}
        for ci, (box, cen) in enumerate(comps):
            if ci in assigned:
                oid = assigned[ci]
            else:
                oid = len(objects)
                objects.append(ObjectTrack(id=oid, boxes=[None] * n))
            objects[oid].boxes[t] = box
            centroids[oid] = cen
    return BoxTrackSet(num_frames=n, width=video.shape[2], height=video.shape[1], objects=objects)


def generate_dataset(cfg: WorldConfig, count: int, out_dir) -> dict:
    """Write `count` episode directories plus index.json; deterministic in cfg.seed."""
    if count < 0:
        raise ValidationError("count must be >= 0")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for i in range(count):
        name = f"ep_{i:04d}"
        ep_dir = out / name
        video, tracks = generate_episode(cfg, seed=i)
        save_video(video, ep_dir / "frames")
        save_tracks(tracks, ep_dir / "tracks.json")
        names.append(name)
    (out / "background.png").write_bytes(encode_frame_png(render_background(cfg)))
    index = {"episodes": names, "config": dataclasses.asdict(cfg)}
    index_text = json.dumps(index, indent=2) + "\n"
    (out / "index.json").write_text(index_text)
    index["index_hash"] = hashlib.sha256(index_text.encode()).hexdigest()
    return index


def load_dataset_background(dataset_dir) -> np.ndarray:
    path = Path(dataset_dir) / "background.png"
    if not path.is_file():
        raise ValidationError(f"dataset background not found: {path}")
    return decode_frame_png(path.read_bytes())
