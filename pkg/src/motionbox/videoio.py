"""Lossless video and track I/O.

Frame directories hold zero-padded 8-bit PNGs (0000.png ...) plus a
manifest.json {"n","h","w","c"}. Track files are tracks.json matching the
schema documented in the README; serialization is canonical so a load/save
round trip is byte-identical.
"""

from __future__ import annotations

import io
import json
import re
from pathlib import Path

import numpy as np
from PIL import Image

from .core import Box, BoxTrackSet, ObjectTrack, validate_video
from .errors import DimensionError, FormatError, ValidationError

_FRAME_RE = re.compile(r"^(\d{4})\.png$")


def frame_to_uint8(frame: np.ndarray) -> np.ndarray:
    return np.clip(np.round(np.asarray(frame, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def encode_frame_png(frame: np.ndarray) -> bytes:
    """Encode one (H,W,C) float frame in [0,1] as PNG bytes (C=1 -> grayscale)."""
    arr = frame_to_uint8(frame)
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise DimensionError(f"frame must be (H,W,1) or (H,W,3), got {arr.shape}")
    img = Image.fromarray(arr[:, :, 0], mode="L") if arr.shape[2] == 1 else Image.fromarray(arr, mode="RGB")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def decode_frame_png(data: bytes) -> np.ndarray:
    """PNG bytes -> (H,W,C) float32 in [0,1]; grayscale maps to C=1."""
    img = Image.open(io.BytesIO(data))
    if img.mode == "L":
        arr = np.asarray(img, dtype=np.float32)[:, :, None]
    else:
        arr = np.asarray(img.convert("RGB"), dtype=np.float32)
    return arr / 255.0


def save_video(v: np.ndarray, path) -> dict:
    """Write one PNG per frame plus manifest.json; returns the manifest dict."""
    arr = validate_video(v, min_hw=1)
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    n, h, w, c = arr.shape
    for idx in range(n):
        (out / f"{idx:04d}.png").write_bytes(encode_frame_png(arr[idx]))
    manifest = {"n": int(n), "h": int(h), "w": int(w), "c": int(c)}
    (out / "manifest.json").write_text(json.dumps(manifest) + "\n")
    return manifest


def load_video(path) -> np.ndarray:
    """Read a frame directory back into an (n,H,W,C) float32 array."""
    src = Path(path)
    if not src.is_dir():
        raise FormatError(f"not a frame directory: {src}")
    indices = {}
    for p in src.iterdir():
        m = _FRAME_RE.match(p.name)
        if m:
            indices[int(m.group(1))] = p
    if not indices:
        raise FormatError(f"no frame files (0000.png ...) in {src}")
    n = max(indices) + 1
    for idx in range(n):
        if idx not in indices:
            raise FormatError(f"missing frame at index {idx} in {src}")
    frames = []
    shape = None
    for idx in range(n):
        frame = decode_frame_png(indices[idx].read_bytes())
        if shape is None:
            shape = frame.shape
        elif frame.shape != shape:
            raise DimensionError(
                f"frame {idx:04d} has shape {frame.shape[:2]}, expected {shape[:2]}"
            )
        frames.append(frame)
    return np.stack(frames).astype(np.float32)


def _box_from_json(entry, obj_id: int, frame_idx: int) -> Box | None:
    if entry is None:
        return None
    if not (isinstance(entry, list) and len(entry) == 4):
        raise ValidationError(
            f"object {obj_id} frame {frame_idx}: box must be [x0,y0,x1,y1] or null, got {entry!r}"
        )
    x0, y0, x1, y1 = entry
    for v in entry:
        if not isinstance(v, int):
            raise ValidationError(
                f"object {obj_id} frame {frame_idx}: box coordinates must be integers"
            )
    if x1 <= x0 or y1 <= y0:
        raise ValidationError(
            f"object {obj_id} frame {frame_idx}: degenerate box [{x0},{y0},{x1},{y1}]"
        )
    return Box(x0, y0, x1, y1)


def tracks_to_json(t: BoxTrackSet) -> str:
    """Canonical serialization: fixed key order, 2-space indent, trailing newline."""
    payload = {
        "num_frames": t.num_frames,
        "width": t.width,
        "height": t.height,
        "objects": [
            {
                "id": obj.id,
                "boxes": [None if b is None else b.as_list() for b in obj.boxes],
            }
            for obj in t.objects
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


def tracks_from_json(text: str) -> BoxTrackSet:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"tracks file is not valid JSON: {exc}") from exc
    for key in ("num_frames", "width", "height", "objects"):
        if key not in raw:
            raise ValidationError(f"tracks file missing required key {key!r}")
    objects = []
    for obj in raw["objects"]:
        if "id" not in obj or "boxes" not in obj:
            raise ValidationError("each track object needs 'id' and 'boxes'")
        boxes = [
            _box_from_json(entry, obj["id"], idx) for idx, entry in enumerate(obj["boxes"])
        ]
        objects.append(ObjectTrack(id=obj["id"], boxes=boxes))
    return BoxTrackSet(
        num_frames=raw["num_frames"],
        width=raw["width"],
        height=raw["height"],
        objects=objects,
    )


def save_tracks(t: BoxTrackSet, path) -> None:
    Path(path).write_text(tracks_to_json(t))


def load_tracks(path) -> BoxTrackSet:
    p = Path(path)
    if not p.is_file():
        raise FormatError(f"tracks file not found: {p}")
    return tracks_from_json(p.read_text())
