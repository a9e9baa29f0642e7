"""Checkpoint serialization: torch weights plus a JSON metadata sidecar.

A checkpoint lives at <prefix>.pt / <prefix>.json. The sidecar records the
model type, the full flat config, a hash of it, the training step and a
format version; loading with a mismatched model type is rejected.
"""

from __future__ import annotations

import dataclasses
import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import torch

from .errors import FormatError, ValidationError

FORMAT_VERSION = 1
MODEL_TYPES = ("background_ae", "motion_vae", "content_vae", "decoder", "sr", "generator", "critic", "feature_ae")


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class Checkpoint:
    model_type: str
    weights: bytes
    config: dict
    step: int
    created_at: str
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.model_type not in MODEL_TYPES:
            raise ValidationError(f"unknown model_type {self.model_type!r}")

    @property
    def meta(self) -> dict:
        return {
            "model_type": self.model_type,
            "config": self.config,
            "config_hash": config_hash(self.config),
            "step": self.step,
            "created_at": self.created_at,
            "format_version": self.format_version,
        }

    def state_dict(self) -> dict:
        return torch.load(io.BytesIO(self.weights), map_location="cpu", weights_only=True)


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_checkpoint(model_type: str, module: torch.nn.Module, config, step: int, prefix) -> Checkpoint:
    """Serialize module weights + config to <prefix>.pt/.json (atomic writes)."""
    if dataclasses.is_dataclass(config):
        config = dataclasses.asdict(config)
    buf = io.BytesIO()
    torch.save(module.state_dict(), buf)
    ckpt = Checkpoint(
        model_type=model_type,
        weights=buf.getvalue(),
        config=dict(config),
        step=int(step),
        created_at=datetime.now(timezone.utc).isoformat(),
    )
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write(prefix.with_suffix(".pt"), ckpt.weights)
    _atomic_write(prefix.with_suffix(".json"), (json.dumps(ckpt.meta, indent=2) + "\n").encode())
    return ckpt


def load_checkpoint(prefix, expected_type: str) -> Checkpoint:
    prefix = Path(prefix)
    pt, sidecar = prefix.with_suffix(".pt"), prefix.with_suffix(".json")
    if not pt.is_file() or not sidecar.is_file():
        raise FormatError(f"checkpoint not found at {prefix}(.pt/.json)")
    try:
        meta = json.loads(sidecar.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed checkpoint sidecar {sidecar}: {exc}") from exc
    for key in ("model_type", "config", "step", "created_at", "format_version"):
        if key not in meta:
            raise FormatError(f"checkpoint sidecar {sidecar} missing {key!r}")
    if meta["model_type"] != expected_type:
        raise ValidationError(
            f"checkpoint {prefix} has model_type {meta['model_type']!r}, expected {expected_type!r}"
        )
    return Checkpoint(
        model_type=meta["model_type"],
        weights=pt.read_bytes(),
        config=meta["config"],
        step=meta["step"],
        created_at=meta["created_at"],
        format_version=meta["format_version"],
    )
