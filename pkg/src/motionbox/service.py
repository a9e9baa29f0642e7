"""HTTP generation service.

Serves controlled/unconditional generation from checkpoint bundles under a
models directory. Responses are bit-identical to direct library calls with
the same inputs: the same generate() and PNG encoder run in both paths.
"""

from __future__ import annotations

import base64
import binascii
import io
import logging
import time
import zipfile
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response
from pydantic import BaseModel

from .errors import MotionboxError, ValidationError
from .generator import GeneratorBundle
from .videoio import decode_frame_png, encode_frame_png, tracks_from_json
import json as _json

logger = logging.getLogger(__name__)


class GenerateRequest(BaseModel):
    mode: str = "controlled"
    content_image: str | None = None  # base64 PNG
    tracks: dict | None = None  # tracks.json schema
    seed: int = 0
    model_id: str | None = None


class ModelRegistry:
    """Scans a directory for checkpoint bundles; malformed ones are skipped."""

    def __init__(self, models_dir: Path | None):
        self.models_dir = Path(models_dir) if models_dir else None
        self.entries: dict[str, dict] = {}
        self._bundles: dict[str, GeneratorBundle] = {}
        self.refresh()

    def refresh(self) -> None:
        self.entries = {}
        if self.models_dir is None or not self.models_dir.is_dir():
            return
        candidates = [self.models_dir] + sorted(p for p in self.models_dir.iterdir() if p.is_dir())
        for path in candidates:
            meta_path = path / "bundle.json"
            if not meta_path.is_file():
                continue
            try:
                meta = _json.loads(meta_path.read_text())
                entry = {
                    "model_id": path.name,
                    "n": int(meta["n"]),
                    "h": int(meta["h"]),
                    "w": int(meta["w"]),
                    "trained_steps": int(meta.get("trained_steps", 0)),
                }
            except (KeyError, ValueError, TypeError, _json.JSONDecodeError) as exc:
                logger.warning("skipping malformed bundle at %s: %s", path, exc)
                continue
            entry["_path"] = str(path)
            self.entries[entry["model_id"]] = entry

    def get(self, model_id: str | None) -> tuple[str, GeneratorBundle]:
        if not self.entries:
            raise HTTPException(status_code=503, detail="no model loaded")
        if model_id is None:
            model_id = next(iter(self.entries))
        if model_id not in self.entries:
            raise HTTPException(status_code=404, detail=f"unknown model_id {model_id!r}")
        if model_id not in self._bundles:
            self._bundles[model_id] = GeneratorBundle.load(self.entries[model_id]["_path"])
        return model_id, self._bundles[model_id]

    def listing(self) -> list[dict]:
        return [{k: v for k, v in e.items() if not k.startswith("_")} for e in self.entries.values()]


def _decode_content_image(data_b64: str) -> np.ndarray:
    try:
        raw = base64.b64decode(data_b64, validate=True)
        return decode_frame_png(raw)
    except (binascii.Error, OSError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=f"content_image: not a valid base64 PNG ({exc})")


def create_app(models_dir=None, ui_dir=None) -> FastAPI:
    app = FastAPI(title="motionbox generation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    registry = ModelRegistry(models_dir)
    app.state.registry = registry

    @app.get("/api/v1/health")
    def health():
        return {"status": "ok", "model_loaded": bool(registry.entries)}

    @app.get("/api/v1/models")
    def models():
        return registry.listing()

    @app.post("/api/v1/generate")
    def generate(req: GenerateRequest, format: str = Query(default="json")):
        model_id, bundle = registry.get(req.model_id)
        n, h, w = bundle.shape
        started = time.monotonic()
        if req.mode == "controlled":
            if req.content_image is None:
                raise HTTPException(status_code=400, detail="content_image is required in controlled mode")
            if req.tracks is None:
                raise HTTPException(status_code=400, detail="tracks are required in controlled mode")
            frame = _decode_content_image(req.content_image)
            if frame.shape != (h, w, 3):
                raise HTTPException(
                    status_code=400,
                    detail=f"content_image: expected {h}x{w} RGB, got {frame.shape[0]}x{frame.shape[1]}",
                )
            try:
                tracks = tracks_from_json(_json.dumps(req.tracks))
            except MotionboxError as exc:
                raise HTTPException(status_code=400, detail=f"tracks: {exc}")
            if tracks.num_frames != n:
                raise HTTPException(
                    status_code=400,
                    detail=f"tracks: num_frames={tracks.num_frames} does not match model n={n}",
                )
            try:
                video = bundle.generate(content_frame=frame, tracks=tracks, seed=req.seed, mode="controlled")
            except ValidationError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        elif req.mode == "unconditional":
            video = bundle.generate(seed=req.seed, mode="unconditional")
        else:
            raise HTTPException(status_code=400, detail=f"mode: must be controlled|unconditional, got {req.mode!r}")
        elapsed_ms = int((time.monotonic() - started) * 1000)
        frames_png = [encode_frame_png(video[t]) for t in range(video.shape[0])]
        if format == "zip":
            buf = io.BytesIO()
            with zipfile.ZipFile(buf, "w", zipfile.ZIP_STORED) as zf:
                for idx, data in enumerate(frames_png):
                    zf.writestr(f"{idx:04d}.png", data)
            return Response(
                content=buf.getvalue(),
                media_type="application/zip",
                headers={"Content-Disposition": "attachment; filename=generated.zip"},
            )
        return {
            "frames": [base64.b64encode(data).decode("ascii") for data in frames_png],
            "meta": {
                "model_id": model_id,
                "seed": req.seed,
                "n": n,
                "h": h,
                "w": w,
                "elapsed_ms": elapsed_ms,
            },
        }

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
