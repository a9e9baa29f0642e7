"""Motion-reference rasterization and refined foreground masks.

The refined masks come from a plain background autoencoder: frames are
compared against their reconstructed background, thresholded, then widened by
the support of a Gaussian kernel so the mask keeps a margin of background
around each object.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .checkpoints import Checkpoint, load_checkpoint, save_checkpoint
from .core import (
    BoxTrackSet,
    frame_to_tensor,
    seeded_rng,
    tensor_to_frame,
    validate_binary_video,
    validate_video,
)
from .errors import DimensionError, ValidationError
from .trainutil import check_finite_loss, sample_batch, set_torch_seed
from .videoio import load_tracks, load_video, save_video

DEFAULT_MASK_THRESHOLD = 0.1
DEFAULT_WIDEN_KERNEL = 10


def rasterize_tracks(
    t: BoxTrackSet, n: int | None = None, h: int | None = None, w: int | None = None
) -> np.ndarray:
    """Binary (n,H,W,1) video: pixel is 1 iff covered by at least one box."""
    n = t.num_frames if n is None else n
    h = t.height if h is None else h
    w = t.width if w is None else w
    if n != t.num_frames:
        raise ValidationError(f"track set has {t.num_frames} frames, requested {n}")
    out = np.zeros((n, h, w, 1), dtype=np.float32)
    for obj in t.objects:
        for frame_idx, box in enumerate(obj.boxes):
            if box is None:
                continue
            if box.x1 > w or box.y1 > h:
                raise ValidationError(
                    f"object {obj.id} frame {frame_idx}: box {box.as_list()} outside {h}x{w} frame"
                )
            out[frame_idx, box.y0 : box.y1, box.x0 : box.x1, 0] = 1.0
    return out


def apply_motion_mask(v: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Elementwise product; the single mask channel broadcasts over video channels."""
    video = validate_video(v, min_hw=1)
    mask = validate_binary_video(m, min_hw=1)
    if video.shape[:3] != mask.shape[:3]:
        raise DimensionError(
            f"video {video.shape[:3]} and mask {mask.shape[:3]} shapes disagree"
        )
    return (video * mask).astype(np.float32)


def _gaussian_kernel(k: int) -> np.ndarray:
    sigma = max(k / 4.0, 0.8)
    offs = np.arange(k) - (k // 2)
    g = np.exp(-(offs**2) / (2 * sigma**2))
    kern = np.outer(g, g)
    return kern / kern.sum()


def _widen_support(m0: np.ndarray, k: int) -> np.ndarray:
    """Mark every pixel whose k-window (Gaussian support) touches the raw mask."""
    if k == 1:
        return m0.copy()
    kern = _gaussian_kernel(k)
    h, w = m0.shape
    lo = k // 2
    hi = k - 1 - lo
    padded = np.zeros((h + k - 1, w + k - 1), dtype=np.float64)
    padded[lo : lo + h, lo : lo + w] = m0
    blurred = np.zeros((h, w), dtype=np.float64)
    for di in range(k):
        for dj in range(k):
            blurred += kern[di, dj] * padded[di : di + h, dj : dj + w]
    return (blurred > 0.0).astype(np.float32)


def extract_foreground_mask(
    f: np.ndarray,
    bg: np.ndarray,
    tau: float = DEFAULT_MASK_THRESHOLD,
    k: int = DEFAULT_WIDEN_KERNEL,
) -> np.ndarray:
    """(H,W,1) binary mask: threshold |f - bg| per pixel, then widen by blur support."""
    if not (0.0 < tau < 1.0):
        raise ValidationError(f"threshold must be in (0,1), got {tau}")
    if k < 1:
        raise ValidationError(f"kernel size must be >= 1, got {k}")
    frame = np.asarray(f, dtype=np.float32)
    back = np.asarray(bg, dtype=np.float32)
    if frame.shape != back.shape:
        raise DimensionError(f"frame {frame.shape} and background {back.shape} shapes disagree")
    m0 = (np.abs(frame - back).max(axis=2) > tau).astype(np.float32)
    return _widen_support(m0, k)[:, :, None]


class BackgroundAE(nn.Module):
    """Ordinary autoencoder (L1-trained); the narrow bottleneck makes it
    reconstruct the static background rather than small moving objects."""

    def __init__(self, height: int = 64, width: int = 64, base_channels: int = 16, bottleneck: int = 64):
        super().__init__()
        if height % 8 or width % 8:
            raise ValidationError("background AE needs H and W divisible by 8")
        c = base_channels
        self.height, self.width = height, width
        self.base_channels, self.bottleneck = base_channels, bottleneck
        feat = 4 * c * (height // 8) * (width // 8)
        self.encoder = nn.Sequential(
            nn.Conv2d(3, c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.Conv2d(c, 2 * c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.Conv2d(2 * c, 4 * c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.Flatten(), nn.Linear(feat, bottleneck),
        )
        self.decoder = nn.Sequential(
            nn.Linear(bottleneck, feat),
            nn.Unflatten(1, (4 * c, height // 8, width // 8)),
            nn.ConvTranspose2d(4 * c, 2 * c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.ConvTranspose2d(2 * c, c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.ConvTranspose2d(c, 3, 4, 2, 1), nn.Sigmoid(),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.decoder(self.encoder(x))

    def reconstruct(self, frame: np.ndarray) -> np.ndarray:
        """Predicted background for one (H,W,3) frame."""
        self.eval()
        with torch.no_grad():
            out = self(frame_to_tensor(frame))
        return tensor_to_frame(out)


@dataclass
class BackgroundTrainConfig:
    height: int = 64
    width: int = 64
    base_channels: int = 16
    bottleneck: int = 64
    steps: int = 400
    batch_size: int = 16
    lr: float = 2e-3
    seed: int = 0


def train_background_ae(
    frames: list[np.ndarray] | np.ndarray, cfg: BackgroundTrainConfig | None = None
) -> tuple[BackgroundAE, list[dict]]:
    """Fit the background AE on a stack of frames with plain (unweighted) L1."""
    cfg = cfg or BackgroundTrainConfig()
    stack = np.stack([np.asarray(f, dtype=np.float32) for f in frames])
    if stack.ndim != 4 or stack.shape[3] != 3:
        raise DimensionError(f"expected (N,H,W,3) frames, got {stack.shape}")
    set_torch_seed(cfg.seed)
    model = BackgroundAE(cfg.height, cfg.width, cfg.base_channels, cfg.bottleneck)
    data = torch.from_numpy(stack).permute(0, 3, 1, 2).contiguous()
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    rng = seeded_rng(cfg.seed, 0x51)
    history = []
    for step in range(cfg.steps):
        batch = sample_batch(rng, data, cfg.batch_size)
        recon = model(batch)
        loss = (recon - batch).abs().mean()
        opt.zero_grad()
        loss.backward()
        opt.step()
        history.append({"step": step, "loss": check_finite_loss(loss, step)})
    model.eval()
    return model, history


def save_background_model(model: BackgroundAE, step: int, prefix) -> Checkpoint:
    cfg = {
        "height": model.height,
        "width": model.width,
        "base_channels": model.base_channels,
        "bottleneck": model.bottleneck,
    }
    return save_checkpoint("background_ae", model, cfg, step, prefix)


def load_background_model(prefix) -> BackgroundAE:
    ckpt = load_checkpoint(prefix, "background_ae")
    model = BackgroundAE(
        ckpt.config["height"],
        ckpt.config["width"],
        ckpt.config["base_channels"],
        ckpt.config["bottleneck"],
    )
    model.load_state_dict(ckpt.state_dict())
    model.eval()
    return model


@dataclass
class PrepConfig:
    mask_threshold: float = DEFAULT_MASK_THRESHOLD
    widen_kernel: int = DEFAULT_WIDEN_KERNEL
    # Content VAE mask source: "refined" (background-AE masks) or "motion_ref".
    content_mask: str = "refined"

    def __post_init__(self):
        if self.content_mask not in ("refined", "motion_ref"):
            raise ValidationError(f"content_mask must be refined|motion_ref, got {self.content_mask!r}")


def prepare_episode(
    episode_dir, bg_model: BackgroundAE | None = None, cfg: PrepConfig | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Write motion/ (rasterized tracks) and masks/ (refined) next to frames/.

    Returns (video, motion reference, refined masks); masks are None when no
    background model is supplied.
    """
    cfg = cfg or PrepConfig()
    ep = Path(episode_dir)
    frames_dir = ep / "frames"
    tracks_path = ep / "tracks.json"
    if not tracks_path.is_file():
        raise ValidationError(
            f"{ep} has no tracks.json; run the tracker or ingest a track file first"
        )
    video = load_video(frames_dir)
    tracks = load_tracks(tracks_path)
    if tracks.num_frames != video.shape[0]:
        raise ValidationError(
            f"tracks cover {tracks.num_frames} frames but video has {video.shape[0]}"
        )
    motion = rasterize_tracks(tracks, video.shape[0], video.shape[1], video.shape[2])
    save_video(motion, ep / "motion")

    masks = None
    if bg_model is not None:
        mask_frames = []
        for t in range(video.shape[0]):
            bg_hat = bg_model.reconstruct(video[t])
            mask_frames.append(
                extract_foreground_mask(video[t], bg_hat, cfg.mask_threshold, cfg.widen_kernel)
            )
        masks = np.stack(mask_frames)
        save_video(masks, ep / "masks")
    return video, motion, masks


def prepare_dataset(dataset_dir, bg_model: BackgroundAE | None, cfg: PrepConfig | None = None) -> list[str]:
    """prepare_episode over every episode listed in index.json."""
    root = Path(dataset_dir)
    index_path = root / "index.json"
    if not index_path.is_file():
        raise ValidationError(f"no index.json under {root}")
    import json

    episodes = json.loads(index_path.read_text())["episodes"]
    for name in episodes:
        prepare_episode(root / name, bg_model, cfg)
    return episodes


def dataclass_asdict(cfg) -> dict:
    return dataclasses.asdict(cfg)
