"""Content VAE: encodes a single reference frame under a mask-weighted L1.

Only pixels under the foreground mask are penalized, so the latent carries
object appearance while the network is free to place anything elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .checkpoints import Checkpoint, load_checkpoint, save_checkpoint
from .core import LatentCode, seeded_rng, seeded_torch_generator
from .errors import DimensionError, NumericError, ValidationError
from .motion_vae import kl_divergence
from .trainutil import check_finite_loss, set_torch_seed


@dataclass
class ContentVaeConfig:
    latent_dim: int = 128
    kl_weight: float = 1e-3
    mask_source: str = "refined"  # "refined" | "motion_ref"
    base_channels: int = 16
    height: int = 64
    width: int = 64
    steps: int = 1500
    batch_size: int = 16
    lr: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.latent_dim < 1:
            raise ValidationError("latent_dim must be >= 1")
        if self.mask_source not in ("refined", "motion_ref"):
            raise ValidationError(f"mask_source must be refined|motion_ref, got {self.mask_source!r}")
        if self.height % 8 or self.width % 8:
            raise ValidationError("height and width must be divisible by 8")


def masked_l1_t(f: torch.Tensor, f_hat: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Mean(|f_hat - f| * mask) with the mean taken over all pixels.

    f, f_hat: (B,C,H,W); mask: (B,1,H,W) binary, broadcast over channels.
    """
    if f.shape != f_hat.shape:
        raise DimensionError(f"shape mismatch: {tuple(f.shape)} vs {tuple(f_hat.shape)}")
    return ((f_hat - f).abs() * mask).mean()


def _as_hwc(arr, name: str) -> np.ndarray:
    out = np.asarray(arr)
    if out.ndim == 2:
        out = out[:, :, None]
    if out.ndim != 3:
        raise DimensionError(f"{name} must be (H,W,C), got {np.asarray(arr).shape}")
    if not np.isfinite(out).all():
        raise NumericError(f"{name} contains NaN or Inf")
    return out


def content_weighted_loss(f, f_hat, mask) -> float:
    """Scalar mask-weighted L1 on a single frame pair; mask pixels at 0
    contribute exactly nothing."""
    frame = _as_hwc(f, "f")
    frame_hat = _as_hwc(f_hat, "f_hat")
    m = _as_hwc(mask, "mask")
    if m.shape[2] != 1:
        raise ValidationError("mask must be single-channel")
    if not np.isin(m, (0.0, 1.0)).all():
        raise ValidationError("mask must be binary (only 0 and 1)")
    if frame.shape != frame_hat.shape or frame.shape[:2] != m.shape[:2]:
        raise DimensionError(
            f"shape mismatch: f {frame.shape}, f_hat {frame_hat.shape}, mask {m.shape}"
        )
    ft = torch.from_numpy(np.ascontiguousarray(frame, dtype=np.float64)).permute(2, 0, 1)[None]
    ht = torch.from_numpy(np.ascontiguousarray(frame_hat, dtype=np.float64)).permute(2, 0, 1)[None]
    mt = torch.from_numpy(np.ascontiguousarray(m, dtype=np.float64)).permute(2, 0, 1)[None]
    return float(masked_l1_t(ft, ht, mt))


class ContentVae(nn.Module):
    def __init__(self, cfg: ContentVaeConfig):
        super().__init__()
        self.cfg = cfg
        c = cfg.base_channels
        feat = 4 * c * (cfg.height // 8) * (cfg.width // 8)
        self.encoder = nn.Sequential(
            nn.Conv2d(3, c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.Conv2d(c, 2 * c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.Conv2d(2 * c, 4 * c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.Flatten(),
        )
        self.fc_mu = nn.Linear(feat, cfg.latent_dim)
        self.fc_logvar = nn.Linear(feat, cfg.latent_dim)
        self.decoder = nn.Sequential(
            nn.Linear(cfg.latent_dim, feat),
            nn.Unflatten(1, (4 * c, cfg.height // 8, cfg.width // 8)),
            nn.ConvTranspose2d(4 * c, 2 * c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.ConvTranspose2d(2 * c, c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.ConvTranspose2d(c, 3, 4, 2, 1), nn.Sigmoid(),
        )

    def encode(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        h = self.encoder(x)
        return self.fc_mu(h), self.fc_logvar(h)

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        return self.decoder(z)


def _check_frame_shape(model: ContentVae, frame: np.ndarray) -> np.ndarray:
    arr = np.asarray(frame, dtype=np.float32)
    if arr.shape != (model.cfg.height, model.cfg.width, 3):
        raise DimensionError(
            f"frame shape {arr.shape} does not match trained config "
            f"({model.cfg.height}, {model.cfg.width}, 3)"
        )
    return arr


def encode_content(model: ContentVae, f: np.ndarray) -> tuple[LatentCode, LatentCode]:
    arr = _check_frame_shape(model, f)
    model.eval()
    with torch.no_grad():
        mu, logvar = model.encode(torch.from_numpy(arr).permute(2, 0, 1)[None])
    return (
        LatentCode(mu[0].numpy(), "content"),
        LatentCode(logvar[0].numpy(), "content"),
    )


def decode_content(model: ContentVae, sample: LatentCode) -> np.ndarray:
    if len(sample) != model.cfg.latent_dim:
        raise DimensionError(
            f"latent length {len(sample)} does not match config {model.cfg.latent_dim}"
        )
    model.eval()
    with torch.no_grad():
        out = model.decode(torch.from_numpy(sample.values)[None])
    return out[0].permute(1, 2, 0).numpy()


def train_content_vae(
    frames: np.ndarray, masks: np.ndarray, cfg: ContentVaeConfig
) -> tuple[ContentVae, list[dict]]:
    """Train on (N,H,W,3) frames with matching (N,H,W,1) binary masks."""
    f = np.asarray(frames, dtype=np.float32)
    m = np.asarray(masks, dtype=np.float32)
    if f.ndim != 4 or f.shape[3] != 3:
        raise DimensionError(f"expected (N,H,W,3) frames, got {f.shape}")
    if m.shape != f.shape[:3] + (1,):
        raise DimensionError(f"masks {m.shape} do not match frames {f.shape}")
    data = torch.from_numpy(f).permute(0, 3, 1, 2).contiguous()
    mask_t = torch.from_numpy(m).permute(0, 3, 1, 2).contiguous()
    set_torch_seed(cfg.seed)
    model = ContentVae(cfg)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    rng = seeded_rng(cfg.seed, 0x43)
    gen = seeded_torch_generator(cfg.seed + 1)
    history = []
    for step in range(cfg.steps):
        idx = torch.from_numpy(rng.integers(0, data.shape[0], size=min(cfg.batch_size, data.shape[0])))
        batch, bmask = data[idx], mask_t[idx]
        mu, logvar = model.encode(batch)
        noise = torch.randn(mu.shape, generator=gen)
        z = mu + noise * (0.5 * logvar).exp()
        recon = model.decode(z)
        l_cw = masked_l1_t(batch, recon, bmask)
        kl = kl_divergence(mu, logvar)
        loss = l_cw + cfg.kl_weight * kl
        opt.zero_grad()
        loss.backward()
        opt.step()
        history.append(
            {
                "step": step,
                "loss": check_finite_loss(loss, step),
                "l_cw": float(l_cw.detach()),
                "kl": float(kl.detach()),
            }
        )
    model.eval()
    return model, history


def masked_reconstruction_loss(model: ContentVae, frame: np.ndarray, mask: np.ndarray) -> float:
    """L_CW of the posterior-mean reconstruction of one frame."""
    arr = _check_frame_shape(model, frame)
    model.eval()
    with torch.no_grad():
        x = torch.from_numpy(arr).permute(2, 0, 1)[None]
        mu, _ = model.encode(x)
        recon = model.decode(mu)
    return content_weighted_loss(arr, recon[0].permute(1, 2, 0).numpy(), mask)


def save_content_vae(model: ContentVae, step: int, prefix) -> Checkpoint:
    return save_checkpoint("content_vae", model, model.cfg, step, prefix)


def load_content_vae(prefix) -> ContentVae:
    ckpt = load_checkpoint(prefix, "content_vae")
    model = ContentVae(ContentVaeConfig(**ckpt.config))
    model.load_state_dict(ckpt.state_dict())
    model.eval()
    return model
