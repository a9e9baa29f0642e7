"""Motion VAE: 3D-conv encoder/decoder over binary motion-reference videos.

The reconstruction objective is a weighted L1 with two per-pixel weight
terms: balance weights that equalize the total mass of foreground and
background pixels, and difference weights that boost pixels that changed
between consecutive frames so slow motion cannot be ignored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .checkpoints import Checkpoint, load_checkpoint, save_checkpoint
from .core import LatentCode, seeded_rng, seeded_torch_generator
from .errors import DimensionError, NumericError, ValidationError
from .trainutil import check_finite_loss, sample_batch, set_torch_seed


@dataclass
class MotionVaeConfig:
    latent_dim: int = 128
    epsilon: float = 1.0  # pixel-count units, keeps weights nonzero on empty masks
    lambda_scale: float = 2.0  # lambda = lambda_scale * W_fg
    lambda_override: float | None = None  # fixed lambda instead of the rule
    binarize_threshold: float = 0.5
    kl_weight: float = 1e-3
    base_channels: int = 16
    n: int = 16
    height: int = 64
    width: int = 64
    steps: int = 2000
    batch_size: int = 8
    lr: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValidationError("epsilon must be > 0")
        if not (0.0 < self.binarize_threshold < 1.0):
            raise ValidationError("binarize_threshold must be in (0,1)")
        if self.kl_weight < 0:
            raise ValidationError("kl_weight must be >= 0")
        if self.latent_dim < 1:
            raise ValidationError("latent_dim must be >= 1")
        if self.n % 8 or self.height % 8 or self.width % 8:
            raise ValidationError("n, height, width must be divisible by 8")


# ---------------------------------------------------------------------------
# Weight and loss computation (torch core; numpy wrappers below).
# Tensors are (B, n, H, W) binary unless noted.
# ---------------------------------------------------------------------------

def balance_weights_t(
    m: torch.Tensor, m_hat_bin: torch.Tensor, eps: float
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Per-sample scalar weights (w_fg, w_bg) and the full weight matrix.

    Foreground is the union of original and reconstructed foreground; the two
    scalars are chosen so both pixel sets carry (near-)equal total weight.
    """
    b = m.shape[0]
    total = float(m[0].numel())
    n_m = m.reshape(b, -1).sum(dim=1)
    n_hat = m_hat_bin.reshape(b, -1).sum(dim=1)
    w_bg = (n_m + n_hat + eps) / (2.0 * total)
    w_fg = (2.0 * total - n_m - n_hat + eps) / (2.0 * total)
    m_fg = torch.maximum(m, m_hat_bin)
    w = torch.where(m_fg > 0.5, w_fg.view(b, 1, 1, 1), w_bg.view(b, 1, 1, 1))
    return w_fg, w_bg, w


def diff_weights_t(m: torch.Tensor, lam: torch.Tensor | float) -> torch.Tensor:
    """XOR of consecutive frames scaled by lambda; first frame stays zero."""
    diff = torch.zeros_like(m)
    if m.shape[1] > 1:
        diff[:, 1:] = (m[:, 1:] != m[:, :-1]).to(m.dtype)
    if torch.is_tensor(lam):
        lam = lam.view(-1, 1, 1, 1)
    return diff * lam


def combined_weights_t(m: torch.Tensor, m_hat_raw: torch.Tensor, cfg: MotionVaeConfig, eps: float | None = None) -> torch.Tensor:
    """W + W_diff, computed without gradient (weights act as constants)."""
    eps = cfg.epsilon if eps is None else eps
    with torch.no_grad():
        m_hat_bin = (m_hat_raw > cfg.binarize_threshold).to(m.dtype)
        w_fg, _, w = balance_weights_t(m, m_hat_bin, eps)
        lam = cfg.lambda_override if cfg.lambda_override is not None else cfg.lambda_scale * w_fg
        return w + diff_weights_t(m, lam)


def motion_weighted_loss_t(
    m: torch.Tensor,
    m_hat_raw: torch.Tensor,
    cfg: MotionVaeConfig,
    weights: torch.Tensor | None = None,
) -> torch.Tensor:
    """Mean(|M - M_hat| * (W + W_diff)); gradients flow only through M_hat."""
    if m.shape != m_hat_raw.shape:
        raise DimensionError(f"shape mismatch: {tuple(m.shape)} vs {tuple(m_hat_raw.shape)}")
    if weights is None:
        weights = combined_weights_t(m, m_hat_raw, cfg)
    return ((m - m_hat_raw).abs() * weights).mean()


# ---------------------------------------------------------------------------
# Numpy-facing API for single videos: (n,H,W) or (n,H,W,1) arrays.
# ---------------------------------------------------------------------------

def _as_nhw(arr, name: str, binary: bool) -> np.ndarray:
    out = np.asarray(arr)
    if out.ndim == 4 and out.shape[3] == 1:
        out = out[:, :, :, 0]
    if out.ndim != 3:
        raise DimensionError(f"{name} must be (n,H,W) or (n,H,W,1), got {np.asarray(arr).shape}")
    if not np.isfinite(out).all():
        raise NumericError(f"{name} contains NaN or Inf")
    if binary and not np.isin(out, (0.0, 1.0)).all():
        raise ValidationError(f"{name} must be binary (only 0 and 1)")
    return out


def compute_balance_weights(M, M_hat, eps: float = 1.0) -> tuple[float, float, np.ndarray]:
    m = _as_nhw(M, "M", binary=True)
    m_hat = _as_nhw(M_hat, "M_hat", binary=True)
    if m.shape != m_hat.shape:
        raise DimensionError(f"shape mismatch: {m.shape} vs {m_hat.shape}")
    w_fg, w_bg, w = balance_weights_t(
        torch.from_numpy(np.ascontiguousarray(m, dtype=np.float64))[None],
        torch.from_numpy(np.ascontiguousarray(m_hat, dtype=np.float64))[None],
        eps,
    )
    return float(w_fg[0]), float(w_bg[0]), w[0].numpy()


def compute_diff_weights(M, lam: float) -> np.ndarray:
    m = _as_nhw(M, "M", binary=True)
    out = diff_weights_t(torch.from_numpy(np.ascontiguousarray(m, dtype=np.float64))[None], float(lam))
    return out[0].numpy()


def motion_weighted_loss(
    M, M_hat_raw, cfg: MotionVaeConfig | None = None, weights=None
) -> float:
    """Scalar loss on one video pair; `weights` overrides the computed matrix
    (test hook for uniform weights and frozen-weight gradient checks)."""
    cfg = cfg or MotionVaeConfig()
    m = _as_nhw(M, "M", binary=True)
    m_hat = _as_nhw(M_hat_raw, "M_hat_raw", binary=False)
    mt = torch.from_numpy(np.ascontiguousarray(m, dtype=np.float64))[None]
    ht = torch.from_numpy(np.ascontiguousarray(m_hat, dtype=np.float64))[None]
    wt = None
    if weights is not None:
        wt = torch.from_numpy(np.ascontiguousarray(_as_nhw(weights, "weights", binary=False), dtype=np.float64))[None]
    return float(motion_weighted_loss_t(mt, ht, cfg, weights=wt))


def compute_loss_weights(M, M_hat_raw, cfg: MotionVaeConfig | None = None, eps: float | None = None) -> np.ndarray:
    """The full weight matrix W + W_diff used by the loss, as (n,H,W)."""
    cfg = cfg or MotionVaeConfig()
    m = _as_nhw(M, "M", binary=True)
    m_hat = _as_nhw(M_hat_raw, "M_hat_raw", binary=False)
    out = combined_weights_t(
        torch.from_numpy(np.ascontiguousarray(m, dtype=np.float64))[None],
        torch.from_numpy(np.ascontiguousarray(m_hat, dtype=np.float64))[None],
        cfg,
        eps=eps,
    )
    return out[0].numpy()


# ---------------------------------------------------------------------------
# Networks
# ---------------------------------------------------------------------------

class MotionVae(nn.Module):
    def __init__(self, cfg: MotionVaeConfig):
        super().__init__()
        self.cfg = cfg
        c = cfg.base_channels
        feat = 4 * c * (cfg.n // 8) * (cfg.height // 8) * (cfg.width // 8)
        self.encoder = nn.Sequential(
            nn.Conv3d(1, c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.Conv3d(c, 2 * c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.Conv3d(2 * c, 4 * c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.Flatten(),
        )
        self.fc_mu = nn.Linear(feat, cfg.latent_dim)
        self.fc_logvar = nn.Linear(feat, cfg.latent_dim)
        self.decoder = nn.Sequential(
            nn.Linear(cfg.latent_dim, feat),
            nn.Unflatten(1, (4 * c, cfg.n // 8, cfg.height // 8, cfg.width // 8)),
            nn.ConvTranspose3d(4 * c, 2 * c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.ConvTranspose3d(2 * c, c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.ConvTranspose3d(c, 1, 4, 2, 1), nn.Sigmoid(),
        )

    def encode(self, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        h = self.encoder(x)
        return self.fc_mu(h), self.fc_logvar(h)

    def decode(self, z: torch.Tensor) -> torch.Tensor:
        return self.decoder(z)

    def expected_shape(self) -> tuple[int, int, int]:
        return (self.cfg.n, self.cfg.height, self.cfg.width)


def _video_batch_to_tensor(videos: np.ndarray) -> torch.Tensor:
    """(N,n,H,W,1) -> (N,1,n,H,W)."""
    arr = np.asarray(videos, dtype=np.float32)
    if arr.ndim == 4:
        arr = arr[..., None]
    if arr.ndim != 5 or arr.shape[4] != 1:
        raise DimensionError(f"expected (N,n,H,W,1) motion videos, got {arr.shape}")
    return torch.from_numpy(arr).permute(0, 4, 1, 2, 3).contiguous()


def _check_video_shape(model: MotionVae, video: np.ndarray) -> np.ndarray:
    arr = np.asarray(video, dtype=np.float32)
    if arr.ndim == 4 and arr.shape[3] == 1:
        arr = arr[..., 0]
    if arr.shape != model.expected_shape():
        raise DimensionError(
            f"motion video shape {arr.shape} does not match trained config {model.expected_shape()}"
        )
    return arr


def encode_motion(model: MotionVae, M: np.ndarray) -> tuple[LatentCode, LatentCode]:
    arr = _check_video_shape(model, M)
    model.eval()
    with torch.no_grad():
        mu, logvar = model.encode(torch.from_numpy(arr)[None, None])
    return (
        LatentCode(mu[0].numpy(), "motion"),
        LatentCode(logvar[0].numpy(), "motion"),
    )


def decode_motion(model: MotionVae, sample: LatentCode) -> np.ndarray:
    if len(sample) != model.cfg.latent_dim:
        raise DimensionError(
            f"latent length {len(sample)} does not match config {model.cfg.latent_dim}"
        )
    model.eval()
    with torch.no_grad():
        out = model.decode(torch.from_numpy(sample.values)[None])
    n, h, w = model.expected_shape()
    return out[0, 0].numpy().reshape(n, h, w, 1)


def kl_divergence(mu: torch.Tensor, logvar: torch.Tensor) -> torch.Tensor:
    """KL(q || N(0,I)) per latent dimension, averaged over batch and dims.

    Normalizing per dim keeps the default weight genuinely small next to the
    weighted reconstruction terms; a summed KL at the same weight is strong
    enough to collapse the posterior on larger datasets.
    """
    return (-0.5 * (1 + logvar - mu.pow(2) - logvar.exp())).mean()


def train_motion_vae(
    videos: np.ndarray, cfg: MotionVaeConfig
) -> tuple[MotionVae, list[dict]]:
    """Train on a stack of binary motion videos (N,n,H,W,1)."""
    data = _video_batch_to_tensor(videos)
    if data.shape[0] < 1:
        raise ValidationError("need at least one training video")
    set_torch_seed(cfg.seed)
    model = MotionVae(cfg)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.lr)
    rng = seeded_rng(cfg.seed, 0x4D)
    gen = seeded_torch_generator(cfg.seed + 1)
    history = []
    for step in range(cfg.steps):
        batch = sample_batch(rng, data, cfg.batch_size)
        mu, logvar = model.encode(batch)
        noise = torch.randn(mu.shape, generator=gen)
        z = mu + noise * (0.5 * logvar).exp()
        recon = model.decode(z)
        l_mw = motion_weighted_loss_t(batch[:, 0], recon[:, 0], cfg)
        kl = kl_divergence(mu, logvar)
        loss = l_mw + cfg.kl_weight * kl
        opt.zero_grad()
        loss.backward()
        opt.step()
        history.append(
            {
                "step": step,
                "loss": check_finite_loss(loss, step),
                "l_mw": float(l_mw.detach()),
                "kl": float(kl.detach()),
            }
        )
    model.eval()
    return model, history


def reconstruction_loss(model: MotionVae, video: np.ndarray) -> float:
    """L_MW of the deterministic (posterior-mean) reconstruction of one video."""
    arr = _check_video_shape(model, video)
    model.eval()
    with torch.no_grad():
        x = torch.from_numpy(arr)[None, None]
        mu, _ = model.encode(x)
        recon = model.decode(mu)
        return float(motion_weighted_loss_t(x[:, 0], recon[:, 0], model.cfg))


def save_motion_vae(model: MotionVae, step: int, prefix) -> Checkpoint:
    return save_checkpoint("motion_vae", model, model.cfg, step, prefix)


def load_motion_vae(prefix) -> MotionVae:
    ckpt = load_checkpoint(prefix, "motion_vae")
    model = MotionVae(MotionVaeConfig(**ckpt.config))
    model.load_state_dict(ckpt.state_dict())
    model.eval()
    return model
