"""Two-stage generator: a latent-to-video decoder trained on reconstruction,
and a residual refiner conditioned on a noise vector that the adversarial
stage trains for quality and diversity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .checkpoints import Checkpoint, load_checkpoint, save_checkpoint
from .content_vae import ContentVae, encode_content, load_content_vae
from .core import (
    BoxTrackSet,
    LatentCode,
    seeded_rng,
    seeded_torch_generator,
    tensor_to_video,
    validate_frame,
)
from .errors import DimensionError, FormatError, ValidationError
from .motion_vae import MotionVae, encode_motion, load_motion_vae
from .preprocess import rasterize_tracks
from .trainutil import check_finite_loss, set_torch_seed


@dataclass
class GeneratorConfig:
    motion_latent_dim: int = 128
    content_latent_dim: int = 128
    noise_dim: int = 64
    base_channels: int = 16
    noise_channels: int = 4  # z is broadcast spatially as this many channels
    n: int = 16
    height: int = 64
    width: int = 64
    steps: int = 2500
    batch_size: int = 8
    lr: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if min(self.motion_latent_dim, self.content_latent_dim, self.noise_dim) < 1:
            raise ValidationError("latent dims must be >= 1")
        if self.n % 8 or self.height % 8 or self.width % 8:
            raise ValidationError("n, height, width must be divisible by 8")


class VideoDecoder(nn.Module):
    """Maps concatenated motion+content latents to a rough (n,H,W,3) video."""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        self.cfg = cfg
        c = cfg.base_channels
        feat = 4 * c * (cfg.n // 8) * (cfg.height // 8) * (cfg.width // 8)
        self.net = nn.Sequential(
            nn.Linear(cfg.motion_latent_dim + cfg.content_latent_dim, feat),
            nn.Unflatten(1, (4 * c, cfg.n // 8, cfg.height // 8, cfg.width // 8)),
            nn.ConvTranspose3d(4 * c, 2 * c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.ConvTranspose3d(2 * c, c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.ConvTranspose3d(c, 3, 4, 2, 1), nn.Sigmoid(),
        )

    def forward(self, latents: torch.Tensor) -> torch.Tensor:
        return self.net(latents)


class SuperResolver(nn.Module):
    """Residual video refiner; the last conv is zero-initialized so an
    untrained refiner is the identity and stage 2 starts from the stage-1
    solution. z enters as per-frame spatially-broadcast channels."""

    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        self.cfg = cfg
        c = cfg.base_channels
        self.z_proj = nn.Linear(cfg.noise_dim, cfg.noise_channels)
        self.body = nn.Sequential(
            nn.Conv3d(3 + cfg.noise_channels, c, 3, 1, 1), nn.ReLU(inplace=True),
            nn.Conv3d(c, c, 3, 1, 1), nn.ReLU(inplace=True),
        )
        self.head = nn.Conv3d(c, 3, 3, 1, 1)
        nn.init.zeros_(self.head.weight)
        nn.init.zeros_(self.head.bias)

    def forward(self, video: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        b, _, n, h, w = video.shape
        zc = self.z_proj(z).view(b, -1, 1, 1, 1).expand(b, self.cfg.noise_channels, n, h, w)
        residual = self.head(self.body(torch.cat([video, zc], dim=1)))
        return (video + residual).clamp(0.0, 1.0)


def decoder_reconstruction_loss_t(v_hat: torch.Tensor, v: torch.Tensor) -> torch.Tensor:
    if v_hat.shape != v.shape:
        raise DimensionError(f"shape mismatch: {tuple(v_hat.shape)} vs {tuple(v.shape)}")
    return (v_hat - v).abs().mean()


def decoder_reconstruction_loss(v_hat: np.ndarray, v: np.ndarray) -> float:
    """Plain mean absolute error over all elements."""
    a = np.asarray(v_hat, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).mean())


def _latents_to_tensor(motion: LatentCode, content: LatentCode, cfg: GeneratorConfig) -> torch.Tensor:
    if motion.kind != "motion" or content.kind != "content":
        raise ValidationError("decode_video needs one motion latent and one content latent")
    if len(motion) != cfg.motion_latent_dim or len(content) != cfg.content_latent_dim:
        raise DimensionError(
            f"latent dims ({len(motion)}, {len(content)}) do not match config "
            f"({cfg.motion_latent_dim}, {cfg.content_latent_dim})"
        )
    return torch.from_numpy(np.concatenate([motion.values, content.values]))[None]


def decode_video(decoder: VideoDecoder, motion: LatentCode, content: LatentCode) -> np.ndarray:
    decoder.eval()
    with torch.no_grad():
        out = decoder(_latents_to_tensor(motion, content, decoder.cfg))
    return tensor_to_video(out)


def super_resolve(sr: SuperResolver, v_hat: np.ndarray, z: LatentCode) -> np.ndarray:
    if z.kind != "noise":
        raise ValidationError("super_resolve expects a noise latent")
    if len(z) != sr.cfg.noise_dim:
        raise DimensionError(f"noise dim {len(z)} does not match config {sr.cfg.noise_dim}")
    arr = np.asarray(v_hat, dtype=np.float32)
    expected = (sr.cfg.n, sr.cfg.height, sr.cfg.width, 3)
    if arr.shape != expected:
        raise DimensionError(f"video shape {arr.shape} does not match config {expected}")
    sr.eval()
    with torch.no_grad():
        vt = torch.from_numpy(arr).permute(3, 0, 1, 2)[None]
        out = sr(vt, torch.from_numpy(z.values)[None])
    return tensor_to_video(out)


# ---------------------------------------------------------------------------
# Stage-1 training
# ---------------------------------------------------------------------------

def episode_latents(
    motion_model: MotionVae, content_model: ContentVae, video: np.ndarray, motion: np.ndarray
) -> np.ndarray:
    """Posterior-mean motion+content latents for one episode (concatenated)."""
    m_mu, _ = encode_motion(motion_model, motion)
    c_mu, _ = encode_content(content_model, video[0])
    return np.concatenate([m_mu.values, c_mu.values])


def train_decoder(
    episodes: list[tuple[np.ndarray, np.ndarray]],
    motion_model: MotionVae,
    content_model: ContentVae,
    cfg: GeneratorConfig,
) -> tuple[VideoDecoder, list[dict]]:
    """Fit the decoder on (video, motion-reference) pairs with frozen VAEs.

    Latents are posterior means, precomputed once since the encoders are
    deterministic and frozen.
    """
    if not episodes:
        raise ValidationError("need at least one training episode")
    if motion_model.cfg.latent_dim != cfg.motion_latent_dim:
        raise ValidationError(
            f"motion VAE latent dim {motion_model.cfg.latent_dim} does not match "
            f"generator config {cfg.motion_latent_dim}"
        )
    if content_model.cfg.latent_dim != cfg.content_latent_dim:
        raise ValidationError(
            f"content VAE latent dim {content_model.cfg.latent_dim} does not match "
            f"generator config {cfg.content_latent_dim}"
        )
    lat = np.stack([episode_latents(motion_model, content_model, v, m) for v, m in episodes])
    vids = np.stack([np.asarray(v, dtype=np.float32) for v, _ in episodes])
    latents = torch.from_numpy(lat.astype(np.float32))
    targets = torch.from_numpy(vids).permute(0, 4, 1, 2, 3).contiguous()

    set_torch_seed(cfg.seed)
    decoder = VideoDecoder(cfg)
    opt = torch.optim.Adam(decoder.parameters(), lr=cfg.lr)
    rng = seeded_rng(cfg.seed, 0x44)
    history = []
    for step in range(cfg.steps):
        idx = torch.from_numpy(rng.integers(0, latents.shape[0], size=min(cfg.batch_size, latents.shape[0])))
        recon = decoder(latents[idx])
        loss = decoder_reconstruction_loss_t(recon, targets[idx])
        opt.zero_grad()
        loss.backward()
        opt.step()
        history.append({"step": step, "loss": check_finite_loss(loss, step)})
    decoder.eval()
    return decoder, history


def save_decoder(model: VideoDecoder, step: int, prefix) -> Checkpoint:
    return save_checkpoint("decoder", model, model.cfg, step, prefix)


def load_decoder(prefix) -> VideoDecoder:
    ckpt = load_checkpoint(prefix, "decoder")
    model = VideoDecoder(GeneratorConfig(**ckpt.config))
    model.load_state_dict(ckpt.state_dict())
    model.eval()
    return model


def save_sr(model: SuperResolver, step: int, prefix) -> Checkpoint:
    return save_checkpoint("sr", model, model.cfg, step, prefix)


def load_sr(prefix) -> SuperResolver:
    ckpt = load_checkpoint(prefix, "sr")
    model = SuperResolver(GeneratorConfig(**ckpt.config))
    model.load_state_dict(ckpt.state_dict())
    model.eval()
    return model


# ---------------------------------------------------------------------------
# Full-pipeline bundle
# ---------------------------------------------------------------------------

class GeneratorBundle:
    """Everything needed for end-to-end generation, loadable from one directory."""

    def __init__(
        self,
        motion_model: MotionVae,
        content_model: ContentVae,
        decoder: VideoDecoder,
        sr: SuperResolver,
        trained_steps: int = 0,
    ):
        self.motion_model = motion_model
        self.content_model = content_model
        self.decoder = decoder
        self.sr = sr
        self.trained_steps = trained_steps
        self.cfg = decoder.cfg

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.cfg.n, self.cfg.height, self.cfg.width)

    def save(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        from .motion_vae import save_motion_vae
        from .content_vae import save_content_vae

        save_motion_vae(self.motion_model, self.trained_steps, out / "motion_vae")
        save_content_vae(self.content_model, self.trained_steps, out / "content_vae")
        save_decoder(self.decoder, self.trained_steps, out / "decoder")
        save_sr(self.sr, self.trained_steps, out / "sr")
        bundle = {
            "n": self.cfg.n,
            "h": self.cfg.height,
            "w": self.cfg.width,
            "trained_steps": self.trained_steps,
        }
        (out / "bundle.json").write_text(json.dumps(bundle, indent=2) + "\n")

    @classmethod
    def load(cls, bundle_dir) -> "GeneratorBundle":
        root = Path(bundle_dir)
        meta_path = root / "bundle.json"
        if not meta_path.is_file():
            raise FormatError(f"no bundle.json under {root}")
        meta = json.loads(meta_path.read_text())
        return cls(
            motion_model=load_motion_vae(root / "motion_vae"),
            content_model=load_content_vae(root / "content_vae"),
            decoder=load_decoder(root / "decoder"),
            sr=load_sr(root / "sr"),
            trained_steps=meta.get("trained_steps", 0),
        )

    def sample_latents(self, seed: int) -> tuple[LatentCode, LatentCode, LatentCode]:
        """Normal-distribution latents for unconditional generation; the draw
        order (motion, content, noise) is part of the determinism contract."""
        gen = seeded_torch_generator(seed)
        motion = torch.randn(self.cfg.motion_latent_dim, generator=gen)
        content = torch.randn(self.cfg.content_latent_dim, generator=gen)
        z = torch.randn(self.cfg.noise_dim, generator=gen)
        return (
            LatentCode(motion.numpy(), "motion"),
            LatentCode(content.numpy(), "content"),
            LatentCode(z.numpy(), "noise"),
        )

    def generate(
        self,
        content_frame: np.ndarray | None = None,
        tracks: BoxTrackSet | None = None,
        seed: int = 0,
        mode: str = "controlled",
    ) -> np.ndarray:
        """Produce one (n,H,W,3) video.

        controlled: encode the given content frame and rasterized tracks;
        only the refiner noise is sampled from the seed.
        unconditional: all latents drawn from a standard normal.
        """
        n, h, w = self.shape
        if mode == "controlled":
            if content_frame is None or tracks is None:
                raise ValidationError("controlled mode requires content_frame and tracks")
            frame = validate_frame(content_frame, channels=3)
            if tracks.num_frames != n:
                raise ValidationError(
                    f"tracks.num_frames={tracks.num_frames} does not match model n={n}"
                )
            motion_video = rasterize_tracks(tracks, n, h, w)
            motion_mu, _ = encode_motion(self.motion_model, motion_video)
            content_mu, _ = encode_content(self.content_model, frame)
            gen = seeded_torch_generator(seed)
            z = LatentCode(torch.randn(self.cfg.noise_dim, generator=gen).numpy(), "noise")
        elif mode == "unconditional":
            motion_mu, content_mu, z = self.sample_latents(seed)
        else:
            raise ValidationError(f"mode must be controlled|unconditional, got {mode!r}")
        rough = decode_video(self.decoder, motion_mu, content_mu)
        return super_resolve(self.sr, rough, z)
