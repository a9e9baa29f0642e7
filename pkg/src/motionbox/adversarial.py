"""Stage-2 adversarial training: video critic with a gradient penalty.

The critic scores whole videos (no sigmoid); its loss is the Wasserstein
surrogate E[f(fake)] - E[f(real)] plus gp_weight * E[(||grad f(x~)|| - 1)^2]
on random interpolates. Both the decoder and the refiner receive generator
gradients; fakes are built from normal-sampled latents.
"""

from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .checkpoints import Checkpoint, load_checkpoint, save_checkpoint
from .core import seeded_rng, seeded_torch_generator
from .errors import CapabilityError, DimensionError, TrainingError, ValidationError
from .generator import SuperResolver, VideoDecoder
from .trainutil import set_torch_seed


@dataclass
class CriticConfig:
    base_channels: int = 16
    gp_weight: float = 10.0
    critic_steps: int = 5
    lr_critic: float = 1e-4
    lr_gen: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.9
    batch_size: int = 4
    steps: int = 200
    seed: int = 0
    # Fraction of each fake batch built from encoder-derived latents instead
    # of sampled ones (0 = sampled-only).
    encoder_latent_ratio: float = 0.0
    n: int = 16
    height: int = 64
    width: int = 64

    def __post_init__(self):
        if self.gp_weight < 0:
            raise ValidationError("gp_weight must be >= 0")
        if self.critic_steps < 1:
            raise ValidationError("critic_steps must be >= 1")
        if not (0.0 <= self.encoder_latent_ratio <= 1.0):
            raise ValidationError("encoder_latent_ratio must be in [0,1]")


class VideoCritic(nn.Module):
    """3D-conv critic; no normalization layers (gradient penalty convention)."""

    def __init__(self, cfg: CriticConfig):
        super().__init__()
        self.cfg = cfg
        c = cfg.base_channels
        feat = 4 * c * (cfg.n // 8) * (cfg.height // 8) * (cfg.width // 8)
        self.net = nn.Sequential(
            nn.Conv3d(3, c, 4, 2, 1), nn.LeakyReLU(0.2, inplace=True),
            nn.Conv3d(c, 2 * c, 4, 2, 1), nn.LeakyReLU(0.2, inplace=True),
            nn.Conv3d(2 * c, 4 * c, 4, 2, 1), nn.LeakyReLU(0.2, inplace=True),
            nn.Flatten(),
            nn.Linear(feat, 1),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x).squeeze(1)


def critic_score(critic: VideoCritic, v: np.ndarray):
    """Scalar score for one (n,H,W,3) video, or an array for a (B,...) batch."""
    arr = np.asarray(v, dtype=np.float32)
    single = arr.ndim == 4
    if single:
        arr = arr[None]
    if arr.ndim != 5 or arr.shape[4] != 3:
        raise DimensionError(f"expected (n,H,W,3) or (B,n,H,W,3), got {np.asarray(v).shape}")
    expected = (critic.cfg.n, critic.cfg.height, critic.cfg.width, 3)
    if arr.shape[1:] != expected:
        raise DimensionError(f"video shape {arr.shape[1:]} does not match critic config {expected}")
    critic.eval()
    with torch.no_grad():
        scores = critic(torch.from_numpy(arr).permute(0, 4, 1, 2, 3).contiguous())
    out = scores.numpy().astype(np.float64)
    return float(out[0]) if single else out


def gradient_penalty_t(
    critic_fn,
    real: torch.Tensor,
    fake: torch.Tensor,
    gen: torch.Generator | None = None,
    create_graph: bool = True,
) -> torch.Tensor:
    """E[(||grad critic(x~)||_2 - 1)^2] over x~ = u*real + (1-u)*fake."""
    if real.shape != fake.shape:
        raise DimensionError(f"real {tuple(real.shape)} and fake {tuple(fake.shape)} shapes disagree")
    b = real.shape[0]
    u = torch.rand(b, generator=gen, dtype=real.dtype)
    u = u.view(b, *([1] * (real.dim() - 1)))
    x = (u * real + (1.0 - u) * fake).detach().requires_grad_(True)
    scores = critic_fn(x)
    try:
        grads = torch.autograd.grad(scores.sum(), x, create_graph=create_graph)[0]
    except RuntimeError as exc:
        raise CapabilityError(f"critic is not differentiable: {exc}") from exc
    norms = grads.reshape(b, -1).norm(2, dim=1)
    return ((norms - 1.0) ** 2).mean()


def gradient_penalty(critic_fn, real: np.ndarray, fake: np.ndarray, seed: int = 0) -> float:
    """Numpy-facing wrapper over (B,n,H,W,C) batches; critic_fn may be a
    VideoCritic or any differentiable callable mapping (B,C,n,H,W) -> (B,)."""
    r = np.asarray(real, dtype=np.float64)
    f = np.asarray(fake, dtype=np.float64)
    if r.ndim != 5:
        raise DimensionError(f"expected (B,n,H,W,C) batches, got {r.shape}")
    rt = torch.from_numpy(r).permute(0, 4, 1, 2, 3).contiguous()
    ft = torch.from_numpy(f).permute(0, 4, 1, 2, 3).contiguous()
    fn = critic_fn
    if isinstance(critic_fn, VideoCritic):
        model = critic_fn.double()
        fn = model
    out = gradient_penalty_t(fn, rt, ft, gen=seeded_torch_generator(seed), create_graph=False)
    if isinstance(critic_fn, VideoCritic):
        critic_fn.float()
    return float(out)


class GanTrainer:
    """Alternating WGAN-GP driver over (decoder, refiner) vs critic."""

    def __init__(
        self,
        videos: np.ndarray,
        decoder: VideoDecoder,
        sr: SuperResolver,
        cfg: CriticConfig,
        encoder_latents: np.ndarray | None = None,
    ):
        data = np.asarray(videos, dtype=np.float32)
        if data.ndim != 5 or data.shape[4] != 3:
            raise DimensionError(f"expected (N,n,H,W,3) videos, got {data.shape}")
        self.cfg = cfg
        self.gcfg = decoder.cfg
        self.real = torch.from_numpy(data).permute(0, 4, 1, 2, 3).contiguous()
        self.decoder = decoder
        self.sr = sr
        set_torch_seed(cfg.seed)
        self.critic = VideoCritic(cfg)
        betas = (cfg.beta1, cfg.beta2)
        self.opt_critic = torch.optim.Adam(self.critic.parameters(), lr=cfg.lr_critic, betas=betas)
        self.opt_gen = torch.optim.Adam(
            list(decoder.parameters()) + list(sr.parameters()), lr=cfg.lr_gen, betas=betas
        )
        self.rng = seeded_rng(cfg.seed, 0x47)
        self.torch_gen = seeded_torch_generator(cfg.seed + 2)
        self.encoder_latents = (
            None if encoder_latents is None else torch.from_numpy(np.asarray(encoder_latents, dtype=np.float32))
        )

    def _real_batch(self) -> torch.Tensor:
        idx = torch.from_numpy(
            self.rng.integers(0, self.real.shape[0], size=min(self.cfg.batch_size, self.real.shape[0]))
        )
        return self.real[idx]

    def _fake_batch(self, batch_size: int) -> torch.Tensor:
        g = self.gcfg
        lat = torch.randn(batch_size, g.motion_latent_dim + g.content_latent_dim, generator=self.torch_gen)
        if self.encoder_latents is not None and self.cfg.encoder_latent_ratio > 0:
            k = int(round(self.cfg.encoder_latent_ratio * batch_size))
            if k > 0:
                pick = torch.from_numpy(self.rng.integers(0, self.encoder_latents.shape[0], size=k))
                lat[:k] = self.encoder_latents[pick]
        z = torch.randn(batch_size, g.noise_dim, generator=self.torch_gen)
        return self.sr(self.decoder(lat), z)

    def critic_step(self) -> dict:
        real = self._real_batch()
        with torch.no_grad():
            fake = self._fake_batch(real.shape[0])
        score_fake = self.critic(fake).mean()
        score_real = self.critic(real).mean()
        gp = gradient_penalty_t(self.critic, real, fake, gen=self.torch_gen)
        loss = score_fake - score_real + self.cfg.gp_weight * gp
        self.opt_critic.zero_grad()
        loss.backward()
        self.opt_critic.step()
        return {"critic_loss": float(loss.detach()), "gp": float(gp.detach())}

    def generator_step(self) -> dict:
        fake = self._fake_batch(self.cfg.batch_size)
        loss = -self.critic(fake).mean()
        self.opt_gen.zero_grad()
        loss.backward()
        self.opt_gen.step()
        return {"gen_loss": float(loss.detach())}

    def _snapshot(self) -> dict:
        return {
            "decoder": copy.deepcopy(self.decoder.state_dict()),
            "sr": copy.deepcopy(self.sr.state_dict()),
            "critic": copy.deepcopy(self.critic.state_dict()),
        }

    def _restore(self, snap: dict) -> None:
        self.decoder.load_state_dict(snap["decoder"])
        self.sr.load_state_dict(snap["sr"])
        self.critic.load_state_dict(snap["critic"])

    def run(self, snapshot_every: int = 10) -> list[dict]:
        """The alternating schedule: one critic update per step, one generator
        update every critic_steps-th step. On NaN the last snapshot is
        restored before raising, so the caller still holds usable weights.
        """
        history = []
        with torch.no_grad():
            last_gen_loss = float(-self.critic(self._fake_batch(self.cfg.batch_size)).mean())
        snap = self._snapshot()
        for step in range(self.cfg.steps):
            if step % snapshot_every == 0:
                snap = self._snapshot()
            row = self.critic_step()
            if (step + 1) % self.cfg.critic_steps == 0:
                row.update(self.generator_step())
                last_gen_loss = row["gen_loss"]
            else:
                row["gen_loss"] = last_gen_loss
            row["step"] = step
            history.append({k: row[k] for k in ("step", "critic_loss", "gen_loss", "gp")})
            if not all(np.isfinite(v) for k, v in row.items() if k != "step"):
                self._restore(snap)
                raise TrainingError("non-finite loss in adversarial stage", step=step)
        return history


def train_gan(
    videos: np.ndarray,
    decoder: VideoDecoder,
    sr: SuperResolver,
    cfg: CriticConfig,
    encoder_latents: np.ndarray | None = None,
) -> tuple[VideoCritic, list[dict]]:
    """Train decoder+refiner adversarially in place; returns the critic and
    the per-step loss history (step, critic_loss, gen_loss, gp)."""
    cfg = dataclasses.replace(cfg, n=decoder.cfg.n, height=decoder.cfg.height, width=decoder.cfg.width)
    trainer = GanTrainer(videos, decoder, sr, cfg, encoder_latents=encoder_latents)
    history = trainer.run()
    return trainer.critic, history


def save_critic(model: VideoCritic, step: int, prefix) -> Checkpoint:
    return save_checkpoint("critic", model, model.cfg, step, prefix)


def load_critic(prefix) -> VideoCritic:
    ckpt = load_checkpoint(prefix, "critic")
    model = VideoCritic(CriticConfig(**ckpt.config))
    model.load_state_dict(ckpt.state_dict())
    model.eval()
    return model
