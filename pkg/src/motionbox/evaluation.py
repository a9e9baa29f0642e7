"""Quantitative evaluation: FID with bootstrap confidence intervals and the
motion-adherence score (mean IoU between commanded and detected boxes).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment
import torch
from torch import nn

from .checkpoints import Checkpoint, load_checkpoint, save_checkpoint
from .core import BoxTrackSet, seeded_rng, validate_video
from .errors import CapabilityError, DimensionError, ValidationError
from .generator import GeneratorBundle
from .synth import DETECT_THRESHOLD, oracle_detect
from .trainutil import check_finite_loss, set_torch_seed

_FID_JITTER = 1e-6


def fid(features_a: np.ndarray, features_b: np.ndarray, jitter: float = _FID_JITTER) -> float:
    """Frechet distance between Gaussians fitted to two feature sets (N,d)."""
    a = np.asarray(features_a, dtype=np.float64)
    b = np.asarray(features_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise DimensionError(f"feature sets must be (N,d), got {a.shape} and {b.shape}")
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValidationError("feature sets must be non-empty")
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"feature dims disagree: {a.shape[1]} vs {b.shape[1]}")
    d = a.shape[1]
    for name, feats in (("a", a), ("b", b)):
        if feats.shape[0] < d + 1:
            warnings.warn(
                f"feature set {name} has {feats.shape[0]} samples for dim {d}; "
                "covariance is rank-deficient and will be regularized",
                stacklevel=2,
            )
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    cov_a = np.cov(a, rowvar=False) if a.shape[0] > 1 else np.zeros((d, d))
    cov_b = np.cov(b, rowvar=False) if b.shape[0] > 1 else np.zeros((d, d))
    cov_a = np.atleast_2d(cov_a) + jitter * np.eye(d)
    cov_b = np.atleast_2d(cov_b) + jitter * np.eye(d)
    sqrt_ab, _ = scipy.linalg.sqrtm(cov_a @ cov_b, disp=False)
    sqrt_ab = np.real(sqrt_ab)
    return float(np.sum((mu_a - mu_b) ** 2) + np.trace(cov_a + cov_b - 2.0 * sqrt_ab))


def bootstrap_ci(
    scores, resamples: int = 10000, level: float = 0.95, seed: int = 0
) -> tuple[float, float, float, float, float, float]:
    """Percentile bootstrap over resampled means.

    Returns (mean, variance, lo, hi, best, worst); best/worst are min/max
    since lower scores are better.
    """
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise ValidationError("scores must be non-empty")
    if not (0.0 < level < 1.0):
        raise ValidationError(f"level must be in (0,1), got {level}")
    if resamples < 100:
        raise ValidationError("resamples must be >= 100")
    rng = seeded_rng(seed, 0xB0)
    draws = rng.integers(0, arr.size, size=(resamples, arr.size))
    means = arr[draws].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    return (
        float(arr.mean()),
        float(arr.var()),
        float(lo),
        float(hi),
        float(arr.min()),
        float(arr.max()),
    )


def _frame_iou_total(detected: list, commanded: list) -> tuple[float, int]:
    """Hungarian-matched IoU sum over one frame's boxes."""
    if not commanded:
        return 0.0, 0
    if not detected:
        return 0.0, len(commanded)
    iou = np.zeros((len(commanded), len(detected)))
    for i, cb in enumerate(commanded):
        for j, db in enumerate(detected):
            iou[i, j] = cb.iou(db)
    rows, cols = linear_sum_assignment(-iou)
    return float(iou[rows, cols].sum()), len(commanded)


def motion_adherence(
    generated: np.ndarray,
    commanded: BoxTrackSet,
    bg: np.ndarray,
    tau: float = DETECT_THRESHOLD,
) -> float:
    """Mean IoU between commanded boxes and oracle detections, frame by frame.

    Unmatched commanded boxes count as IoU 0; a track set with no boxes at
    all scores 1.0 (nothing was commanded).
    """
    video = validate_video(generated, channels=3)
    if commanded.num_frames != video.shape[0]:
        raise ValidationError(
            f"commanded tracks cover {commanded.num_frames} frames, video has {video.shape[0]}"
        )
    detected = oracle_detect(video, bg, tau=tau)
    total, count = 0.0, 0
    for t in range(video.shape[0]):
        s, c = _frame_iou_total(detected.boxes_at(t), commanded.boxes_at(t))
        total += s
        count += c
    if count == 0:
        return 1.0
    return total / count


# ---------------------------------------------------------------------------
# Feature extractors
# ---------------------------------------------------------------------------

class FrameFeatureAE(nn.Module):
    """Small frame autoencoder whose encoder doubles as an offline feature
    extractor for FID (absolute values are extractor-relative)."""

    def __init__(self, height: int = 64, width: int = 64, base_channels: int = 8, dim: int = 32):
        super().__init__()
        if height % 8 or width % 8:
            raise ValidationError("feature AE needs H and W divisible by 8")
        self.height, self.width, self.base_channels, self.dim = height, width, base_channels, dim
        c = base_channels
        feat = 4 * c * (height // 8) * (width // 8)
        self.encoder = nn.Sequential(
            nn.Conv2d(3, c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.Conv2d(c, 2 * c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.Conv2d(2 * c, 4 * c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.Flatten(), nn.Linear(feat, dim),
        )
        self.decoder = nn.Sequential(
            nn.Linear(dim, feat), nn.Unflatten(1, (4 * c, height // 8, width // 8)),
            nn.ConvTranspose2d(4 * c, 2 * c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.ConvTranspose2d(2 * c, c, 4, 2, 1), nn.ReLU(inplace=True),
            nn.ConvTranspose2d(c, 3, 4, 2, 1), nn.Sigmoid(),
        )

    def forward(self, x):
        return self.decoder(self.encoder(x))


class TrainedAeExtractor:
    """frames (N,H,W,3) -> (N,dim) features from a trained frame AE."""

    name = "trained_ae_features"

    def __init__(self, model: FrameFeatureAE):
        self.model = model
        self.dim = model.dim

    def __call__(self, frames: np.ndarray) -> np.ndarray:
        arr = np.asarray(frames, dtype=np.float32)
        if arr.ndim != 4 or arr.shape[3] != 3:
            raise DimensionError(f"expected (N,H,W,3) frames, got {arr.shape}")
        self.model.eval()
        out = []
        with torch.no_grad():
            for start in range(0, arr.shape[0], 256):
                chunk = torch.from_numpy(arr[start : start + 256]).permute(0, 3, 1, 2)
                out.append(self.model.encoder(chunk).numpy())
        return np.concatenate(out).astype(np.float64)

    def save(self, prefix) -> Checkpoint:
        cfg = {
            "height": self.model.height,
            "width": self.model.width,
            "base_channels": self.model.base_channels,
            "dim": self.model.dim,
        }
        return save_checkpoint("feature_ae", self.model, cfg, 0, prefix)

    @classmethod
    def load(cls, prefix) -> "TrainedAeExtractor":
        ckpt = load_checkpoint(prefix, "feature_ae")
        model = FrameFeatureAE(**ckpt.config)
        model.load_state_dict(ckpt.state_dict())
        model.eval()
        return cls(model)


def train_feature_extractor(
    frames: np.ndarray, dim: int = 32, steps: int = 300, seed: int = 0, lr: float = 2e-3
) -> TrainedAeExtractor:
    arr = np.asarray(frames, dtype=np.float32)
    if arr.ndim != 4 or arr.shape[3] != 3:
        raise DimensionError(f"expected (N,H,W,3) frames, got {arr.shape}")
    set_torch_seed(seed)
    model = FrameFeatureAE(arr.shape[1], arr.shape[2], dim=dim)
    data = torch.from_numpy(arr).permute(0, 3, 1, 2).contiguous()
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    rng = seeded_rng(seed, 0xFE)
    for step in range(steps):
        idx = torch.from_numpy(rng.integers(0, data.shape[0], size=min(32, data.shape[0])))
        batch = data[idx]
        loss = (model(batch) - batch).abs().mean()
        opt.zero_grad()
        loss.backward()
        opt.step()
        check_finite_loss(loss, step)
    model.eval()
    return TrainedAeExtractor(model)


class PretrainedClassifierExtractor:
    """Inception-style features from a pretrained torchvision classifier.

    Needs torchvision plus downloadable weights; offline environments should
    use the trained-AE extractor instead.
    """

    name = "pretrained_classifier_features"

    def __init__(self):
        try:
            import torchvision.models as tvm

            weights = tvm.Inception_V3_Weights.DEFAULT
            self.model = tvm.inception_v3(weights=weights, aux_logits=True)
        except Exception as exc:  # pragma: no cover - depends on environment
            raise CapabilityError(
                "pretrained classifier features unavailable (torchvision weights "
                f"could not be loaded: {exc}); use trained_ae_features instead"
            ) from exc
        self.model.fc = nn.Identity()
        self.model.eval()
        self.dim = 2048

    def __call__(self, frames: np.ndarray) -> np.ndarray:  # pragma: no cover
        arr = np.asarray(frames, dtype=np.float32)
        t = torch.from_numpy(arr).permute(0, 3, 1, 2)
        t = torch.nn.functional.interpolate(t, size=(299, 299), mode="bilinear", align_corners=False)
        t = (t - 0.5) / 0.5
        with torch.no_grad():
            return self.model(t).numpy().astype(np.float64)


# ---------------------------------------------------------------------------
# Full protocol
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    scores: list[float]
    mean: float
    variance: float
    best: float
    worst: float
    ci: tuple[float, float]
    protocol: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.best <= self.mean <= self.worst):
            raise ValidationError("report invariant violated: best <= mean <= worst")

    def to_dict(self) -> dict:
        return {
            "scores": list(self.scores),
            "mean": self.mean,
            "variance": self.variance,
            "best": self.best,
            "worst": self.worst,
            "ci": list(self.ci),
            "protocol": dict(self.protocol),
        }


def video_frames(videos: list[np.ndarray]) -> np.ndarray:
    """Pool all frames of a set of videos into one (N,H,W,3) stack."""
    return np.concatenate([np.asarray(v, dtype=np.float32) for v in videos])


def evaluate_model(
    bundle: GeneratorBundle,
    protocol: dict,
    extractor,
    reference_videos: list[np.ndarray],
    seed: int = 0,
    resamples: int = 2000,
    level: float = 0.95,
) -> EvalReport:
    """Generate num_sets x videos_per_set unconditional videos and score each
    set's frame features against the reference set with FID."""
    num_sets = int(protocol.get("num_sets", 5))
    videos_per_set = int(protocol.get("videos_per_set", 50))
    if num_sets < 1 or videos_per_set < 1:
        raise ValidationError("protocol needs num_sets >= 1 and videos_per_set >= 1")
    if not reference_videos:
        raise ValidationError("need at least one reference video")
    ref_features = extractor(video_frames(reference_videos))
    scores = []
    for set_idx in range(num_sets):
        vids = []
        for vid_idx in range(videos_per_set):
            vid_seed = int(
                seeded_rng(seed, set_idx, vid_idx).integers(0, 2**31 - 1)
            )
            vids.append(bundle.generate(seed=vid_seed, mode="unconditional"))
        scores.append(fid(extractor(video_frames(vids)), ref_features))
    mean, variance, lo, hi, best, worst = bootstrap_ci(
        scores, resamples=resamples, level=level, seed=seed
    )
    return EvalReport(
        scores=scores,
        mean=mean,
        variance=variance,
        best=best,
        worst=worst,
        ci=(lo, hi),
        protocol={"num_sets": num_sets, "videos_per_set": videos_per_set, "mode": "unconditional"},
    )
