import numpy as np
import pytest
import torch

from motionbox.content_vae import content_weighted_loss, masked_l1_t
from motionbox.errors import DimensionError, ValidationError


def test_perfect_reconstruction_zero():
    rng = np.random.default_rng(0)
    f = rng.uniform(size=(8, 8, 3))
    mask = (rng.uniform(size=(8, 8, 1)) > 0.5).astype(np.float64)
    assert content_weighted_loss(f, f, mask) == 0.0


def test_all_zero_mask_unconstrained():
    rng = np.random.default_rng(1)
    f = rng.uniform(size=(8, 8, 3))
    fh = rng.uniform(size=(8, 8, 3))
    mask = np.zeros((8, 8, 1))
    assert content_weighted_loss(f, fh, mask) == 0.0


def test_hand_value_single_masked_pixel():
    # 2x2 single-channel frame, mask=1 at one pixel where |diff| = 0.8:
    # mean over all 4 pixels -> 0.2
    f = np.zeros((2, 2, 1))
    fh = np.zeros((2, 2, 1))
    fh[0, 0, 0] = 0.8
    mask = np.zeros((2, 2, 1))
    mask[0, 0, 0] = 1.0
    assert content_weighted_loss(f, fh, mask) == pytest.approx(0.2, abs=1e-9)


def test_mask_locality_exact():
    rng = np.random.default_rng(2)
    f = rng.uniform(size=(8, 8, 3))
    fh = rng.uniform(size=(8, 8, 3))
    mask = (rng.uniform(size=(8, 8, 1)) > 0.5).astype(np.float64)
    base = content_weighted_loss(f, fh, mask)
    for _ in range(100):
        perturbed = fh.copy()
        off = np.repeat(mask == 0, 3, axis=2)
        noise = rng.uniform(-1, 1, size=fh.shape)
        perturbed[off] = np.clip(fh[off] + noise[off], 0, 1)
        assert content_weighted_loss(f, perturbed, mask) == base


def test_loss_bounded_by_plain_l1():
    rng = np.random.default_rng(3)
    for _ in range(20):
        f = rng.uniform(size=(6, 6, 3))
        fh = rng.uniform(size=(6, 6, 3))
        mask = (rng.uniform(size=(6, 6, 1)) > rng.uniform()).astype(np.float64)
        assert content_weighted_loss(f, fh, mask) <= np.abs(f - fh).mean() + 1e-12


def test_non_binary_mask_rejected():
    f = np.zeros((4, 4, 3))
    mask = np.full((4, 4, 1), 0.5)
    with pytest.raises(ValidationError):
        content_weighted_loss(f, f, mask)


def test_shape_mismatch_rejected():
    f = np.zeros((4, 4, 3))
    with pytest.raises(DimensionError):
        content_weighted_loss(f, np.zeros((4, 4, 1)), np.zeros((4, 4, 1)))
    with pytest.raises(DimensionError):
        content_weighted_loss(f, f, np.zeros((8, 8, 1)))


def test_matches_brute_force_scalar_loop():
    rng = np.random.default_rng(4)
    for _ in range(10):
        f = rng.uniform(size=(4, 4, 3))
        fh = rng.uniform(size=(4, 4, 3))
        mask = (rng.uniform(size=(4, 4, 1)) > 0.5).astype(np.float64)
        acc = 0.0
        for i in range(4):
            for j in range(4):
                for c in range(3):
                    acc += abs(fh[i, j, c] - f[i, j, c]) * mask[i, j, 0]
        assert content_weighted_loss(f, fh, mask) == pytest.approx(acc / (4 * 4 * 3), abs=1e-12)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    f = rng.uniform(0.05, 0.95, size=(8, 8, 3))
    fh = rng.uniform(0.05, 0.95, size=(8, 8, 3))
    # keep |f - fh| away from 0 at masked pixels
    fh = np.where(np.abs(fh - f) < 0.02, f + 0.1, fh)
    mask = (rng.uniform(size=(8, 8, 1)) > 0.5).astype(np.float64)

    ft = torch.from_numpy(f).permute(2, 0, 1)[None]
    mt = torch.from_numpy(mask).permute(2, 0, 1)[None]
    ht = torch.from_numpy(fh).permute(2, 0, 1)[None].requires_grad_(True)
    loss = masked_l1_t(ft, ht, mt)
    loss.backward()
    analytic = ht.grad[0].permute(1, 2, 0).numpy()

    h = 1e-6
    flat = fh.reshape(-1)
    idx = rng.choice(flat.size, size=64, replace=False)
    for k in idx:
        plus, minus = flat.copy(), flat.copy()
        plus[k] += h
        minus[k] -= h
        lp = content_weighted_loss(f, plus.reshape(fh.shape), mask)
        lm = content_weighted_loss(f, minus.reshape(fh.shape), mask)
        fd = (lp - lm) / (2 * h)
        ref = analytic.reshape(-1)[k]
        assert abs(fd - ref) <= 1e-3 * max(abs(ref), 1e-8)
