import numpy as np
import pytest
import torch

from motionbox.adversarial import (
    CriticConfig,
    GanTrainer,
    VideoCritic,
    critic_score,
    gradient_penalty,
    load_critic,
    save_critic,
    train_gan,
)
from motionbox.errors import DimensionError, TrainingError
from motionbox.generator import GeneratorConfig, SuperResolver, VideoDecoder
from motionbox.trainutil import set_torch_seed

TINY_N, TINY_HW = 8, 16


def tiny_critic_cfg(**kw):
    base = dict(base_channels=4, batch_size=2, steps=6, critic_steps=2, seed=0,
                n=TINY_N, height=TINY_HW, width=TINY_HW)
    base.update(kw)
    return CriticConfig(**base)


def tiny_gen_cfg():
    return GeneratorConfig(motion_latent_dim=16, content_latent_dim=16, noise_dim=8,
                           base_channels=4, n=TINY_N, height=TINY_HW, width=TINY_HW)


def random_videos(rng, count):
    return rng.uniform(0, 1, size=(count, TINY_N, TINY_HW, TINY_HW, 3)).astype(np.float32)


def test_critic_score_finite_and_deterministic():
    set_torch_seed(0)
    critic = VideoCritic(tiny_critic_cfg())
    v = random_videos(np.random.default_rng(0), 1)[0]
    s1 = critic_score(critic, v)
    s2 = critic_score(critic, v)
    assert np.isfinite(s1)
    assert s1 == s2


def test_critic_score_batch_order_stable():
    set_torch_seed(0)
    critic = VideoCritic(tiny_critic_cfg())
    batch = random_videos(np.random.default_rng(1), 4)
    scores = critic_score(critic, batch)
    assert scores.shape == (4,)
    singles = [critic_score(critic, batch[i]) for i in range(4)]
    assert np.allclose(scores, singles, atol=1e-5)


def test_critic_score_shape_check():
    set_torch_seed(0)
    critic = VideoCritic(tiny_critic_cfg())
    with pytest.raises(DimensionError):
        critic_score(critic, np.zeros((4, 8, 8, 3), dtype=np.float32))


def linear_critic(a_flat: torch.Tensor):
    def fn(x: torch.Tensor) -> torch.Tensor:
        return (x.reshape(x.shape[0], -1) * a_flat).sum(dim=1)

    return fn


def test_gradient_penalty_unit_norm_linear_critic():
    rng = np.random.default_rng(2)
    shape = (4, TINY_N, TINY_HW, TINY_HW, 3)
    real = rng.uniform(0, 1, size=shape)
    fake = rng.uniform(0, 1, size=shape)
    a = torch.from_numpy(rng.normal(size=int(np.prod(shape[1:]))))
    a = a / a.norm()
    gp = gradient_penalty(linear_critic(a), real, fake, seed=0)
    assert gp <= 1e-6


def test_gradient_penalty_norm_two_linear_critic():
    rng = np.random.default_rng(3)
    shape = (4, TINY_N, TINY_HW, TINY_HW, 3)
    real = rng.uniform(0, 1, size=shape)
    fake = rng.uniform(0, 1, size=shape)
    a = torch.from_numpy(rng.normal(size=int(np.prod(shape[1:]))))
    a = 2.0 * a / a.norm()
    gp = gradient_penalty(linear_critic(a), real, fake, seed=0)
    assert gp == pytest.approx(1.0, abs=1e-4)


def test_gradient_penalty_constant_critic():
    rng = np.random.default_rng(4)
    shape = (3, TINY_N, TINY_HW, TINY_HW, 3)
    real = rng.uniform(0, 1, size=shape)
    fake = rng.uniform(0, 1, size=shape)

    def const(x):
        return (x.reshape(x.shape[0], -1) * 0.0).sum(dim=1) + 5.0

    gp = gradient_penalty(const, real, fake, seed=1)
    assert gp == pytest.approx(1.0, abs=1e-9)


def test_gradient_penalty_nonnegative_on_real_critic():
    set_torch_seed(0)
    critic = VideoCritic(tiny_critic_cfg())
    rng = np.random.default_rng(5)
    real = random_videos(rng, 2).astype(np.float64)
    fake = random_videos(rng, 2).astype(np.float64)
    assert gradient_penalty(critic, real, fake, seed=0) >= 0.0


def _fresh_generator():
    set_torch_seed(3)
    decoder = VideoDecoder(tiny_gen_cfg())
    sr = SuperResolver(tiny_gen_cfg())
    return decoder, sr


def test_gan_smoke_finite_losses():
    decoder, sr = _fresh_generator()
    videos = random_videos(np.random.default_rng(6), 4)
    critic, history = train_gan(videos, decoder, sr, tiny_critic_cfg(steps=6))
    assert len(history) == 6
    for row in history:
        assert np.isfinite(row["critic_loss"])
        assert np.isfinite(row["gen_loss"])
        assert np.isfinite(row["gp"])
        assert row["gp"] >= 0.0


def test_gan_zero_gp_weight_runs():
    decoder, sr = _fresh_generator()
    videos = random_videos(np.random.default_rng(7), 4)
    _, history = train_gan(videos, decoder, sr, tiny_critic_cfg(steps=4, gp_weight=0.0))
    assert len(history) == 4


def test_gan_seed_determinism_first_steps():
    videos = random_videos(np.random.default_rng(8), 4)
    d1, s1 = _fresh_generator()
    _, h1 = train_gan(videos, d1, s1, tiny_critic_cfg(steps=5))
    d2, s2 = _fresh_generator()
    _, h2 = train_gan(videos, d2, s2, tiny_critic_cfg(steps=5))
    assert [r["critic_loss"] for r in h1] == [r["critic_loss"] for r in h2]


def test_update_isolation_between_critic_and_generator():
    decoder, sr = _fresh_generator()
    videos = random_videos(np.random.default_rng(9), 4)
    trainer = GanTrainer(videos, decoder, sr, tiny_critic_cfg())

    gen_before = {k: v.clone() for k, v in decoder.state_dict().items()}
    sr_before = {k: v.clone() for k, v in sr.state_dict().items()}
    trainer.critic_step()
    for k, v in decoder.state_dict().items():
        assert (v == gen_before[k]).all()
    for k, v in sr.state_dict().items():
        assert (v == sr_before[k]).all()

    critic_before = {k: v.clone() for k, v in trainer.critic.state_dict().items()}
    trainer.generator_step()
    for k, v in trainer.critic.state_dict().items():
        assert (v == critic_before[k]).all()


def test_gan_critic_improves_against_frozen_generator():
    # lambda_gp = 0, generator never updated: smoothed critic loss must trend down
    decoder, sr = _fresh_generator()
    videos = random_videos(np.random.default_rng(10), 4)
    cfg = tiny_critic_cfg(steps=40, gp_weight=0.0, critic_steps=10_000, lr_critic=5e-4)
    trainer = GanTrainer(videos, decoder, sr, cfg)
    losses = [trainer.critic_step()["critic_loss"] for _ in range(cfg.steps)]
    first = np.mean(losses[:10])
    last = np.mean(losses[-10:])
    assert last < first


def test_gan_nan_abort_restores_snapshot():
    decoder, sr = _fresh_generator()
    videos = random_videos(np.random.default_rng(11), 4)
    cfg = tiny_critic_cfg(steps=5, lr_critic=1e30)  # absurd lr forces divergence
    trainer = GanTrainer(videos, decoder, sr, cfg)
    snap = {k: v.clone() for k, v in trainer.critic.state_dict().items()}
    with pytest.raises(TrainingError):
        trainer.run(snapshot_every=1)
    # weights were restored to a finite snapshot
    for v in trainer.critic.state_dict().values():
        assert torch.isfinite(v).all()
    assert set(snap) == set(trainer.critic.state_dict())


def test_critic_checkpoint_round_trip(tmp_path):
    set_torch_seed(1)
    critic = VideoCritic(tiny_critic_cfg())
    save_critic(critic, 0, tmp_path / "critic")
    loaded = load_critic(tmp_path / "critic")
    v = random_videos(np.random.default_rng(12), 1)[0]
    assert critic_score(critic, v) == critic_score(loaded, v)
