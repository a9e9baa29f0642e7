"""Probe: pre-GAN adherence of the generalization bundle, and how much the
200-step adversarial smoke moves it at different generator learning rates."""

import copy
import sys
import time

import numpy as np

sys.path.insert(0, "src")

from motionbox.adversarial import CriticConfig, train_gan
from motionbox.content_vae import ContentVaeConfig, train_content_vae
from motionbox.core import Box, BoxTrackSet, ObjectTrack
from motionbox.evaluation import motion_adherence
from motionbox.generator import GeneratorBundle, GeneratorConfig, SuperResolver, train_decoder
from motionbox.motion_vae import MotionVaeConfig, train_motion_vae
from motionbox.preprocess import BackgroundTrainConfig, extract_foreground_mask, rasterize_tracks, train_background_ae
from motionbox.synth import WorldConfig, generate_episode, render_background

T0 = time.time()
WORLD = WorldConfig(num_objects=1, sprite_size=12, velocity_range=2, n=16, height=64, width=64, seed=1234)
BG = render_background(WORLD)


def clock(label):
    print(f"[{time.time()-T0:7.1f}s] {label}", flush=True)


episodes = [generate_episode(WORLD, seed=i) for i in range(128)]
motions = [rasterize_tracks(t) for _, t in episodes]
bank = np.stack(motions + [rasterize_tracks(generate_episode(WORLD, seed=100_000 + i)[1]) for i in range(384)])
clock("data ready")

frames = np.concatenate([v for v, _ in episodes[:16]])
bg_model, _ = train_background_ae(frames, BackgroundTrainConfig(steps=400, batch_size=16, seed=0))
clock("bg AE done")

mv, _ = train_motion_vae(bank, MotionVaeConfig(steps=3000, batch_size=8, seed=0))
clock("motion VAE done")

f32 = np.stack([episodes[i][0][0] for i in range(32)])
m32 = np.stack([extract_foreground_mask(f, bg_model.reconstruct(f)) for f in f32])
cv, _ = train_content_vae(f32, m32, ContentVaeConfig(steps=1500, batch_size=16, seed=0))
clock("content VAE done")

gcfg = GeneratorConfig(steps=4000, batch_size=8, seed=0)
dec, dech = train_decoder([(v, m) for (v, _), m in zip(episodes, motions)], mv, cv, gcfg)
clock(f"decoder done (final L_D {dech[-1]['loss']:.4f})")


def patterns():
    s = WORLD.sprite_size
    specs = [("static", 26, 26, 0, 0), ("horiz", 8, 30, 2, 0), ("diag", 10, 10, 2, 2), ("vert", 40, 8, 0, 2)]
    for name, x, y, vx, vy in specs:
        boxes = []
        for _ in range(WORLD.n):
            boxes.append(Box(x, y, x + s, y + s))
            x, y = x + vx, y + vy
        yield name, BoxTrackSet(num_frames=WORLD.n, width=64, height=64, objects=[ObjectTrack(id=0, boxes=boxes)])


held_video, _ = generate_episode(WORLD, seed=987_654)
frame = held_video[0]


def adherence(bundle):
    out = {}
    for name, t in patterns():
        gen = bundle.generate(content_frame=frame, tracks=t, seed=7, mode="controlled")
        out[name] = motion_adherence(gen, t, BG)
    return out


sr0 = SuperResolver(gcfg)
bundle = GeneratorBundle(mv, cv, dec, sr0, trained_steps=gcfg.steps)
pre = adherence(bundle)
clock(f"pre-GAN adherence: {[f'{k}={v:.3f}' for k, v in pre.items()]} mean={np.mean(list(pre.values())):.3f}")

dec_state = copy.deepcopy(dec.state_dict())
sr_state = copy.deepcopy(sr0.state_dict())
vids = np.stack([episodes[i][0] for i in range(8)])

for lr_gen in (1e-4, 3e-5, 1e-5):
    dec.load_state_dict(copy.deepcopy(dec_state))
    sr0.load_state_dict(copy.deepcopy(sr_state))
    cfg = CriticConfig(steps=200, batch_size=4, seed=0, lr_gen=lr_gen)
    train_gan(vids, dec, sr0, cfg)
    post = adherence(bundle)
    clock(f"post-GAN lr_gen={lr_gen:g}: {[f'{k}={v:.3f}' for k, v in post.items()]} mean={np.mean(list(post.values())):.3f}")
clock("done")
