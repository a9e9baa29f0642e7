"""Probe: does the motion VAE generalize when trained on densely sampled
rasterized tracks (instead of a few episode tracks)?"""

import sys
import time

import numpy as np

sys.path.insert(0, "src")

from motionbox.core import Box, BoxTrackSet, ObjectTrack
from motionbox.motion_vae import MotionVaeConfig, decode_motion, encode_motion, train_motion_vae
from motionbox.preprocess import rasterize_tracks
from motionbox.synth import WorldConfig, generate_episode

T0 = time.time()
WORLD = WorldConfig(num_objects=1, sprite_size=12, velocity_range=2, n=16, height=64, width=64, seed=1234)


def direct_motion_videos(count, seed_base):
    vids = []
    for i in range(count):
        _, t = generate_episode(WORLD, seed=seed_base + i)
        vids.append(rasterize_tracks(t))
    return np.stack(vids)


def recon_iou(model, video, thresh=0.5):
    mu, _ = encode_motion(model, video)
    rec = decode_motion(model, mu)
    b = (rec > thresh).astype(np.float32)
    inter = float((b * video).sum())
    union = float(np.maximum(b, video).sum())
    return (inter / union) if union else 1.0, float(rec.max()), float(rec.mean())


train = direct_motion_videos(512, 0)
held = direct_motion_videos(8, 10_000)
print(f"[{time.time()-T0:6.1f}s] data ready", flush=True)

for steps in (1500, 3000):
    cfg = MotionVaeConfig(steps=steps, batch_size=8, seed=0)
    model, hist = train_motion_vae(train, cfg)
    tr = [recon_iou(model, train[i])[0] for i in range(8)]
    hd = [recon_iou(model, held[i]) for i in range(8)]
    print(
        f"[{time.time()-T0:6.1f}s] steps={steps} final l_mw={hist[-1]['l_mw']:.4f} "
        f"train IoU={np.mean(tr):.3f} held IoU={np.mean([h[0] for h in hd]):.3f} "
        f"held max={np.mean([h[1] for h in hd]):.3f} held mean={np.mean([h[2] for h in hd]):.4f}",
        flush=True,
    )
