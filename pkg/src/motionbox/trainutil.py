"""Small shared helpers for the training loops."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np
import torch

from .errors import TrainingError


def set_torch_seed(seed: int) -> None:
    torch.manual_seed(int(seed) & 0x7FFFFFFFFFFFFFFF)


def check_finite_loss(loss: torch.Tensor, step: int) -> float:
    val = float(loss.detach())
    if not math.isfinite(val):
        raise TrainingError("training loss is not finite", step=step)
    return val


def sample_batch(rng: np.random.Generator, stack: torch.Tensor, batch_size: int) -> torch.Tensor:
    idx = rng.integers(0, stack.shape[0], size=min(batch_size, stack.shape[0]))
    return stack[torch.from_numpy(idx)]


def write_history_csv(history: list[dict], path) -> None:
    if not history:
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fields = list(history[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(history)
