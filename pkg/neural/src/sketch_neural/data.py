"""Dataset access through the primary toolkit's external interfaces only:
manifest JSONL plus PNG image directories."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image

from .errors import ConfigError, DataError
from .schedule import DiffusionSchedule


@dataclass
class TrainingBatch:
    """One training step's tensors; condition is paired with its clean image."""

    x0: torch.Tensor         # (B,1,H,W) clean images in [-1, 1]
    t: torch.Tensor          # (B,) timesteps in [1, T]
    eps: torch.Tensor        # (B,1,H,W) unit Gaussian noise
    prompts: list[str]
    condition: torch.Tensor  # (B,1,H,W) corrupted images in [-1, 1]

    def __post_init__(self) -> None:
        if self.x0.shape != self.eps.shape or self.x0.shape != self.condition.shape:
            raise DataError(
                f"shape mismatch: x0 {tuple(self.x0.shape)}, eps {tuple(self.eps.shape)}, "
                f"condition {tuple(self.condition.shape)}"
            )
        if len(self.prompts) != self.x0.shape[0] or self.t.shape != (self.x0.shape[0],):
            raise DataError("batch size mismatch between prompts/timesteps and images")


def load_image(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def to_model_space(img: np.ndarray) -> torch.Tensor:
    """uint8 grayscale -> float32 in [-1, 1], channel-first."""
    return torch.from_numpy(img.astype(np.float32) / 127.5 - 1.0).unsqueeze(0)


def from_model_space(x: torch.Tensor) -> np.ndarray:
    arr = ((x.clamp(-1.0, 1.0) + 1.0) * 127.5).round().byte().squeeze(0).numpy()
    return arr


class PairDataset:
    """Clean/corrupted pairs from a dataset directory's manifest.jsonl."""

    def __init__(self, root) -> None:
        self.root = Path(root)
        manifest = self.root / "manifest.jsonl"
        if not manifest.exists():
            raise ConfigError(f"no manifest.jsonl under {self.root}")
        self.entries = []
        with open(manifest) as fh:
            for line in fh:
                if line.strip():
                    self.entries.append(json.loads(line))
        if not self.entries:
            raise ConfigError(f"empty manifest under {self.root}")

    def __len__(self) -> int:
        return len(self.entries)

    def item(self, i: int) -> tuple[np.ndarray, np.ndarray, str]:
        e = self.entries[i]
        clean = load_image(self.root / e["clean_path"])
        noisy = load_image(self.root / e["noisy_path"])
        prompt = "" if e.get("empty_prompt") else e["prompt"]
        return clean, noisy, prompt


def make_batch(
    dataset: PairDataset,
    schedule: DiffusionSchedule,
    batch_size: int,
    seed: int,
) -> TrainingBatch:
    """Seeded batch: indices and timesteps from numpy, noise from torch."""
    rng = np.random.Generator(np.random.PCG64(seed))
    idx = rng.integers(0, len(dataset), size=batch_size)
    ts = rng.integers(1, schedule.T + 1, size=batch_size)
    x0, cond, prompts = [], [], []
    for i in idx:
        clean, noisy, prompt = dataset.item(int(i))
        x0.append(to_model_space(clean))
        cond.append(to_model_space(noisy))
        prompts.append(prompt)
    gen = torch.Generator().manual_seed(seed)
    x0_t = torch.stack(x0)
    eps = torch.randn(x0_t.shape, generator=gen)
    return TrainingBatch(
        x0=x0_t,
        t=torch.from_numpy(ts.astype(np.int64)),
        eps=eps,
        prompts=prompts,
        condition=torch.stack(cond),
    )
