"""Toy conditional denoiser: predicts the noise added to a clean sketch image,
given the timestep, a prompt embedding, and the corrupted-sketch condition image.

The condition enters through channel concatenation (a minimal spatial
conditioning encoder); prompt text is featurized by a fixed, non-learned
hash embedding so gradients flow only through the denoiser weights.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np
import torch
import torch.nn as nn

from .errors import DataError

PROMPT_DIM = 32
TIME_DIM = 32


def prompt_embedding(text: str, dim: int = PROMPT_DIM) -> torch.Tensor:
    """Deterministic unit-norm embedding of a prompt; empty prompt maps to zeros."""
    if not text:
        return torch.zeros(dim)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    seed = int.from_bytes(digest[:8], "little")
    vec = np.random.Generator(np.random.PCG64(seed)).normal(size=dim)
    vec /= np.linalg.norm(vec)
    return torch.from_numpy(vec).float()


def prompt_matrix(prompts: list[str], dim: int = PROMPT_DIM) -> torch.Tensor:
    return torch.stack([prompt_embedding(p, dim) for p in prompts])


def sinusoidal_time_embedding(t: torch.Tensor, dim: int = TIME_DIM) -> torch.Tensor:
    """Standard sin/cos positional features of the integer timestep."""
    half = dim // 2
    freqs = torch.exp(-math.log(10_000.0) * torch.arange(half, dtype=torch.float32) / half)
    angles = t.float()[:, None] * freqs[None, :]
    return torch.cat([torch.sin(angles), torch.cos(angles)], dim=1)


class _Block(nn.Module):
    def __init__(self, cin: int, cout: int, emb_dim: int):
        super().__init__()
        self.conv1 = nn.Conv2d(cin, cout, 3, padding=1)
        self.conv2 = nn.Conv2d(cout, cout, 3, padding=1)
        self.emb = nn.Linear(emb_dim, cout)
        self.act = nn.SiLU()

    def forward(self, x: torch.Tensor, emb: torch.Tensor) -> torch.Tensor:
        h = self.act(self.conv1(x))
        h = h + self.emb(emb)[:, :, None, None]
        return self.act(self.conv2(h))


class ToyDenoiser(nn.Module):
    """Small two-level UNet over (noisy image, condition image) channel pairs."""

    def __init__(self, base: int = 32, emb_dim: int = 64, prompt_dim: int = PROMPT_DIM):
        super().__init__()
        self.base = base
        self.emb_dim = emb_dim
        self.prompt_dim = prompt_dim
        self.emb_mlp = nn.Sequential(
            nn.Linear(TIME_DIM + prompt_dim, emb_dim), nn.SiLU(), nn.Linear(emb_dim, emb_dim)
        )
        self.enc1 = _Block(2, base, emb_dim)
        self.down1 = nn.Conv2d(base, base, 4, stride=2, padding=1)
        self.enc2 = _Block(base, base * 2, emb_dim)
        self.down2 = nn.Conv2d(base * 2, base * 2, 4, stride=2, padding=1)
        self.mid = _Block(base * 2, base * 2, emb_dim)
        self.up2 = nn.ConvTranspose2d(base * 2, base * 2, 4, stride=2, padding=1)
        self.dec2 = _Block(base * 4, base, emb_dim)
        self.up1 = nn.ConvTranspose2d(base, base, 4, stride=2, padding=1)
        self.dec1 = _Block(base * 2, base, emb_dim)
        self.out = nn.Conv2d(base, 1, 3, padding=1)
        self.register_buffer("trained_steps", torch.zeros((), dtype=torch.long))

    def forward(
        self,
        x_t: torch.Tensor,
        t: torch.Tensor,
        prompt_emb: torch.Tensor,
        condition: torch.Tensor,
    ) -> torch.Tensor:
        if condition.shape != x_t.shape:
            raise DataError(
                f"condition shape {tuple(condition.shape)} != noisy-image shape {tuple(x_t.shape)}"
            )
        emb = self.emb_mlp(torch.cat([sinusoidal_time_embedding(t), prompt_emb], dim=1))
        x = torch.cat([x_t, condition], dim=1)
        h1 = self.enc1(x, emb)
        h2 = self.enc2(self.down1(h1), emb)
        m = self.mid(self.down2(h2), emb)
        d2 = self.dec2(torch.cat([self.up2(m), h2], dim=1), emb)
        d1 = self.dec1(torch.cat([self.up1(d2), h1], dim=1), emb)
        return self.out(d1)


def save_checkpoint(model: ToyDenoiser, schedule_cfg: dict, path) -> None:
    torch.save(
        {
            "state_dict": model.state_dict(),
            "arch": {"base": model.base, "emb_dim": model.emb_dim, "prompt_dim": model.prompt_dim},
            "schedule": schedule_cfg,
        },
        path,
    )


def load_checkpoint(path) -> tuple[ToyDenoiser, dict]:
    blob = torch.load(path, map_location="cpu", weights_only=True)
    model = ToyDenoiser(**blob["arch"])
    model.load_state_dict(blob["state_dict"])
    model.eval()
    return model, blob["schedule"]
