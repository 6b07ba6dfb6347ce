"""Ancestral sampling from pure noise, conditioned on (condition image, prompt)."""

from __future__ import annotations

import numpy as np
import torch

from .errors import NotTrainedError
from .model import ToyDenoiser, prompt_matrix
from .schedule import DiffusionSchedule


@torch.no_grad()
def generate_batch(
    conditions: torch.Tensor,
    prompts: list[str],
    model: ToyDenoiser,
    schedule: DiffusionSchedule,
    seed: int = 0,
) -> torch.Tensor:
    """Sample one image per (condition, prompt); deterministic given the seed."""
    if int(model.trained_steps) == 0:
        raise NotTrainedError("model has no training steps; refusing to sample")
    model.eval()
    gen = torch.Generator().manual_seed(seed)
    betas = schedule.betas
    alpha_bars = schedule.alpha_bars
    b = conditions.shape[0]
    x = torch.randn(conditions.shape, generator=gen)
    pm = prompt_matrix(prompts, model.prompt_dim)
    for t in range(schedule.T, 0, -1):
        beta = float(betas[t - 1])
        alpha = 1.0 - beta
        ab_t = float(alpha_bars[t])
        ab_prev = float(alpha_bars[t - 1])
        t_batch = torch.full((b,), t, dtype=torch.long)
        eps_hat = model(x, t_batch, pm, conditions)
        mean = (x - beta / np.sqrt(1.0 - ab_t) * eps_hat) / np.sqrt(alpha)
        if t > 1:
            sigma = np.sqrt(beta * (1.0 - ab_prev) / (1.0 - ab_t))
            x = mean + sigma * torch.randn(x.shape, generator=gen)
        else:
            x = mean
    return x.clamp(-1.0, 1.0)


@torch.no_grad()
def generate(
    condition: torch.Tensor,
    prompt: str,
    model: ToyDenoiser,
    schedule: DiffusionSchedule,
    seed: int = 0,
) -> torch.Tensor:
    """Single-image convenience wrapper; accepts an empty prompt."""
    return generate_batch(condition.unsqueeze(0), [prompt], model, schedule, seed=seed)[0]
