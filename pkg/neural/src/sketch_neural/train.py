"""Noise-prediction training: loss between sampled and predicted noise."""

from __future__ import annotations

import torch

from .data import PairDataset, TrainingBatch, make_batch
from .errors import DataError
from .model import ToyDenoiser, prompt_matrix
from .schedule import DiffusionSchedule, forward_diffuse


def train_step(batch: TrainingBatch, model: ToyDenoiser, schedule: DiffusionSchedule) -> torch.Tensor:
    """Mean squared error between the sampled noise and the model's prediction.

    The caller owns backprop and the optimizer; gradients reach only the
    denoiser (prompt embeddings are fixed features, the noising step has no
    parameters).
    """
    if batch.condition.shape != batch.x0.shape:
        raise DataError("condition does not match clean-image shape")
    x_t = forward_diffuse(batch.x0, batch.t, schedule, batch.eps)
    pred = model(x_t, batch.t, prompt_matrix(batch.prompts, model.prompt_dim), batch.condition)
    return torch.mean((batch.eps - pred) ** 2)


def train_loop(
    dataset: PairDataset,
    model: ToyDenoiser,
    schedule: DiffusionSchedule,
    steps: int,
    batch_size: int = 8,
    lr: float = 2e-4,
    seed: int = 0,
    log_every: int = 0,
) -> list[float]:
    """Adam training with per-step derived seeds; returns the loss curve."""
    opt = torch.optim.Adam(model.parameters(), lr=lr)
    losses: list[float] = []
    model.train()
    for step in range(steps):
        batch = make_batch(dataset, schedule, batch_size, seed=seed * 1_000_003 + step)
        opt.zero_grad()
        loss = train_step(batch, model, schedule)
        loss.backward()
        opt.step()
        losses.append(float(loss.detach()))
        if log_every and (step + 1) % log_every == 0:
            recent = sum(losses[-log_every:]) / log_every
            print(f"step {step + 1}/{steps}  loss {recent:.4f}")
    with torch.no_grad():
        model.trained_steps += steps
    model.eval()
    return losses
