"""Forward-diffusion noise schedule and the closed-form noising step."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .errors import ConfigError


@dataclass(frozen=True)
class DiffusionSchedule:
    """Per-step noise levels beta_t with cumulative products alpha_bar.

    alpha_bar is indexed by timestep t in [0, T], with alpha_bar[0] = 1 (the
    empty product), so t = 0 is exactly the identity endpoint.
    """

    betas: np.ndarray  # (T,) float64, entry t-1 is beta_t
    alpha_bars: np.ndarray = field(init=False)  # (T+1,)

    def __post_init__(self) -> None:
        betas = np.asarray(self.betas, dtype=np.float64)
        if betas.ndim != 1 or len(betas) < 1:
            raise ConfigError("betas must be a non-empty 1-D array")
        if np.any(betas <= 0.0) or np.any(betas >= 1.0):
            raise ConfigError("every beta must satisfy 0 < beta < 1")
        betas.flags.writeable = False
        alpha_bars = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
        if np.any(np.diff(alpha_bars) >= 0):
            raise ConfigError("alpha_bar must be strictly decreasing")
        alpha_bars.flags.writeable = False
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alpha_bars", alpha_bars)

    @property
    def T(self) -> int:
        return len(self.betas)

    @classmethod
    def linear(cls, T: int = 1000, beta_start: float = 1e-4, beta_end: float = 0.02) -> "DiffusionSchedule":
        return cls(betas=np.linspace(beta_start, beta_end, T))


def diffuse_with_alpha_bar(x0: torch.Tensor, alpha_bar, eps: torch.Tensor) -> torch.Tensor:
    """sqrt(alpha_bar) * x0 + sqrt(1 - alpha_bar) * eps, the closed-form noising step."""
    if isinstance(alpha_bar, torch.Tensor):
        ab = alpha_bar.to(x0.dtype)
        while ab.ndim < x0.ndim:
            ab = ab.unsqueeze(-1)
    else:
        ab = torch.as_tensor(float(alpha_bar), dtype=x0.dtype)
    return torch.sqrt(ab) * x0 + torch.sqrt(1.0 - ab) * eps


def forward_diffuse(
    x0: torch.Tensor, t, schedule: DiffusionSchedule, eps: torch.Tensor
) -> torch.Tensor:
    """Noise x0 to timestep t. t may be an int or a (B,) tensor of ints in [0, T]."""
    if x0.shape != eps.shape:
        raise ConfigError(f"x0 shape {tuple(x0.shape)} != eps shape {tuple(eps.shape)}")
    if isinstance(t, torch.Tensor):
        ts = t.long()
        if ts.numel() and (int(ts.min()) < 0 or int(ts.max()) > schedule.T):
            raise ConfigError(f"timesteps must lie in [0, {schedule.T}]")
        ab = torch.from_numpy(schedule.alpha_bars[ts.numpy()])
    else:
        if not 0 <= int(t) <= schedule.T:
            raise ConfigError(f"timestep {t} outside [0, {schedule.T}]")
        ab = float(schedule.alpha_bars[int(t)])
    return diffuse_with_alpha_bar(x0, ab, eps)
