"""Decoupled-weight-decay Adam with warmup schedules.

The learning rate multiplier ramps linearly from 0 to 1 over
warmup_fraction * total_steps, then decays to 0, either linearly or
along a half cosine. Updates use standard bias correction; weight decay
is applied directly to parameters, scaled by the scheduled rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .model import ModelState

ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 5e-5
    batch_size: int = 16
    max_epochs: int = 100
    patience: int = 10
    warmup_fraction: float = 0.1
    warmup_shape: str = "linear"
    weight_decay: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    seed: int = 0

    def __post_init__(self):
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ConfigError(
                f"warmup_fraction must be in [0, 1), got {self.warmup_fraction}")
        if self.warmup_shape not in ("linear", "cosine"):
            raise ConfigError(f"warmup_shape must be linear or cosine, got "
                              f"{self.warmup_shape!r}")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ConfigError("batch_size and max_epochs must be >= 1")
        if not 0.0 <= self.beta1 < 1.0 or not 0.0 <= self.beta2 < 1.0:
            raise ConfigError("betas must be in [0, 1)")


def schedule_multiplier(step: int, total_steps: int, warmup_fraction: float,
                        shape: str = "linear") -> float:
    """Learning-rate multiplier in [0, 1] at a given global step."""
    if total_steps < 1:
        raise ConfigError(f"total_steps must be >= 1, got {total_steps}")
    warmup = warmup_fraction * total_steps
    if step < warmup:
        return step / warmup
    if step >= total_steps:
        return 0.0
    if shape == "linear":
        return (total_steps - step) / (total_steps - warmup)
    progress = (step - warmup) / (total_steps - warmup)
    return 0.5 * (1.0 + math.cos(math.pi * progress))


def adamw_step(
    state: ModelState,
    gradients: dict[str, np.ndarray],
    cfg: TrainConfig,
    global_step: int,
    total_steps: int,
) -> ModelState:
    """One in-place update; returns the state for chaining."""
    lr = cfg.learning_rate * schedule_multiplier(
        global_step, total_steps, cfg.warmup_fraction, cfg.warmup_shape)
    t = state.step + 1
    bias1 = 1.0 - cfg.beta1**t
    bias2 = 1.0 - cfg.beta2**t
    for name, p in state.params.items():
        g = gradients[name]
        m = state.moment1[name]
        v = state.moment2[name]
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * g * g
        update = (m / bias1) / (np.sqrt(v / bias2) + ADAM_EPS)
        p -= lr * (update + cfg.weight_decay * p)
    state.step = t
    return state
