"""AdamW with decoupled weight decay and the warmup + cosine learning-rate schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError

__all__ = ["ScheduleConfig", "lr_at", "adamw_step", "BETA1", "BETA2", "EPS"]

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


@dataclass(frozen=True)
class ScheduleConfig:
    total_epochs: int
    warmup_epochs: int
    base_lr: float

    def __post_init__(self):
        if not 0 <= self.warmup_epochs < self.total_epochs:
            raise ConfigError(
                f"need 0 <= warmup < total epochs, got warmup={self.warmup_epochs}, "
                f"total={self.total_epochs}"
            )
        if self.base_lr <= 0:
            raise ConfigError(f"base learning rate must be positive, got {self.base_lr}")


def lr_at(step, schedule):
    """Linear warmup to ``base_lr`` then cosine annealing to zero at ``total_epochs``."""
    t, tw, eta = schedule.total_epochs, schedule.warmup_epochs, schedule.base_lr
    if step < 0 or step > t:
        raise ContractError(f"step {step} outside [0, {t}]")
    if step < tw:
        return eta * step / tw
    return eta * 0.5 * (1.0 + math.cos(math.pi * (step - tw) / (t - tw)))


def adamw_step(params, lr, weight_decay=0.0, beta1=BETA1, beta2=BETA2, eps=EPS):
    """One in-place AdamW update of every parameter that has a gradient.

    The decay factor ``1 - lr * weight_decay`` is floored at zero so that a
    huge decay shrinks weights to zero instead of flipping their sign.
    """
    decay = max(0.0, 1.0 - lr * weight_decay)
    for p in params:
        if p.grad is None:
            continue
        g = p.grad
        p.step += 1
        if decay != 1.0:
            p.data *= decay
        p.m = beta1 * p.m + (1.0 - beta1) * g
        p.v = beta2 * p.v + (1.0 - beta2) * g * g
        m_hat = p.m / (1.0 - beta1**p.step)
        v_hat = p.v / (1.0 - beta2**p.step)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)
