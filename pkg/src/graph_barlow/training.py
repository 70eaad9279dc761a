"""Full-batch self-supervised training loop and frozen-embedding extraction."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .augment import AugmentationParams, augment
from .encoders import Encoder
from .errors import ConfigError, NonFiniteLossError
from .losses import LOSSES, cross_correlation
from .optim import ScheduleConfig, adamw_step, lr_at

__all__ = ["TrainConfig", "TrainResult", "train", "embed", "epoch_loss"]


@dataclass(frozen=True)
class TrainConfig:
    augmentation: AugmentationParams = AugmentationParams(0.2, 0.2)
    loss: str = "bt"
    epochs: int = 500
    warmup: int = 50
    lr: float = 5e-4
    weight_decay: float = 1e-5
    seed: int = 0
    eval_interval: int = 0
    lam: float | None = None

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}; choose from {sorted(LOSSES)}")
        if self.epochs < 0 or self.warmup < 0:
            raise ConfigError("epochs and warmup must be non-negative")
        if self.epochs > 0 and self.warmup >= self.epochs:
            raise ConfigError(f"warmup ({self.warmup}) must be shorter than epochs ({self.epochs})")
        if self.lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.lr}")
        if self.eval_interval < 0:
            raise ConfigError("eval_interval must be non-negative")
        if self.lam is not None and self.lam <= 0:
            raise ConfigError("lambda must be positive")

    def schedule(self):
        return ScheduleConfig(self.epochs, self.warmup, self.lr)

    def to_dict(self):
        d = asdict(self)
        d["augmentation"] = asdict(self.augmentation)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        aug = d.pop("augmentation", {})
        return cls(augmentation=AugmentationParams(**aug), **d)


@dataclass
class TrainResult:
    encoder: Encoder
    history: list = field(default_factory=list)
    evaluations: list = field(default_factory=list)


def epoch_loss(encoder, view1, view2, loss="bt", lam=None):
    """Encode both views in training mode and return the scalar loss tensor."""
    z1 = encoder.forward(view1.graph, training=True)
    z2 = encoder.forward(view2.graph, training=True)
    return LOSSES[loss](cross_correlation(z1, z2, lam=lam))


def train(graph, encoder_config, config, evaluate=None):
    """Train a fresh encoder with the configured loss.

    ``evaluate(epoch, encoder)``, when given, is called at epoch 0, every
    ``eval_interval`` epochs and after the last epoch; its return values are
    collected in :attr:`TrainResult.evaluations` as ``(epoch, value)``.
    """
    rng = np.random.default_rng(config.seed)
    encoder = Encoder.init(encoder_config, rng)
    result = TrainResult(encoder=encoder)

    def checkpoint(epoch):
        if evaluate is not None:
            result.evaluations.append((epoch, evaluate(epoch, encoder)))

    checkpoint(0)
    if config.epochs == 0:
        return result
    schedule = config.schedule()
    params = encoder.parameters()
    for epoch in range(1, config.epochs + 1):
        v1 = augment(graph, config.augmentation, rng)
        v2 = augment(graph, config.augmentation, rng)
        loss = epoch_loss(encoder, v1, v2, config.loss, config.lam)
        value = loss.item()
        if not math.isfinite(value):
            raise NonFiniteLossError(epoch, value)
        encoder.zero_grad()
        loss.backward()
        lr = lr_at(epoch, schedule)
        adamw_step(params, lr, config.weight_decay)
        result.history.append({"epoch": epoch, "loss": value, "lr": lr})
        if (config.eval_interval and epoch % config.eval_interval == 0) or epoch == config.epochs:
            if not result.evaluations or result.evaluations[-1][0] != epoch:
                checkpoint(epoch)
    return result


def embed(encoder, graph):
    """Frozen embeddings of the unaugmented graph (batch norm in eval mode)."""
    return encoder.forward(graph, training=False).data.copy()
