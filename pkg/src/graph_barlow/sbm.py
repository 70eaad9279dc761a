"""Stochastic block model graphs with planted-community node features."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError
from .graph import Graph

__all__ = ["SbmConfig", "generate_sbm", "block_sizes"]


@dataclass(frozen=True)
class SbmConfig:
    num_nodes: int = 300
    num_blocks: int = 3
    p_in: float = 0.1
    p_out: float = 0.01
    num_features: int = 16
    signal: float = 0.5

    def __post_init__(self):
        for name in ("p_in", "p_out"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {p}")
        if self.num_nodes < 1 or self.num_blocks < 1:
            raise ConfigError("num_nodes and num_blocks must be positive")
        if self.num_blocks > self.num_nodes:
            raise ConfigError("more blocks than nodes")
        if self.num_features < self.num_blocks:
            raise ConfigError("num_features must be at least num_blocks (one-hot block signal)")

    def to_dict(self):
        return asdict(self)


def block_sizes(num_nodes, num_blocks):
    """Near-equal block sizes; the first ``num_nodes % num_blocks`` get one extra."""
    base, extra = divmod(num_nodes, num_blocks)
    return [base + (i < extra) for i in range(num_blocks)]


def generate_sbm(config, seed=0):
    """Sample an SBM graph whose labels are the block ids.

    Features are ``signal * onehot(block)`` in the first ``num_blocks``
    columns plus unit Gaussian noise in every column.
    """
    rng = np.random.default_rng(seed)
    n = config.num_nodes
    labels = np.repeat(np.arange(config.num_blocks), block_sizes(n, config.num_blocks))

    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], config.p_in, config.p_out)
    keep = rng.random(len(iu)) < prob
    edges = np.stack([iu[keep], ju[keep]], axis=1)

    features = rng.standard_normal((n, config.num_features))
    features[np.arange(n), labels] += config.signal
    return Graph(features=features, edges=edges, labels=labels, num_classes=config.num_blocks)
