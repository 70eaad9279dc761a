"""Stochastic graph views: edge dropping and whole-column feature masking."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .graph import Graph

__all__ = ["AugmentationParams", "GraphView", "augment"]


@dataclass(frozen=True)
class AugmentationParams:
    p_a: float = 0.0
    p_x: float = 0.0

    def __post_init__(self):
        for name in ("p_a", "p_x"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {p}")


@dataclass(frozen=True, eq=False)
class GraphView:
    graph: Graph
    edge_mask: np.ndarray
    feature_mask: np.ndarray


def augment(graph, params, rng):
    """Draw one view: keep each edge w.p. ``1 - p_a``, keep each feature column w.p. ``1 - p_x``.

    A dropped column is zeroed at every node.
    """
    edge_mask = rng.random(graph.num_edges) >= params.p_a
    feature_mask = rng.random(graph.num_features) >= params.p_x
    features = graph.features * feature_mask.astype(graph.features.dtype)
    view = Graph(
        features=features,
        edges=graph.edges[edge_mask],
        labels=graph.labels,
        num_classes=graph.num_classes,
    )
    return GraphView(graph=view, edge_mask=edge_mask, feature_mask=feature_mask)
