"""Augmentation hyperparameter search over ``(p_a, p_x)`` grids."""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor

from .augment import AugmentationParams
from .errors import ContractError
from .probe import DENSE_GRID, evaluate_embeddings
from .training import embed, train

__all__ = ["DEFAULT_AUG_GRID", "augmentation_grid_search", "evaluate_cell"]

DEFAULT_AUG_GRID = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)


def evaluate_cell(graph, encoder_config, config, splits, metric, probe_grid, probe_seed):
    """Train one configuration and return ``(val_metric, test_metric)``."""
    result = train(graph, encoder_config, config)
    z = embed(result.encoder, graph)
    report = evaluate_embeddings(
        z,
        graph.labels,
        splits,
        metric=metric,
        grid=probe_grid,
        multilabel=graph.multilabel,
        num_classes=graph.num_classes,
        seed=probe_seed,
    )
    return report.val_mean, report.mean


def augmentation_grid_search(
    graph,
    encoder_config,
    base_config,
    grid_a=DEFAULT_AUG_GRID,
    grid_x=DEFAULT_AUG_GRID,
    splits=None,
    metric="accuracy",
    probe_grid=DENSE_GRID,
    probe_seed=0,
    jobs=1,
):
    """Train one encoder per ``(p_a, p_x)`` pair and pick the best by validation metric.

    Every cell reuses ``base_config`` (including its seed) with only the
    augmentation replaced. Ties go to the lexicographically smallest pair.
    Returns ``(best_params, table)`` where ``table`` rows follow grid order.
    """
    if not grid_a or not grid_x:
        raise ContractError("augmentation grids must be non-empty")
    if not splits:
        raise ContractError("need at least one split")
    pairs = [(float(a), float(x)) for a in sorted(set(grid_a)) for x in sorted(set(grid_x))]
    configs = [
        dataclasses.replace(base_config, augmentation=AugmentationParams(a, x)) for a, x in pairs
    ]
    args = (graph, encoder_config)
    tail = (splits, metric, tuple(probe_grid), probe_seed)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(evaluate_cell, *args, cfg, *tail) for cfg in configs]
            scores = [f.result() for f in futures]
    else:
        scores = [evaluate_cell(*args, cfg, *tail) for cfg in configs]

    table = [
        {"p_a": a, "p_x": x, "val_metric": v, "test_metric": t}
        for (a, x), (v, t) in zip(pairs, scores)
    ]
    best_row, best_val = None, -math.inf
    for row in table:
        if row["val_metric"] > best_val:
            best_row, best_val = row, row["val_metric"]
    return AugmentationParams(best_row["p_a"], best_row["p_x"]), table
