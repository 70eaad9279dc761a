"""Cross-correlation of two embedding matrices and the two redundancy-reduction losses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autograd import Tensor, as_tensor, standardize_columns
from .errors import DimensionError

__all__ = [
    "CrossCorrelation",
    "normalize_columns",
    "cross_correlation",
    "bt_loss",
    "hsic_loss",
    "LOSSES",
]

MIN_NORM = 1e-12


@dataclass(frozen=True, eq=False)
class CrossCorrelation:
    matrix: Tensor
    lam: float

    @property
    def dim(self):
        return self.matrix.shape[0]


def normalize_columns(z):
    """Zero-mean, unit population-std columns; near-constant columns become zeros."""
    z = as_tensor(z)
    if len(z.shape) != 2:
        raise DimensionError("expected a 2-D embedding matrix")
    if z.shape[0] < 2:
        raise DimensionError(f"need at least 2 rows to normalize, got {z.shape[0]}")
    return standardize_columns(z, min_std=MIN_NORM)[0]


def cross_correlation(z1, z2, lam=None):
    """Column-wise correlation matrix ``C[i, j]`` between views.

    Columns are centered first; each column norm is clamped below at
    ``1e-12``. ``lam`` defaults to ``1 / d``.
    """
    z1, z2 = as_tensor(z1), as_tensor(z2)
    if z1.shape != z2.shape or len(z1.shape) != 2:
        raise DimensionError(f"embedding shapes differ: {z1.shape} vs {z2.shape}")
    if z1.shape[0] < 2:
        raise DimensionError("cross-correlation needs at least 2 rows")
    c1 = z1 - z1.mean(axis=0, keepdims=True)
    c2 = z2 - z2.mean(axis=0, keepdims=True)
    n1 = (c1 * c1).sum(axis=0, keepdims=True).clamp_min(MIN_NORM**2).sqrt()
    n2 = (c2 * c2).sum(axis=0, keepdims=True).clamp_min(MIN_NORM**2).sqrt()
    c = (c1.T @ c2) / (n1.T @ n2)
    d = z1.shape[1]
    return CrossCorrelation(matrix=c, lam=1.0 / d if lam is None else float(lam))


def _masks(d):
    eye = np.eye(d)
    return eye, 1.0 - eye


def bt_loss(cc):
    """``sum_i (1 - C_ii)^2 + lam * sum_{i != j} C_ij^2``."""
    c = as_tensor(cc.matrix)
    eye, off = _masks(c.shape[0])
    on_diag = ((1.0 - c) * eye) ** 2
    off_diag = (c * off) ** 2
    return on_diag.sum() + off_diag.sum() * cc.lam


def hsic_loss(cc):
    """``sum_i (1 - C_ii)^2 + lam * sum_{i != j} (1 + C_ij)^2``."""
    c = as_tensor(cc.matrix)
    eye, off = _masks(c.shape[0])
    on_diag = ((1.0 - c) * eye) ** 2
    off_diag = ((1.0 + c) * off) ** 2
    return on_diag.sum() + off_diag.sum() * cc.lam


LOSSES = {"bt": bt_loss, "hsic": hsic_loss}
