"""Graph data model, symmetric adjacency normalization and split generation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DimensionError, GraphError

__all__ = [
    "Graph",
    "SparseMatrix",
    "DataSplit",
    "normalized_adjacency",
    "make_splits",
    "canonical_edges",
]


def _frozen(arr):
    arr.setflags(write=False)
    return arr


def canonical_edges(edges, num_nodes, *, warn_duplicates=True):
    """Return a sorted ``(E, 2)`` array of unique ``(min, max)`` pairs.

    Raises :class:`GraphError` on self-loops or out-of-range endpoints.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if edges.min() < 0 or edges.max() >= num_nodes:
        raise GraphError(f"edge endpoint outside [0, {num_nodes})")
    if np.any(edges[:, 0] == edges[:, 1]):
        raise GraphError("self-loops are not allowed in the edge list")
    pairs = np.sort(edges, axis=1)
    unique = np.unique(pairs, axis=0)
    if warn_duplicates and len(unique) < len(pairs):
        warnings.warn(
            f"dropped {len(pairs) - len(unique)} duplicate edges",
            stacklevel=3,
        )
    return unique


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected attributed graph ``(X, A)``.

    ``features`` is stored as float32 (the on-disk precision); encoders cast
    to float64. ``labels`` is either an ``(N,)`` class-id vector or an
    ``(N, C)`` 0/1 matrix for multilabel tasks. ``num_classes=0`` means
    infer it from the labels.
    """

    features: np.ndarray
    edges: np.ndarray
    labels: np.ndarray | None = None
    num_classes: int = 0
    num_nodes: int = field(init=False)

    def __post_init__(self):
        feats = np.asarray(self.features)
        if feats.ndim != 2:
            raise DimensionError(f"features must be 2-D, got shape {feats.shape}")
        feats = _frozen(np.array(feats, dtype=np.float32, copy=True))
        n = feats.shape[0]
        edges = _frozen(canonical_edges(self.edges, n))
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "num_nodes", n)

        labels = self.labels
        if labels is not None:
            labels = np.asarray(labels)
            if not self.num_classes and labels.size:
                # Infer the class count when the caller leaves it at 0.
                c = labels.shape[1] if labels.ndim == 2 else int(labels.max()) + 1
                object.__setattr__(self, "num_classes", c)
            if labels.ndim == 1:
                labels = np.array(labels, dtype=np.int64, copy=True)
                if labels.shape[0] != n:
                    raise GraphError("label vector length differs from node count")
                if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
                    raise GraphError(f"class id outside [0, {self.num_classes})")
            elif labels.ndim == 2:
                labels = np.array(labels, dtype=np.uint8, copy=True)
                if labels.shape != (n, self.num_classes):
                    raise GraphError(
                        f"multilabel matrix must be ({n}, {self.num_classes}), got {labels.shape}"
                    )
                if labels.size and labels.max() > 1:
                    raise GraphError("multilabel entries must be 0 or 1")
            else:
                raise GraphError("labels must be 1-D or 2-D")
            object.__setattr__(self, "labels", _frozen(labels))

    @property
    def num_edges(self):
        return len(self.edges)

    @property
    def num_features(self):
        return self.features.shape[1]

    @property
    def multilabel(self):
        return self.labels is not None and self.labels.ndim == 2

    def with_changes(self, *, features=None, edges=None):
        return Graph(
            features=self.features if features is None else features,
            edges=self.edges if edges is None else edges,
            labels=self.labels,
            num_classes=self.num_classes,
        )

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        same_labels = (self.labels is None and other.labels is None) or (
            self.labels is not None
            and other.labels is not None
            and self.labels.dtype == other.labels.dtype
            and np.array_equal(self.labels, other.labels)
        )
        return (
            self.num_classes == other.num_classes
            and self.features.shape == other.features.shape
            and np.array_equal(self.features.view(np.uint32), other.features.view(np.uint32))
            and np.array_equal(self.edges, other.edges)
            and same_labels
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    """Square CSR matrix. ``indptr`` has length ``n + 1``."""

    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    n: int

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def T(self):
        return self.to_scipy().T

    def to_scipy(self):
        m = self.__dict__.get("_csr")
        if m is None:
            m = sp.csr_array((self.values, self.indices, self.indptr), shape=self.shape)
            object.__setattr__(self, "_csr", m)
        return m

    def to_dense(self):
        return self.to_scipy().toarray()

    def __matmul__(self, other):
        return self.to_scipy() @ other


def normalized_adjacency(graph):
    """``D^-1/2 (A + I) D^-1/2`` with ``D`` the degree matrix of ``A + I``."""
    n = graph.num_nodes
    u, v = graph.edges[:, 0], graph.edges[:, 1]
    loops = np.arange(n)
    rows = np.concatenate([u, v, loops])
    cols = np.concatenate([v, u, loops])
    deg = np.bincount(rows, minlength=n).astype(np.float64)
    vals = 1.0 / np.sqrt(deg[rows] * deg[cols])
    csr = sp.csr_array((vals, (rows, cols)), shape=(n, n))
    csr.sort_indices()
    return SparseMatrix(
        indptr=_frozen(csr.indptr.astype(np.int64)),
        indices=_frozen(csr.indices.astype(np.int64)),
        values=_frozen(csr.data.astype(np.float64)),
        n=n,
    )


@dataclass(frozen=True)
class DataSplit:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        parts = []
        for name in ("train", "val", "test"):
            arr = _frozen(np.array(getattr(self, name), dtype=np.int64).reshape(-1))
            object.__setattr__(self, name, arr)
            parts.append(arr)
        allidx = np.concatenate(parts)
        if len(np.unique(allidx)) != len(allidx):
            raise GraphError("train/val/test index sets overlap")

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("train", "val", "test")}

    @classmethod
    def from_dict(cls, d):
        return cls(train=d["train"], val=d["val"], test=d["test"])

    def __eq__(self, other):
        if not isinstance(other, DataSplit):
            return NotImplemented
        return all(np.array_equal(getattr(self, k), getattr(other, k)) for k in ("train", "val", "test"))

    __hash__ = None


def make_splits(num_nodes, ratios=(0.1, 0.1, 0.8), seed=0, count=20):
    """Uniform random train/val/test partitions of ``range(num_nodes)``.

    Train and val sizes are ``floor(ratio * n)``; the remainder goes to test.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must be three positive fractions summing to 1, got {ratios}")
    n_train = math.floor(ratios[0] * num_nodes + 1e-9)
    n_val = math.floor(ratios[1] * num_nodes + 1e-9)
    rng = np.random.default_rng(seed)
    splits = []
    for _ in range(count):
        perm = rng.permutation(num_nodes)
        splits.append(
            DataSplit(
                train=np.sort(perm[:n_train]),
                val=np.sort(perm[n_train : n_train + n_val]),
                test=np.sort(perm[n_train + n_val :]),
            )
        )
    return splits
