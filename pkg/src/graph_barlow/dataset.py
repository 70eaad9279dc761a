"""On-disk dataset directory: ``meta.json`` plus little-endian binary payloads."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import FormatVersionError, MissingFileError, SizeMismatchError
from .graph import DataSplit, Graph

__all__ = ["FORMAT_VERSION", "save_dataset", "load_dataset"]

FORMAT_VERSION = 1

_F32 = np.dtype("<f4")
_U32 = np.dtype("<u4")


def save_dataset(graph, path, splits=None):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    meta = {
        "format_version": FORMAT_VERSION,
        "num_nodes": graph.num_nodes,
        "num_edges": graph.num_edges,
        "num_features": graph.num_features,
        "num_classes": graph.num_classes,
        "multilabel": graph.multilabel,
    }
    (path / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    (path / "features.f32").write_bytes(graph.features.astype(_F32).tobytes())
    (path / "edges.u32").write_bytes(graph.edges.astype(_U32).tobytes())
    for stale in ("labels.u32", "labels.u8", "splits.json"):
        (path / stale).unlink(missing_ok=True)
    if graph.labels is not None:
        if graph.multilabel:
            (path / "labels.u8").write_bytes(graph.labels.astype(np.uint8).tobytes())
        else:
            (path / "labels.u32").write_bytes(graph.labels.astype(_U32).tobytes())
    if splits is not None:
        (path / "splits.json").write_text(json.dumps([s.to_dict() for s in splits]) + "\n")
    return path


def _read(path, dtype, expected, what):
    if not path.exists():
        raise MissingFileError(f"missing {path}")
    raw = path.read_bytes()
    if len(raw) != expected * dtype.itemsize:
        raise SizeMismatchError(
            f"{what}: header implies {expected} values, "
            f"payload {path.name} holds {len(raw) / dtype.itemsize:g}"
        )
    return np.frombuffer(raw, dtype=dtype)


def load_dataset(path):
    """Load ``(graph, splits)``; ``splits`` is ``None`` if absent."""
    path = Path(path)
    meta_path = path / "meta.json"
    if not meta_path.exists():
        raise MissingFileError(f"missing {meta_path}")
    meta = json.loads(meta_path.read_text())
    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatVersionError(f"{meta_path}: unsupported format_version {version!r}")

    n, e, k = meta["num_nodes"], meta["num_edges"], meta["num_features"]
    c, multilabel = meta["num_classes"], bool(meta["multilabel"])
    features = _read(path / "features.f32", _F32, n * k, "features").reshape(n, k)
    edges = _read(path / "edges.u32", _U32, 2 * e, "edges").reshape(e, 2).astype(np.int64)

    labels = None
    if multilabel and (path / "labels.u8").exists():
        labels = _read(path / "labels.u8", np.dtype("u1"), n * c, "labels").reshape(n, c)
    elif not multilabel and (path / "labels.u32").exists():
        labels = _read(path / "labels.u32", _U32, n, "labels").astype(np.int64)

    graph = Graph(features=features, edges=edges, labels=labels, num_classes=c)

    splits = None
    if (path / "splits.json").exists():
        splits = [DataSplit.from_dict(d) for d in json.loads((path / "splits.json").read_text())]
    return graph, splits
