"""GCN and GAT node encoders plus a binary checkpoint format.

Checkpoint layout: one line of UTF-8 JSON (terminated by ``\\n``) holding the
architecture config and a manifest ``[{"name", "shape", "kind"}]``, followed
by the float64 little-endian payloads of every manifest entry in order.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .autograd import Parameter, Tensor
from .errors import CheckpointError, ConfigError, DimensionError
from .graph import normalized_adjacency
from .layers import batch_norm, elu, gat_forward, gcn_forward, prelu

__all__ = ["EncoderConfig", "Encoder", "save_checkpoint", "load_checkpoint", "ARCHITECTURES"]

ARCHITECTURES = ("gcn2", "gcn3", "gat3")
CHECKPOINT_VERSION = 1
_F64 = np.dtype("<f8")


@dataclass(frozen=True)
class EncoderConfig:
    """Encoder shape.

    ``hidden`` is ignored for ``gcn2`` (fixed at ``2 * emb_dim``) and
    ``gcn3`` (fixed at ``emb_dim``). For ``gat3`` it lists the per-head size
    of the first two layers and ``heads`` gives the head count of all three.
    """

    arch: str
    in_dim: int
    emb_dim: int
    hidden: tuple = (256, 256)
    heads: tuple = (4, 4, 6)
    bn_momentum: float = 0.01

    def __post_init__(self):
        if self.arch not in ARCHITECTURES:
            raise ConfigError(f"unknown architecture {self.arch!r}; choose from {ARCHITECTURES}")
        if self.in_dim <= 0 or self.emb_dim <= 0:
            raise ConfigError("encoder dimensions must be positive")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "heads", tuple(int(h) for h in self.heads))
        if self.arch == "gat3":
            if len(self.hidden) != 2 or len(self.heads) != 3:
                raise ConfigError("gat3 needs two hidden head sizes and three head counts")
            if min(self.hidden + self.heads) <= 0:
                raise ConfigError("gat3 head sizes and counts must be positive")
        if not 0.0 <= self.bn_momentum <= 1.0:
            raise ConfigError("batch-norm momentum must lie in [0, 1]")

    def to_dict(self):
        d = asdict(self)
        d["hidden"], d["heads"] = list(self.hidden), list(self.heads)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["hidden"] = tuple(d.get("hidden", (256, 256)))
        d["heads"] = tuple(d.get("heads", (4, 4, 6)))
        return cls(**d)


def _glorot(rng, fan_in, fan_out, shape=None):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


@dataclass
class Encoder:
    config: EncoderConfig
    params: dict = field(default_factory=dict)
    buffers: dict = field(default_factory=dict)

    @classmethod
    def init(cls, config, rng):
        enc = cls(config)
        if config.arch.startswith("gcn"):
            d = config.emb_dim
            dims = [config.in_dim, 2 * d, d] if config.arch == "gcn2" else [config.in_dim, d, d, d]
            for i, (fi, fo) in enumerate(zip(dims[:-1], dims[1:])):
                enc._add(f"gcn{i}.weight", _glorot(rng, fi, fo))
                if i < len(dims) - 2:
                    enc._add(f"bn{i}.gamma", np.ones((1, fo)))
                    enc._add(f"bn{i}.beta", np.zeros((1, fo)))
                    enc._add(f"act{i}.slope", np.full((1, 1), 0.25))
                    enc.buffers[f"bn{i}.running_mean"] = np.zeros(fo)
                    enc.buffers[f"bn{i}.running_var"] = np.ones(fo)
        else:
            h1, h2 = config.hidden
            k1, k2, k3 = config.heads
            widths = [config.in_dim, h1 * k1, h2 * k2]
            layer_heads = [(k1, h1), (k2, h2), (k3, config.emb_dim)]
            outs = [h1 * k1, h2 * k2, config.emb_dim]
            for i, ((nh, hd), fi, fo) in enumerate(zip(layer_heads, widths, outs)):
                enc._add(f"gat{i}.weight", _glorot(rng, fi, nh * hd))
                enc._add(f"gat{i}.att", _glorot(rng, 2 * hd, 1, shape=(2 * hd, nh)))
                enc._add(f"gat{i}.skip_weight", _glorot(rng, fi, fo))
                enc._add(f"gat{i}.skip_bias", np.zeros((1, fo)))
        return enc

    def _add(self, name, value):
        self.params[name] = Parameter(value, name=name)

    def parameters(self):
        return list(self.params.values())

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def forward(self, graph, training=False, adjacency=None):
        """Embed ``graph``; returns an ``N x emb_dim`` :class:`Tensor`."""
        if graph.num_features != self.config.in_dim:
            raise DimensionError(
                f"graph has {graph.num_features} features, encoder expects {self.config.in_dim}"
            )
        x = Tensor(graph.features.astype(np.float64))
        p = self.params
        arch = self.config.arch
        if arch.startswith("gcn"):
            adj = adjacency if adjacency is not None else normalized_adjacency(graph)
            n_layers = 2 if arch == "gcn2" else 3
            h = x
            for i in range(n_layers):
                h = gcn_forward(h, adj, p[f"gcn{i}.weight"])
                if i < n_layers - 1:
                    h = batch_norm(
                        h,
                        p[f"bn{i}.gamma"],
                        p[f"bn{i}.beta"],
                        self.buffers[f"bn{i}.running_mean"],
                        self.buffers[f"bn{i}.running_var"],
                        momentum=self.config.bn_momentum,
                        training=training,
                    )
                    h = prelu(h, p[f"act{i}.slope"])
            return h
        h = x
        for i, nh in enumerate(self.config.heads):
            last = i == 2
            h = gat_forward(
                h,
                graph.edges,
                p[f"gat{i}.weight"],
                p[f"gat{i}.att"],
                heads=nh,
                combine="mean" if last else "concat",
                skip_weight=p[f"gat{i}.skip_weight"],
                skip_bias=p[f"gat{i}.skip_bias"],
            )
            if not last:
                h = elu(h)
        return h

    def state_arrays(self):
        """``(name, kind, array)`` triples in checkpoint order."""
        items = [(k, "param", v.data) for k, v in self.params.items()]
        items += [(k, "buffer", v) for k, v in self.buffers.items()]
        return items

    def copy(self):
        enc = Encoder(self.config)
        for k, v in self.params.items():
            enc._add(k, v.data)
        enc.buffers = {k: v.copy() for k, v in self.buffers.items()}
        return enc


def save_checkpoint(encoder, path, extra=None):
    path = Path(path)
    items = encoder.state_arrays()
    header = {
        "format_version": CHECKPOINT_VERSION,
        "encoder": encoder.config.to_dict(),
        "manifest": [{"name": n, "shape": list(a.shape), "kind": k} for n, k, a in items],
    }
    if extra:
        header["extra"] = extra
    with path.open("wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for _, _, arr in items:
            fh.write(np.ascontiguousarray(arr, dtype=_F64).tobytes())
    return path


def load_checkpoint(path):
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"missing checkpoint {path}")
    raw = path.read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise CheckpointError(f"{path}: no JSON header")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
    except ValueError as exc:
        raise CheckpointError(f"{path}: malformed header ({exc})") from None
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {header.get('format_version')!r}")
    enc = Encoder(EncoderConfig.from_dict(header["encoder"]))
    offset = nl + 1
    for entry in header["manifest"]:
        shape = tuple(entry["shape"])
        nbytes = int(np.prod(shape, dtype=np.int64)) * _F64.itemsize
        if offset + nbytes > len(raw):
            raise CheckpointError(f"{path}: payload truncated at {entry['name']}")
        arr = np.frombuffer(raw, dtype=_F64, count=nbytes // 8, offset=offset).reshape(shape).copy()
        offset += nbytes
        if entry["kind"] == "param":
            enc._add(entry["name"], arr)
        else:
            enc.buffers[entry["name"]] = arr
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes after payload")
    return enc, header
