"""Differentiable graph layers: GCN propagation, batch norm, activations, GAT."""

from __future__ import annotations

import numpy as np

from .autograd import Tensor, as_tensor, concat_cols, segment_sum, spmm, standardize_columns
from .errors import DimensionError

__all__ = [
    "gcn_forward",
    "batch_norm",
    "prelu",
    "elu",
    "attention_index",
    "gat_forward",
    "LEAKY_SLOPE",
]

LEAKY_SLOPE = 0.2


def gcn_forward(x, adj, weight):
    """``adj @ (x @ weight)``; no bias, no activation."""
    x = as_tensor(x)
    if x.shape[1] != weight.shape[0]:
        raise DimensionError(f"features have {x.shape[1]} columns, weight expects {weight.shape[0]}")
    if adj.shape[0] != x.shape[0]:
        raise DimensionError(f"adjacency is {adj.shape}, features have {x.shape[0]} rows")
    return spmm(adj, x @ weight)


def batch_norm(x, gamma, beta, running_mean, running_var, momentum=0.01, training=True):
    """Per-column batch normalization.

    In training mode the batch mean and population variance are used and the
    running buffers are updated in place as
    ``running <- (1 - momentum) * running + momentum * batch``.
    """
    x = as_tensor(x)
    if x.shape[0] == 0:
        raise DimensionError("batch_norm on an empty batch")
    if gamma.shape[-1] != x.shape[1] or beta.shape[-1] != x.shape[1]:
        raise DimensionError("gamma/beta length differs from feature count")
    if training:
        xhat, mu, var = standardize_columns(x)
        running_mean *= 1.0 - momentum
        running_mean += momentum * mu
        running_var *= 1.0 - momentum
        running_var += momentum * var
    else:
        xhat, _, _ = standardize_columns(x, running_mean, running_var)
    return xhat * gamma + beta


def prelu(x, slope):
    """``x`` where ``x >= 0`` else ``slope * x``; ``slope`` is a 1x1 parameter."""
    x = as_tensor(x)
    pos = x.data >= 0
    a = slope.data.reshape(())

    def bw(g):
        gx = np.where(pos, g, a * g)
        ga = np.array(np.sum(np.where(pos, 0.0, g * x.data))).reshape(slope.shape)
        return gx, ga

    return Tensor(np.where(pos, x.data, a * x.data), parents=(x, slope), backward_fn=bw)


def elu(x):
    x = as_tensor(x)
    pos = x.data >= 0
    neg_exp = np.exp(np.minimum(x.data, 0.0))
    return Tensor(
        np.where(pos, x.data, neg_exp - 1.0),
        parents=(x,),
        backward_fn=lambda g: (np.where(pos, g, g * neg_exp),),
    )


def attention_index(edges, num_nodes):
    """``(target, source)`` arrays covering both edge directions plus self-loops."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    loops = np.arange(num_nodes)
    target = np.concatenate([edges[:, 0], edges[:, 1], loops])
    source = np.concatenate([edges[:, 1], edges[:, 0], loops])
    return target, source


def gat_forward(
    h,
    edges,
    weight,
    att,
    heads,
    combine="concat",
    skip_weight=None,
    skip_bias=None,
    return_attention=False,
):
    """Multi-head graph attention with an optional linear skip connection.

    ``weight`` is ``f_in x (heads * head_dim)``; ``att`` is
    ``(2 * head_dim) x heads`` whose top half scores the target node and
    bottom half the source node. For node ``i`` and head ``k``::

        alpha_ij = softmax_{j in N(i) + i} LeakyReLU(a_k . [W_k h_i || W_k h_j])
        out_i    = sum_j alpha_ij W_k h_j

    Heads are concatenated (``combine="concat"``) or averaged
    (``combine="mean"``); the skip term ``h @ skip_weight + skip_bias`` is
    added afterwards.
    """
    h = as_tensor(h)
    n, f_in = h.shape
    if weight.shape[0] != f_in:
        raise DimensionError(f"input has {f_in} features, weight expects {weight.shape[0]}")
    if weight.shape[1] % heads:
        raise DimensionError("weight columns are not divisible by head count")
    head_dim = weight.shape[1] // heads
    if att.shape != (2 * head_dim, heads):
        raise DimensionError(f"attention vector must be {(2 * head_dim, heads)}, got {att.shape}")
    if combine not in ("concat", "mean"):
        raise ValueError(f"unknown head combination {combine!r}")

    target, source = attention_index(edges, n)
    wh = h @ weight
    outs, alphas = [], []
    for k in range(heads):
        wh_k = wh[:, k * head_dim : (k + 1) * head_dim]
        a_k = att[:, k : k + 1]
        score_t = wh_k @ a_k[:head_dim]
        score_s = wh_k @ a_k[head_dim:]
        e = (score_t.take_rows(target) + score_s.take_rows(source)).leaky_relu(LEAKY_SLOPE)
        seg_max = np.full((n, 1), -np.inf)
        np.maximum.at(seg_max, target, e.data)
        ex = (e - seg_max[target]).exp()
        denom = segment_sum(ex, target, n)
        alpha = ex / denom.take_rows(target)
        outs.append(segment_sum(wh_k.take_rows(source) * alpha, target, n))
        alphas.append(alpha.data.ravel())

    if combine == "concat":
        out = outs[0] if heads == 1 else concat_cols(outs)
    else:
        out = outs[0]
        for o in outs[1:]:
            out = out + o
        out = out * (1.0 / heads)

    if skip_weight is not None:
        if skip_weight.shape != (f_in, out.shape[1]):
            raise DimensionError(f"skip weight must be {(f_in, out.shape[1])}, got {skip_weight.shape}")
        skip = h @ skip_weight
        if skip_bias is not None:
            skip = skip + skip_bias
        out = out + skip
    if return_attention:
        return out, (target, source, alphas)
    return out
