"""Central finite-difference gradient checking."""

from __future__ import annotations

import numpy as np

__all__ = ["numerical_grad", "relative_error", "check_gradients"]


def numerical_grad(fn, param, step=1e-5):
    """Central differences of scalar ``fn()`` w.r.t. every entry of ``param.data``."""
    grad = np.zeros_like(param.data)
    flat, gflat = param.data.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        up = fn()
        flat[i] = orig - step
        down = fn()
        flat[i] = orig
        gflat[i] = (up - down) / (2.0 * step)
    return grad


def relative_error(analytic, numeric, floor=1e-5):
    """``max|a - n| / max(max|a|, max|n|, floor)`` over one parameter tensor.

    ``floor`` keeps structurally zero gradients (e.g. a bias the loss is
    invariant to) from dividing finite-difference noise by itself.
    """
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), floor)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)


def check_gradients(loss_fn, params, step=1e-5):
    """Compare backprop against finite differences for every parameter.

    ``loss_fn()`` must rebuild the graph and return a scalar Tensor. Returns
    ``{name: relative_error}``.
    """
    for p in params:
        p.zero_grad()
    loss_fn().backward()
    analytic = {id(p): (np.zeros_like(p.data) if p.grad is None else p.grad.copy()) for p in params}
    errors = {}
    for i, p in enumerate(params):
        numeric = numerical_grad(lambda: loss_fn().item(), p, step)
        errors[getattr(p, "name", None) or f"param{i}"] = relative_error(analytic[id(p)], numeric)
    return errors
