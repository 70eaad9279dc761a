"""Linear evaluation of frozen embeddings with an l2-regularized logistic regression.

The probe is trained by full-batch AdamW for a fixed number of steps, with
the regularization strength acting as decoupled weight decay on the weight
matrix. Probes for every value of a regularization grid are fitted together
as one stacked array, which keeps a 21-point grid cheap.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ContractError, DegenerateLabelsError, DimensionError
from .optim import BETA1, BETA2, EPS

__all__ = [
    "DENSE_GRID",
    "COARSE_GRID",
    "LinearProbe",
    "ProbeReport",
    "fit_probe",
    "fit_probes",
    "score",
    "reg_grid_search",
    "evaluate_embeddings",
]

DENSE_GRID = tuple(2.0**i for i in range(-10, 11))
COARSE_GRID = tuple(2.0**i for i in range(-10, 11, 2))

PROBE_STEPS = 1000
PROBE_LR = 0.01
METRICS = ("accuracy", "micro_f1")


@dataclass
class LinearProbe:
    weight: np.ndarray
    bias: np.ndarray
    reg: float
    multilabel: bool
    trained: bool = False
    initial_loss: float = float("nan")
    final_loss: float = float("nan")

    def logits(self, z):
        z = np.asarray(z, dtype=np.float64)
        if z.shape[1] != self.weight.shape[0]:
            raise DimensionError(f"embeddings have {z.shape[1]} dims, probe expects {self.weight.shape[0]}")
        return z @ self.weight + self.bias

    def predict(self, z):
        """Class ids, or a 0/1 matrix thresholded at sigmoid 0.5 for multilabel."""
        out = self.logits(z)
        if self.multilabel:
            return (out > 0.0).astype(np.uint8)
        return np.argmax(out, axis=1)


def _log_softmax(x):
    m = x.max(axis=-1, keepdims=True)
    s = x - m
    return s - np.log(np.exp(s).sum(axis=-1, keepdims=True))


def _loss_and_grad(x, y, w, b, multilabel):
    # w: (G, d, C), b: (G, C); returns per-probe mean loss and gradients.
    logits = np.einsum("nd,gdc->gnc", x, w) + b[:, None, :]
    n = x.shape[0]
    if multilabel:
        loss = np.logaddexp(0.0, logits) - y * logits
        loss = loss.sum(axis=(1, 2)) / n
        resid = 1.0 / (1.0 + np.exp(-logits)) - y
    else:
        logp = _log_softmax(logits)
        loss = -(logp * y).sum(axis=(1, 2)) / n
        resid = np.exp(logp) - y
    gw = np.einsum("nd,gnc->gdc", x, resid) / n
    gb = resid.sum(axis=1) / n
    return loss, gw, gb


def _targets(y, idx, multilabel, num_classes):
    y = np.asarray(y)
    if multilabel:
        return y[idx].astype(np.float64), y.shape[1]
    c = int(num_classes if num_classes is not None else y.max() + 1)
    return np.eye(c)[y[idx]], c


def fit_probes(z, y, train_idx, regs, multilabel=False, num_classes=None,
               steps=PROBE_STEPS, lr=PROBE_LR, seed=0):
    """Fit one probe per value in ``regs`` from a shared initialization."""
    z = np.asarray(z, dtype=np.float64)
    train_idx = np.asarray(train_idx, dtype=np.int64)
    if len(train_idx) == 0:
        raise ContractError("empty training index set")
    if not multilabel and len(np.unique(np.asarray(y)[train_idx])) < 2:
        raise DegenerateLabelsError("training split contains a single class")
    if any(r < 0 for r in regs):
        raise ContractError("regularization strength must be non-negative")
    x = z[train_idx]
    t, c = _targets(y, train_idx, multilabel, num_classes)
    g, d = len(regs), x.shape[1]

    rng = np.random.default_rng(seed)
    w0 = rng.normal(0.0, 0.01, size=(d, c))
    w = np.broadcast_to(w0, (g, d, c)).copy()
    b = np.zeros((g, c))
    decay = np.maximum(0.0, 1.0 - lr * np.asarray(regs, dtype=np.float64))[:, None, None]
    mw, vw = np.zeros_like(w), np.zeros_like(w)
    mb, vb = np.zeros_like(b), np.zeros_like(b)

    initial, _, _ = _loss_and_grad(x, t, w, b, multilabel)
    for step in range(1, steps + 1):
        _, gw, gb = _loss_and_grad(x, t, w, b, multilabel)
        corr1, corr2 = 1.0 - BETA1**step, 1.0 - BETA2**step
        w *= decay
        mw = BETA1 * mw + (1 - BETA1) * gw
        vw = BETA2 * vw + (1 - BETA2) * gw * gw
        w -= lr * (mw / corr1) / (np.sqrt(vw / corr2) + EPS)
        mb = BETA1 * mb + (1 - BETA1) * gb
        vb = BETA2 * vb + (1 - BETA2) * gb * gb
        b -= lr * (mb / corr1) / (np.sqrt(vb / corr2) + EPS)
    final, _, _ = _loss_and_grad(x, t, w, b, multilabel)

    return [
        LinearProbe(
            weight=w[i].copy(),
            bias=b[i].copy(),
            reg=float(regs[i]),
            multilabel=multilabel,
            trained=steps > 0,
            initial_loss=float(initial[i]),
            final_loss=float(final[i]),
        )
        for i in range(g)
    ]


def fit_probe(z, y, train_idx, reg, multilabel=False, num_classes=None,
              steps=PROBE_STEPS, lr=PROBE_LR, seed=0):
    return fit_probes(z, y, train_idx, [reg], multilabel, num_classes, steps, lr, seed)[0]


def score(probe, z, y, idx, metric="accuracy"):
    """Accuracy (argmax, or per-entry for multilabel) or pooled micro-F1 on ``idx``."""
    idx = np.asarray(idx, dtype=np.int64)
    if len(idx) == 0:
        raise ContractError("cannot score an empty index set")
    if metric not in METRICS:
        raise ContractError(f"unknown metric {metric!r}; choose from {METRICS}")
    y = np.asarray(y)[idx]
    pred = probe.predict(np.asarray(z)[idx])
    if metric == "accuracy":
        return float(np.mean(pred == y))
    c = probe.weight.shape[1]
    if probe.multilabel:
        p, t = pred.astype(bool), y.astype(bool)
    else:
        p, t = np.eye(c, dtype=bool)[pred], np.eye(c, dtype=bool)[y]
    tp = int(np.sum(p & t))
    fp = int(np.sum(p & ~t))
    fn = int(np.sum(~p & t))
    if tp + fp + fn == 0:
        return 1.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


@dataclass
class ProbeReport:
    metric: str
    test_scores: list
    val_scores: list
    regs: list
    mean: float
    std: float
    val_mean: float

    def to_dict(self):
        return asdict(self)


def _mean_std(values):
    values = [float(v) for v in values]
    mean = math.fsum(values) / len(values)
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / len(values))
    return mean, std


def _report(metric, test, val, regs):
    mean, std = _mean_std(test)
    val_mean, _ = _mean_std(val)
    return ProbeReport(metric, list(test), list(val), list(regs), mean, std, val_mean)


def reg_grid_search(z, y, split, grid=DENSE_GRID, metric="accuracy", multilabel=False,
                    num_classes=None, steps=PROBE_STEPS, seed=0):
    """Pick the regularization with the best validation metric (ties -> larger)."""
    grid = sorted(set(float(g) for g in grid), reverse=True)
    if not grid:
        raise ContractError("regularization grid is empty")
    probes = fit_probes(z, y, split.train, grid, multilabel, num_classes, steps, seed=seed)
    best, best_val = None, -math.inf
    for probe in probes:
        v = score(probe, z, y, split.val, metric)
        if v > best_val:
            best, best_val = probe, v
    test = score(best, z, y, split.test, metric)
    return best.reg, _report(metric, [test], [best_val], [best.reg])


def evaluate_embeddings(z, y, splits, metric="accuracy", grid=DENSE_GRID, multilabel=False,
                        num_classes=None, steps=PROBE_STEPS, seed=0):
    """Grid-searched probe per split; mean and population std of test metrics."""
    if not splits:
        raise ContractError("need at least one split")
    test, val, regs = [], [], []
    for split in splits:
        reg, rep = reg_grid_search(z, y, split, grid, metric, multilabel, num_classes, steps, seed)
        test.append(rep.test_scores[0])
        val.append(rep.val_scores[0])
        regs.append(reg)
    return _report(metric, test, val, regs)
