"""Pseudo-Huber metric and the epoch-adaptive guide/iterate loss.

Functions accept either single vectors or batches of row vectors. Batched
losses return the per-row values; :func:`batch_adaptive_loss` averages them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from udddm._validation import check_int, check_positive, check_same_shape

# defaults for the two schedule families
C_VP = 0.00014
C_VE = 0.00015


@dataclass(frozen=True)
class AdaptiveWeights:
    n: int
    w_guide: float
    w_iter: float


def adaptive_weights(n: int) -> AdaptiveWeights:
    """Guide weight ``1/(n+1)`` and iterate weight ``1 - 1/(n+1)`` for epoch ``n``."""
    n = check_int(n, "n", minimum=0)
    w_guide = 1.0 / (n + 1)
    return AdaptiveWeights(n, w_guide, 1.0 - w_guide)


def _diff(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    check_same_shape(x, y, "x and y")
    return x - y


def pseudo_huber(x, y, c: float):
    """``sqrt(||x - y||^2 + c^2) - c`` along the last axis.

    Evaluated as ``u^2 / (sqrt(u^2 + c^2) + c)`` to avoid cancellation when
    ``u = ||x - y||`` is much smaller than ``c``.
    """
    c = check_positive(c, "c")
    sq = np.sum(_diff(x, y) ** 2, axis=-1)
    return sq / (np.sqrt(sq + c * c) + c)


def pseudo_huber_grad(x, y, c: float) -> np.ndarray:
    """Gradient of :func:`pseudo_huber` with respect to ``x``."""
    c = check_positive(c, "c")
    d = _diff(x, y)
    denom = np.sqrt(np.sum(d * d, axis=-1, keepdims=True) + c * c)
    return d / denom


def squared_l2(x, y, c: float | None = None):
    """Baseline metric, exposed for contract tests only."""
    return np.sum(_diff(x, y) ** 2, axis=-1)


def l1(x, y, c: float | None = None):
    return np.sum(np.abs(_diff(x, y)), axis=-1)


def adaptive_loss(pred, x0_true, x0_est, n: int, c: float):
    """Weighted mix of the guiding and iterative pseudo-Huber terms.

    Returns ``(value, grad_pred)``. Both targets are constants, so the
    gradient is taken only with respect to ``pred``. For batched inputs the
    value is a per-row array.
    """
    w = adaptive_weights(n)
    pred = np.asarray(pred, dtype=np.float64)
    check_same_shape(pred, np.asarray(x0_est), "pred and x0_est")
    value = w.w_guide * pseudo_huber(pred, x0_true, c)
    grad = w.w_guide * pseudo_huber_grad(pred, x0_true, c)
    if w.w_iter > 0.0:
        value = value + w.w_iter * pseudo_huber(pred, x0_est, c)
        grad = grad + w.w_iter * pseudo_huber_grad(pred, x0_est, c)
    return value, grad


@dataclass
class BatchLoss:
    """Minibatch averages of the two loss components and their mix."""

    guide: float
    iterate: float
    total: float
    grad_pred: np.ndarray


def batch_adaptive_loss(pred, x0_true, x0_est, n: int, c: float) -> BatchLoss:
    """Minibatch mean of :func:`adaptive_loss`; ``grad_pred`` is d(mean)/d(pred)."""
    pred = np.atleast_2d(np.asarray(pred, dtype=np.float64))
    x0_true = np.atleast_2d(x0_true)
    x0_est = np.atleast_2d(x0_est)
    m = pred.shape[0]
    w = adaptive_weights(n)
    guide = pseudo_huber(pred, x0_true, c)
    iterate = pseudo_huber(pred, x0_est, c)
    g = w.w_guide * pseudo_huber_grad(pred, x0_true, c)
    if w.w_iter > 0.0:
        g = g + w.w_iter * pseudo_huber_grad(pred, x0_est, c)
    lg, li = float(np.mean(guide)), float(np.mean(iterate))
    total = float(np.mean(w.w_guide * guide + w.w_iter * iterate))
    return BatchLoss(lg, li, total, g / m)
