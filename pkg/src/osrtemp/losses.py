"""Temperature-scaled losses returning both the value and d(loss)/d(outputs).

Contrastive losses expect unit-norm rows (the projection head normalizes),
so cosine similarity is a plain dot product here.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError, ShapeError


@dataclass
class MultiViewBatch:
    """Two augmented views per source sample, interleaved row by row.

    Rows ``2k`` and ``2k + 1`` (0-indexed) both come from source sample ``k``.
    """

    views: np.ndarray
    labels: np.ndarray
    pair_index: np.ndarray

    def __post_init__(self):
        n = len(self.labels)
        if n < 4 or n % 2:
            raise ContractError(f"a multi-view batch needs an even number >= 4 of rows, got {n}")
        if self.views.shape[0] != n or len(self.pair_index) != n:
            raise ShapeError("views, labels and pair_index disagree on length")
        if np.any(self.labels[0::2] != self.labels[1::2]):
            raise ContractError("paired views carry different labels")


@dataclass
class LossOutput:
    value: float
    d_outputs: np.ndarray


def _check_tau(tau):
    if not tau > 0:
        raise ValueError(f"temperature must be positive, got {tau}")


def ce_loss(logits, labels, tau) -> LossOutput:
    """Mean cross-entropy of ``softmax(logits / tau)`` against integer labels."""
    _check_tau(tau)
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    b, c = logits.shape
    if labels.shape != (b,):
        raise ShapeError(f"expected {b} labels, got shape {labels.shape}")
    if b == 0:
        raise ValueError("empty batch")
    if labels.min() < 0 or labels.max() >= c:
        raise ValueError(f"labels must lie in [0, {c})")
    s = logits / tau
    s = s - s.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(s).sum(axis=1))
    rows = np.arange(b)
    log_p = s[rows, labels] - log_norm
    probs = np.exp(s - log_norm[:, None])
    probs[rows, labels] -= 1.0
    return LossOutput(float(-log_p.mean()), probs / (b * tau))


def _contrastive(features, weights, tau) -> LossOutput:
    """Weighted contrastive log-likelihood over all non-anchor rows.

    ``weights[i]`` must be zero on the diagonal and sum to one along each
    row; the per-anchor loss is ``-sum_j w_ij * log softmax_{a != i}(s_ia / tau)[j]``.
    """
    n = features.shape[0]
    logits = features @ features.T / tau
    off = ~np.eye(n, dtype=bool)
    masked = np.where(off, logits, -np.inf)
    shifted = masked - masked.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    denom = expd.sum(axis=1, keepdims=True)
    log_prob = np.where(off, shifted - np.log(denom), 0.0)
    value = -np.sum(weights * log_prob) / n
    # d value / d logits_ij = (softmax_ij - w_ij) / n, then through s_ij = f_i . f_j / tau
    g = (expd / denom - weights) / (n * tau)
    d_features = (g + g.T) @ features
    return LossOutput(float(value), d_features)


def _prepare(features, labels, tau):
    _check_tau(tau)
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.ndim != 2 or labels.shape != (features.shape[0],):
        raise ShapeError("features must be (n, dim) with one label per row")
    if features.shape[0] < 2:
        raise ContractError("contrastive losses need at least two rows")
    same = labels[:, None] == labels[None, :]
    np.fill_diagonal(same, False)
    return features, labels, same


def supcon_loss(projections, labels, tau) -> LossOutput:
    """Supervised contrastive loss averaged over anchors and their positives."""
    features, _, positives = _prepare(projections, labels, tau)
    counts = positives.sum(axis=1, keepdims=True)
    if np.any(counts == 0):
        raise ContractError("an anchor has no positive in the batch")
    return _contrastive(features, positives / counts, tau)


def supcon_ls_loss(projections, labels, tau, alpha, num_classes) -> LossOutput:
    """Label-smoothed supervised contrastive loss.

    Same-class partners get weight ``1 - alpha`` and every other row gets
    ``alpha / (num_classes - 1)``; each anchor's weights are normalized to sum
    to one. ``alpha = 0`` reproduces :func:`supcon_loss` exactly.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")
    if alpha > 0 and num_classes < 2:
        raise ValueError("label smoothing needs at least two classes")
    features, _, positives = _prepare(projections, labels, tau)
    weights = (1.0 - alpha) * positives
    if alpha > 0:
        negatives = ~positives
        np.fill_diagonal(negatives, False)
        weights = weights + (alpha / (num_classes - 1)) * negatives
    norm = weights.sum(axis=1, keepdims=True)
    if np.any(norm == 0):
        raise ContractError("an anchor has zero total target weight")
    return _contrastive(features, weights / norm, tau)
