"""Open-set scoring and evaluation metrics.

Known samples are the positive class throughout: a good open-set model gives
them a higher max-logit score than samples of unseen classes.
"""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

UNKNOWN = -1
SCORES_HEADER = ["sample_id", "true_label", "predicted_class", "score"]


@dataclass(frozen=True)
class ScoredPrediction:
    predicted_class: int
    score: float
    true_label: int = UNKNOWN


@dataclass
class EvalResult:
    accuracy: float
    auroc: float
    oscr: float
    n_known: int
    n_unknown: int

    def to_dict(self):
        return asdict(self)


def max_logit_score(logits_row):
    """Return ``(argmax, max)`` of a logit vector; ties go to the lowest index."""
    row = np.asarray(logits_row, dtype=np.float64)
    if row.ndim != 1 or row.size == 0:
        raise ValueError("expected a non-empty 1-d logit vector")
    k = int(np.argmax(row))
    return k, float(row[k])


def max_logit_scores(logits):
    """Vectorized :func:`max_logit_score` over the rows of ``logits``."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 2 or logits.shape[1] == 0:
        raise ValueError("expected a (n, C) logit matrix with C >= 1")
    pred = np.argmax(logits, axis=1)
    return pred, logits[np.arange(len(pred)), pred]


def score_predictions(logits, true_labels):
    pred, scores = max_logit_scores(logits)
    return [ScoredPrediction(int(p), float(s), int(t))
            for p, s, t in zip(pred, scores, true_labels)]


def accuracy(preds) -> float:
    if len(preds) == 0:
        raise ValueError("accuracy of an empty prediction list")
    if any(p.true_label == UNKNOWN for p in preds):
        raise ValueError("accuracy is defined on known samples only")
    return sum(p.predicted_class == p.true_label for p in preds) / len(preds)


def auroc(scores_known, scores_unknown) -> float:
    """Mann-Whitney estimate of P(known > unknown) + 0.5 * P(tie), via mid-ranks."""
    known = np.asarray(scores_known, dtype=np.float64)
    unknown = np.asarray(scores_unknown, dtype=np.float64)
    n, m = known.size, unknown.size
    if n == 0 or m == 0:
        raise ValueError("AUROC needs at least one known and one unknown score")
    ranks = rankdata(np.concatenate([known, unknown]))
    u = ranks[:n].sum() - n * (n + 1) / 2.0
    return float(u / (n * m))


def oscr_curve(known_preds, unknown_scores):
    """(FPR, CCR) points of the open-set classification rate curve.

    Thresholds sweep the observed scores from high to low; a sample counts at
    threshold ``t`` when its score is strictly above ``t``. The curve starts at
    ``(0, 0)`` and is closed with ``(1, accuracy)``.
    """
    if len(known_preds) == 0 or len(unknown_scores) == 0:
        raise ValueError("OSCR needs known and unknown samples")
    k_scores = np.array([p.score for p in known_preds], dtype=np.float64)
    correct = np.array([p.predicted_class == p.true_label for p in known_preds])
    u_scores = np.sort(np.asarray(unknown_scores, dtype=np.float64))
    c_scores = np.sort(k_scores[correct])

    thresholds = np.unique(np.concatenate([k_scores, u_scores]))[::-1]
    ccr = (c_scores.size - np.searchsorted(c_scores, thresholds, side="right")) / k_scores.size
    fpr = (u_scores.size - np.searchsorted(u_scores, thresholds, side="right")) / u_scores.size
    fpr = np.concatenate([[0.0], fpr, [1.0]])
    ccr = np.concatenate([[0.0], ccr, [correct.mean()]])
    return fpr, ccr


def oscr(known_preds, unknown_scores) -> float:
    fpr, ccr = oscr_curve(known_preds, unknown_scores)
    return float(np.sum(np.diff(fpr) * (ccr[1:] + ccr[:-1]) / 2.0))


def improvement(metric_neg, metric_consts) -> float:
    """Scheduled-run metric minus the best constant-temperature baseline (can be negative)."""
    if len(metric_consts) == 0:
        raise ValueError("need at least one constant-temperature baseline")
    return metric_neg - max(metric_consts)


def evaluate_predictions(known_preds, unknown_preds) -> EvalResult:
    unknown_scores = [p.score for p in unknown_preds]
    return EvalResult(
        accuracy=accuracy(known_preds),
        auroc=auroc([p.score for p in known_preds], unknown_scores),
        oscr=oscr(known_preds, unknown_scores),
        n_known=len(known_preds),
        n_unknown=len(unknown_preds),
    )


def write_scores_csv(path, known_preds, unknown_preds) -> None:
    """Known rows first, then unknown rows (``true_label = -1``), numbered from 0."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SCORES_HEADER)
        for i, p in enumerate([*known_preds, *unknown_preds]):
            writer.writerow([i, p.true_label, p.predicted_class, repr(float(p.score))])


def read_scores_csv(path):
    """Inverse of :func:`write_scores_csv`: returns ``(known_preds, unknown_preds)``."""
    known, unknown = [], []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != SCORES_HEADER:
            raise ValueError(f"unexpected scores header {reader.fieldnames}")
        for row in reader:
            p = ScoredPrediction(int(row["predicted_class"]), float(row["score"]),
                                 int(row["true_label"]))
            (unknown if p.true_label == UNKNOWN else known).append(p)
    return known, unknown


def load_scores(path) -> EvalResult:
    return evaluate_predictions(*read_scores_csv(Path(path)))
