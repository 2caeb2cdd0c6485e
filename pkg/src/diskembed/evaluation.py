"""Pair scoring, threshold tuning and F1 reports.

Scores are protrusions of the ancestor disk over the descendant disk; a pair
is predicted related iff ``score <= tau``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import geometry
from .errors import ConfigError, InvalidArgumentError

CSV_FIELDS = ("split", "tau", "precision", "recall", "f1", "tp", "fp", "tn", "fn")


@dataclass(frozen=True)
class EvalReport:
    split: str
    tau: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def to_csv_row(self) -> str:
        return ",".join(_fmt(getattr(self, k)) for k in CSV_FIELDS)

    @staticmethod
    def csv_header() -> str:
        return ",".join(CSV_FIELDS)


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def score_pairs(table, pairs) -> np.ndarray:
    """Energy of each ``(i, j)`` pair: ``d(x_j, x_i) - (r_j - r_i)``."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    n = table.n_nodes
    if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
        raise InvalidArgumentError(f"pair index out of range for {n} nodes")
    i, j = pairs[:, 0], pairs[:, 1]
    d = geometry.distance_rows(table.space, table.centers[j], table.centers[i])
    # grouped so that negating radii and swapping the pair is bitwise exact
    return d - (table.radii[j] - table.radii[i])


def f1_at(scores, labels, tau: float, split: str = "") -> EvalReport:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape:
        raise InvalidArgumentError(f"{len(scores)} scores but {len(labels)} labels")
    pred = scores <= tau
    tp = int(np.sum(pred & labels))
    fp = int(np.sum(pred & ~labels))
    fn = int(np.sum(~pred & labels))
    tn = int(np.sum(~pred & ~labels))
    # zero predicted positives gives precision 0 by convention
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return EvalReport(split, float(tau), precision, recall, f1, tp, fp, tn, fn)


def tune_threshold(scores, labels) -> float:
    """Threshold maximizing F1 under ``score <= tau``.

    Candidates are the midpoints between consecutive distinct sorted scores,
    plus the largest score itself (the all-positive predictor). The smallest
    maximizing candidate wins.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape:
        raise InvalidArgumentError(f"{len(scores)} scores but {len(labels)} labels")
    if labels.all() or not labels.any():
        raise ConfigError("threshold tuning needs at least one positive and one negative label")
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    y = labels[order]
    distinct, first = np.unique(s, return_index=True)
    # number of pairs with score <= distinct[k]
    upto = np.append(first[1:], len(s))
    cum_tp = np.cumsum(y)[upto - 1]
    n_pos = int(y.sum())
    predicted = upto
    f1 = 2.0 * cum_tp / (predicted + n_pos)
    best = int(np.argmax(f1))
    if best == len(distinct) - 1:
        return float(distinct[-1])
    return float(0.5 * (distinct[best] + distinct[best + 1]))


def evaluate_split(table, pos, neg, tau: float, split: str = "") -> EvalReport:
    scores = np.concatenate([score_pairs(table, pos), score_pairs(table, neg)])
    labels = np.concatenate([np.ones(len(pos), bool), np.zeros(len(neg), bool)])
    return f1_at(scores, labels, tau, split)


def tune_on(table, pos, neg) -> float:
    scores = np.concatenate([score_pairs(table, pos), score_pairs(table, neg)])
    labels = np.concatenate([np.ones(len(pos), bool), np.zeros(len(neg), bool)])
    return tune_threshold(scores, labels)
