"""Binary classification metrics and Taylor-diagram statistics.

Class 1 is the positive class. Metrics whose denominator vanishes come back
as ``nan`` with an :class:`UndefinedMetricWarning`; they are never coerced
to zero.
"""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import DomainError

TAYLOR_BASIS = "actual labels vs continuous scores m"


class UndefinedMetricWarning(UserWarning):
    """A metric was requested where its denominator is zero."""


def _undefined(name: str, why: str) -> float:
    warnings.warn(f"{name} is undefined: {why}", UndefinedMetricWarning, stacklevel=3)
    return math.nan


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise DomainError("confusion counts must be non-negative")
        if self.total == 0:
            raise DomainError("confusion counts are all zero")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.tn + self.fp


def _labels(seq, name) -> np.ndarray:
    a = np.asarray(seq)
    if a.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional")
    if not np.all(np.isin(a, (0, 1))):
        raise DomainError(f"{name} labels must be 0 or 1")
    return a.astype(int)


def confusion(actual: Sequence[int], predicted: Sequence[int]) -> ConfusionCounts:
    a = _labels(actual, "actual")
    p = _labels(predicted, "predicted")
    if a.size == 0 or a.size != p.size:
        raise DomainError(f"need equal non-zero lengths, got {a.size} and {p.size}")
    return ConfusionCounts(
        tp=int(np.sum((a == 1) & (p == 1))),
        tn=int(np.sum((a == 0) & (p == 0))),
        fp=int(np.sum((a == 0) & (p == 1))),
        fn=int(np.sum((a == 1) & (p == 0))),
    )


def accuracy(c: ConfusionCounts) -> float:
    """Percentage of correct predictions."""
    if c.total == 0:
        raise DomainError("accuracy of an empty confusion matrix")
    return 100.0 * (c.tp + c.tn) / c.total


def sensitivity(c: ConfusionCounts) -> float:
    if c.tp + c.fn == 0:
        return _undefined("sensitivity", "no actual positives")
    return c.tp / (c.tp + c.fn)


def specificity(c: ConfusionCounts) -> float:
    if c.tn + c.fp == 0:
        return _undefined("specificity", "no actual negatives")
    return c.tn / (c.tn + c.fp)


def auc(actual: Sequence[int], scores: Sequence[float]) -> float:
    """Mann-Whitney AUC with ties counted one half."""
    a = _labels(actual, "actual")
    s = np.asarray(scores, dtype=float)
    if a.size != s.size or a.size == 0:
        raise DomainError("actual and scores need equal non-zero lengths")
    n_pos = int(a.sum())
    n_neg = a.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return _undefined("AUC", "only one class present")
    ranks = rankdata(s)  # average ranks give ties half credit
    u = ranks[a == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def gini(actual: Sequence[int], scores: Sequence[float]) -> float:
    """2 * AUC - 1."""
    area = auc(actual, scores)
    return math.nan if math.isnan(area) else 2.0 * area - 1.0


class TaylorStats(NamedTuple):
    std_actual: float
    std_pred: float
    r: float
    crmsd: float

    def identity_residual(self) -> float:
        """|cRMSD^2 - (sa^2 + sp^2 - 2 sa sp r)|; the correlation term vanishes with either sd."""
        cross = 0.0 if self.std_actual == 0 or self.std_pred == 0 else 2 * self.std_actual * self.std_pred * self.r
        return abs(self.crmsd**2 - (self.std_actual**2 + self.std_pred**2 - cross))


def taylor_stats(actual: Sequence[float], predicted: Sequence[float]) -> TaylorStats:
    """Population standard deviations, Pearson r and centered RMS difference."""
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.ndim != 1 or a.shape != p.shape or a.size < 2:
        raise DomainError("taylor_stats needs two equal-length series of at least 2 points")
    da = a - a.mean()
    dp = p - p.mean()
    sa = float(np.sqrt(np.mean(da**2)))
    sp = float(np.sqrt(np.mean(dp**2)))
    if sa == 0 or sp == 0:
        r = _undefined("correlation", "a series is constant")
    else:
        r = float(np.mean(da * dp) / (sa * sp))
        r = min(1.0, max(-1.0, r))
    crmsd = float(np.sqrt(np.mean((da - dp) ** 2)))
    return TaylorStats(sa, sp, r, crmsd)


def _num(x):
    return None if isinstance(x, float) and math.isnan(x) else x


@dataclass
class EvalReport:
    counts: ConfusionCounts
    cost: float
    acc: float
    sens: float
    spec: float
    gini: float
    taylor: TaylorStats
    per_sample: list = field(default_factory=list)

    @property
    def undefined(self) -> tuple:
        names = {"sens": self.sens, "spec": self.spec, "gini": self.gini, "taylor_r": self.taylor.r}
        return tuple(k for k, v in names.items() if math.isnan(v))

    def to_dict(self) -> dict:
        return {
            "n": self.counts.total,
            "counts": {"tp": self.counts.tp, "tn": self.counts.tn,
                       "fp": self.counts.fp, "fn": self.counts.fn},
            "cost": self.cost,
            "acc": self.acc,
            "sens": _num(self.sens),
            "spec": _num(self.spec),
            "gini": _num(self.gini),
            "taylor": {
                "basis": TAYLOR_BASIS,
                "std_actual": self.taylor.std_actual,
                "std_pred": self.taylor.std_pred,
                "r": _num(self.taylor.r),
                "crmsd": self.taylor.crmsd,
            },
            "undefined": list(self.undefined),
        }

    def samples_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "actual", "score", "predicted"])
        for i, (y, m, yhat) in enumerate(self.per_sample):
            w.writerow([i, y, repr(float(m)), yhat])
        return buf.getvalue()


def build_report(actual: Sequence[int], scores: Sequence[float]) -> EvalReport:
    """Every metric for one split, predicting 1 where ``score >= 0.5``."""
    y = _labels(actual, "actual")
    m = np.asarray(scores, dtype=float)
    if y.size != m.size or y.size == 0:
        raise DomainError("actual and scores need equal non-zero lengths")
    yhat = (m >= 0.5).astype(int)
    c = confusion(y, yhat)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UndefinedMetricWarning)
        sens, spec = sensitivity(c), specificity(c)
        g = gini(y, m)
        taylor = taylor_stats(y, m) if y.size >= 2 else TaylorStats(0.0, 0.0, math.nan, 0.0)
    return EvalReport(
        counts=c,
        cost=float(np.mean((m - y) ** 2)),
        acc=accuracy(c),
        sens=sens,
        spec=spec,
        gini=g,
        taylor=taylor,
        per_sample=[(int(a), float(s), int(p)) for a, s, p in zip(y, m, yhat)],
    )
