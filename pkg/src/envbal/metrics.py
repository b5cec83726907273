"""Confusion-matrix metrics, class-variance diagnostics and Friedman/Holm comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np
from scipy.special import gammaincc
from scipy.stats import rankdata

__all__ = [
    "ConfusionMatrix",
    "MetricSet",
    "RankTable",
    "confusion",
    "metric_set",
    "class_variances",
    "chi2_sf",
    "friedman",
    "holm",
    "mean_rankings",
    "holm_vs_best",
]

METRIC_NAMES = ("acc", "precision", "recall", "f_measure", "auc", "g_mean")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with the minority class as the positive class."""

    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise ValueError(f"negative count in {self}")
        if self.tp + self.fn + self.fp + self.tn < 1:
            raise ValueError("empty confusion matrix")


@dataclass(frozen=True)
class MetricSet:
    acc: float
    precision: float
    recall: float
    f_measure: float
    auc: float
    g_mean: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def confusion(predictions: Sequence, truth: Sequence, positive) -> ConfusionMatrix:
    pred = np.asarray(predictions)
    true = np.asarray(truth)
    if pred.shape != true.shape or pred.ndim != 1:
        raise ValueError(f"length mismatch: {pred.shape} predictions vs {true.shape} labels")
    if pred.size == 0:
        raise ValueError("no predictions")
    labels = set(true.tolist()) | set(pred.tolist())
    if len(labels - {positive}) > 1:
        raise ValueError(f"more than one non-positive label: {sorted(map(str, labels - {positive}))}")
    pp, tp_ = pred == positive, true == positive
    return ConfusionMatrix(
        tp=int(np.sum(pp & tp_)),
        fn=int(np.sum(~pp & tp_)),
        fp=int(np.sum(pp & ~tp_)),
        tn=int(np.sum(~pp & ~tp_)),
    )


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def metric_set(cm: ConfusionMatrix) -> MetricSet:
    """All six metrics; any ratio with a zero denominator is 0.

    ``auc`` is (sensitivity + specificity) / 2 over hard predictions, i.e. balanced
    accuracy, not an area under a ROC curve built from scores.
    """
    tp, fn, fp, tn = cm.tp, cm.fn, cm.fp, cm.tn
    precision = _ratio(tp, tp + fp)
    sens = _ratio(tp, tp + fn)
    spec = _ratio(tn, tn + fp)
    return MetricSet(
        acc=(tp + tn) / (tp + fn + fp + tn),
        precision=precision,
        recall=sens,
        f_measure=_ratio(2 * precision * sens, precision + sens),
        auc=(sens + spec) / 2,
        g_mean=math.sqrt(sens * spec),
    )


def class_variances(minority: np.ndarray, majority: np.ndarray) -> tuple[float, float]:
    """(intra, inter): mean per-feature population variance of the minority class, and
    mean per-feature squared gap between the two class means."""
    A = np.atleast_2d(np.asarray(minority, dtype=float))
    B = np.atleast_2d(np.asarray(majority, dtype=float))
    if A.size == 0 or B.size == 0:
        raise ValueError("class_variances needs two nonempty sets")
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    intra = float(np.mean(A.var(axis=0)))
    inter = float(np.mean((A.mean(axis=0) - B.mean(axis=0)) ** 2))
    return intra, inter


# ---------------------------------------------------------------------------
# rank-based comparison


@dataclass(frozen=True)
class RankTable:
    """Scores indexed [method, dataset]; higher is better."""

    methods: tuple[str, ...]
    datasets: tuple[str, ...]
    scores: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.scores, dtype=float)
        if S.shape != (len(self.methods), len(self.datasets)):
            raise ValueError(f"scores shape {S.shape} does not match {len(self.methods)} methods x {len(self.datasets)} datasets")
        object.__setattr__(self, "scores", S)

    @property
    def ranks(self) -> np.ndarray:
        """Per-dataset ranks (1 = best), ties averaged; same shape as ``scores``."""
        return rankdata(-self.scores, method="average", axis=0)


def mean_rankings(rt: RankTable) -> dict[str, float]:
    return {m: float(r) for m, r in zip(rt.methods, rt.ranks.mean(axis=1))}


def chi2_sf(x: float, df: int) -> float:
    """Upper tail of the chi-squared distribution via the regularized incomplete gamma."""
    if x <= 0:
        return 1.0
    return float(gammaincc(df / 2.0, x / 2.0))


def friedman(rt: RankTable) -> tuple[float, float]:
    k, N = rt.scores.shape
    if k < 2 or N < 2:
        raise ValueError(f"Friedman test needs >= 2 methods and >= 2 datasets, got {k} x {N}")
    R = rt.ranks.mean(axis=1)
    stat = 12.0 * N / (k * (k + 1)) * (float(np.sum(R**2)) - k * (k + 1) ** 2 / 4.0)
    stat = max(stat, 0.0)
    return stat, chi2_sf(stat, k - 1)


def holm(p_values: Sequence[float], alpha: float = 0.05) -> list[bool]:
    """Step-down Holm procedure; decisions are returned in input order."""
    p = np.asarray(p_values, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    reject = [False] * m
    if alpha <= 0:
        return reject
    for i, j in enumerate(np.argsort(p, kind="stable")):
        if p[j] <= alpha / (m - i):
            reject[j] = True
        else:
            break
    return reject


def holm_vs_best(rt: RankTable, alpha: float = 0.05) -> tuple[str, list[dict]]:
    """Compare every method with the best-ranked one (z-test on mean ranks), Holm-adjusted."""
    k, N = rt.scores.shape
    R = rt.ranks.mean(axis=1)
    best = int(np.argmin(R))
    se = math.sqrt(k * (k + 1) / (6.0 * N))
    rows = []
    for i in range(k):
        if i == best:
            continue
        z = (R[i] - R[best]) / se
        rows.append({"method": rt.methods[i], "mean_rank": float(R[i]), "z": z, "p": math.erfc(abs(z) / math.sqrt(2.0))})
    for row, rej in zip(rows, holm([r["p"] for r in rows], alpha)):
        row["reject"] = rej
    return rt.methods[best], rows
