"""Repeated stratified hold-out evaluation of sampler + classifier pairs."""

from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from . import __version__
from .dataset import Dataset, Scaler, class_stats, stratified_split_indices
from .errors import ConfigError, EnvbalError
from .metrics import RankTable, confusion, friedman, holm_vs_best, mean_rankings, metric_set
from .sampler import BalanceConfig, balance

__all__ = [
    "HoldoutProtocol",
    "Classifier",
    "RepeatResult",
    "EvaluationReport",
    "derive_seed",
    "train_predict",
    "holdout_evaluate",
    "compare_methods",
    "write_report",
    "read_report",
]

REPORTED = ("acc", "auc", "f_measure", "g_mean")
_MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, index: int) -> int:
    """SplitMix64 finalizer over (master_seed, index); returns a 63-bit seed."""
    z = (master_seed * 0x9E3779B97F4A7C15 + (index + 1) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) >> 1


@dataclass(frozen=True)
class HoldoutProtocol:
    repeats: int = 10
    train_fraction: float = 0.7
    master_seed: int = 0
    normalize: bool = True

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if not 0 < self.train_fraction < 1:
            raise ConfigError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class Classifier:
    """Built-in base learners.

    ``knn``: majority vote of the ``knn_k`` nearest training rows, vote ties go to
    the minority class. ``linear_hinge``: linear model with a bias, trained by
    Pegasos-style stochastic subgradient steps on the regularized hinge loss.
    """

    kind: str = "knn"
    knn_k: int = 5
    reg: float = 1e-3
    epochs: int = 30
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", self.kind.replace("-", "_"))
        if self.kind not in ("knn", "linear_hinge"):
            raise ConfigError(f"unknown classifier {self.kind!r}")
        if self.knn_k < 1:
            raise ConfigError(f"knn_k must be >= 1, got {self.knn_k}")
        if not self.reg > 0 or self.epochs < 1:
            raise ConfigError("linear_hinge needs reg > 0 and epochs >= 1")


def _knn_predict(Xtr, pos, Xte, k):
    k = min(k, Xtr.shape[0])
    order = np.argsort(cdist(Xte, Xtr, "sqeuclidean"), axis=1, kind="stable")[:, :k]
    votes = pos[order].sum(axis=1)
    return 2 * votes >= k


def _hinge_fit(X, s, clf):
    """Pegasos on [X, 1]; ``s`` in {-1, +1}."""
    Xa = np.hstack([X, np.ones((X.shape[0], 1))])
    w = np.zeros(Xa.shape[1])
    rng = np.random.default_rng(clf.seed)
    step = 0
    for _ in range(clf.epochs):
        for i in rng.permutation(Xa.shape[0]):
            step += 1
            eta = 1.0 / (clf.reg * step)
            margin = s[i] * (Xa[i] @ w)
            w *= 1.0 - eta * clf.reg
            if margin < 1.0:
                w += eta * s[i] * Xa[i]
    return w


def train_predict(
    train: Dataset,
    test: Dataset | np.ndarray,
    clf: Classifier = Classifier(),
    positive: str | None = None,
) -> np.ndarray:
    """Fit ``clf`` on ``train`` and return predicted labels for the rows of ``test``.

    ``positive`` names the minority class; pass it when ``train`` has been
    balanced, since the class counts no longer identify it.
    """
    Xte = test.features if isinstance(test, Dataset) else np.atleast_2d(np.asarray(test, dtype=float))
    if Xte.shape[1] != train.d:
        raise ValueError(f"dimension mismatch: train has {train.d} features, test {Xte.shape[1]}")
    if positive is None:
        positive = class_stats(train).minority_label
    if positive not in train.class_names:
        raise ValueError(f"positive label {positive!r} not among training classes {train.class_names}")
    negative = next(c for c in train.class_names if c != positive)
    pos = train.labels == positive
    if clf.kind == "knn":
        hit = _knn_predict(train.features, pos, Xte, clf.knn_k)
    else:
        w = _hinge_fit(train.features, np.where(pos, 1.0, -1.0), clf)
        hit = np.hstack([Xte, np.ones((Xte.shape[0], 1))]) @ w > 0
    return np.where(hit, positive, negative)


@dataclass
class RepeatResult:
    index: int
    seed: int
    metrics: dict[str, float]
    train_index: np.ndarray
    test_index: np.ndarray
    train_counts: tuple[int, int]
    mmd_before: list[float] = field(default_factory=list)
    mmd_after: list[float] = field(default_factory=list)


@dataclass
class EvaluationReport:
    dataset: str
    method: str
    repeats: list[RepeatResult]
    config: dict

    def values(self, metric: str) -> list[float]:
        return [r.metrics[metric] for r in sorted(self.repeats, key=lambda r: r.index)]

    def mean(self, metric: str) -> float:
        return math.fsum(self.values(metric)) / len(self.repeats)

    def std(self, metric: str) -> float:
        """Population standard deviation across repeats (0 for a single repeat)."""
        mu = self.mean(metric)
        return math.sqrt(math.fsum((v - mu) ** 2 for v in self.values(metric)) / len(self.repeats))

    def to_dict(self) -> dict:
        reps = sorted(self.repeats, key=lambda r: r.index)
        metrics = sorted(reps[0].metrics)
        return {
            "dataset": self.dataset,
            "method": self.method,
            "mean": {m: self.mean(m) for m in metrics},
            "std": {m: self.std(m) for m in metrics},
            "repeats": [
                {
                    "index": r.index,
                    "seed": r.seed,
                    "metrics": r.metrics,
                    "train_counts": list(r.train_counts),
                    "mmd_before": r.mmd_before,
                    "mmd_after": r.mmd_after,
                }
                for r in reps
            ],
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "EvaluationReport":
        reps = [
            RepeatResult(
                r["index"], r["seed"], dict(r["metrics"]), np.empty(0, int), np.empty(0, int),
                tuple(r.get("train_counts", (0, 0))), list(r.get("mmd_before", [])), list(r.get("mmd_after", [])),
            )
            for r in d["repeats"]
        ]
        return cls(d["dataset"], d["method"], reps, dict(d.get("config", {})))


def _one_repeat(ds, cfg, clf, proto, i) -> RepeatResult:
    seed = derive_seed(proto.master_seed, i)
    tr, te = stratified_split_indices(ds.labels, proto.train_fraction, seed)
    train, test = ds.subset(tr), ds.subset(te)
    if proto.normalize:
        scaler = Scaler.fit(train.features)
        train, test = scaler.apply(train), scaler.apply(test)
    positive = class_stats(train).minority_label
    before, after = [], []
    if cfg is not None:
        bal = balance(train, dataclasses.replace(cfg, seed=seed))
        train = bal.dataset
        if bal.envelope is not None:
            before, after = bal.envelope.mmd_before, bal.envelope.mmd_after
    counts = (int(np.sum(train.labels == positive)), int(np.sum(train.labels != positive)))
    pred = train_predict(train, test, dataclasses.replace(clf, seed=seed), positive)
    ms = metric_set(confusion(pred, test.labels, positive))
    return RepeatResult(i, seed, ms.as_dict(), tr, te, counts, before, after)


def holdout_evaluate(
    ds: Dataset,
    cfg: BalanceConfig | None,
    clf: Classifier = Classifier(),
    proto: HoldoutProtocol = HoldoutProtocol(),
    n_jobs: int = 1,
) -> EvaluationReport:
    """Split, (optionally) balance the training part, train, score the untouched test part.

    Repeat ``i`` draws every random number from ``derive_seed(master_seed, i)``, so
    the report does not depend on ``n_jobs`` or on execution order.
    """

    def job(i):
        try:
            return _one_repeat(ds, cfg, clf, proto, i)
        except EnvbalError as exc:
            raise type(exc)(f"repeat {i}: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"repeat {i}: {exc}") from exc

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            results = list(pool.map(job, range(proto.repeats)))
    else:
        results = [job(i) for i in range(proto.repeats)]
    config = {
        "balance": cfg.as_dict() if cfg is not None else None,
        "classifier": dataclasses.asdict(clf),
        "protocol": dataclasses.asdict(proto),
    }
    return EvaluationReport(ds.name, cfg.method if cfg is not None else "none", results, config)


# ---------------------------------------------------------------------------
# report files


def report_document(reports: Sequence[EvaluationReport], label: str | None = None) -> dict:
    """One file per method, covering any number of datasets."""
    methods = sorted({r.method for r in reports})
    return {
        "tool": "envbal",
        "version": __version__,
        "label": label or "+".join(methods),
        "datasets": [r.to_dict() for r in reports],
    }


def write_report(path: str | Path, reports: Sequence[EvaluationReport], label: str | None = None) -> None:
    text = json.dumps(report_document(reports, label), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_report(path: str | Path) -> tuple[str, list[EvaluationReport]]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("tool") != "envbal" or "datasets" not in doc:
        raise ValueError(f"{path}: not an envbal report")
    return doc["label"], [EvaluationReport.from_dict(d) for d in doc["datasets"]]


def compare_methods(
    reports: Mapping[str, Sequence[EvaluationReport]],
    metric: str = "auc",
    alpha: float = 0.05,
) -> dict:
    """Rank methods per dataset on the mean of ``metric``; Friedman test plus Holm vs the best."""
    if len(reports) < 2:
        raise ConfigError(f"need at least 2 methods to compare, got {len(reports)}")
    methods = tuple(reports)
    coverage = {m: sorted(r.dataset for r in reports[m]) for m in methods}
    datasets = tuple(coverage[methods[0]])
    for m in methods:
        if tuple(coverage[m]) != datasets or len(set(datasets)) != len(datasets):
            raise ConfigError(f"dataset coverage differs: {methods[0]} has {list(datasets)}, {m} has {coverage[m]}")
    if len(datasets) < 2:
        raise ConfigError(f"need at least 2 datasets to compare, got {len(datasets)}")
    scores = np.array([[{r.dataset: r for r in reports[m]}[d].mean(metric) for d in datasets] for m in methods])
    rt = RankTable(methods, datasets, scores)
    stat, p = friedman(rt)
    best, rows = holm_vs_best(rt, alpha)
    return {
        "metric": metric,
        "alpha": alpha,
        "methods": list(methods),
        "datasets": list(datasets),
        "scores": scores.tolist(),
        "mean_ranks": mean_rankings(rt),
        "friedman_statistic": stat,
        "friedman_p": p,
        "best": best,
        "holm": rows,
    }
