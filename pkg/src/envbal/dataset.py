"""Binary labeled datasets: loading (CSV, KEEL), class statistics, scaling, splitting."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, SplitError

__all__ = [
    "Dataset",
    "ClassStats",
    "Scaler",
    "load_csv",
    "load_keel",
    "load",
    "class_stats",
    "normalize_minmax",
    "stratified_split",
    "stratified_split_indices",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with exactly two class labels.

    Arrays are copied and made read-only on construction, so a Dataset can be
    shared freely between threads.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] = ()
    class_names: tuple[str, ...] = ()
    name: str = "dataset"
    label_name: str = "class"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim != 2:
            raise DataError(f"features must be a 2-D matrix, got shape {X.shape}")
        y = np.asarray(self.labels).astype(str)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError(f"{y.shape[0] if y.ndim == 1 else y.shape} labels for {X.shape[0]} rows")
        n, d = X.shape
        if n < 2 or d < 1:
            raise DataError(f"need at least 2 rows and 1 feature, got n={n} d={d}")
        if not np.all(np.isfinite(X)):
            r, c = np.argwhere(~np.isfinite(X))[0]
            raise DataError(f"non-finite feature value at row {r}, column {c}")
        classes = tuple(sorted(set(y.tolist())))
        if len(classes) > 2:
            raise DataError(f"more than two classes: {', '.join(classes)}")
        if len(classes) < 2:
            raise DataError(f"exactly two classes required, found {len(classes)}")
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(d))
        if len(names) != d:
            raise DataError(f"{len(names)} feature names for {d} features")
        object.__setattr__(self, "features", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "feature_names", tuple(str(s) for s in names))
        object.__setattr__(self, "class_names", classes)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, index: Sequence[int] | np.ndarray, name: str | None = None) -> "Dataset":
        index = np.asarray(index, dtype=int)
        return self.replace(features=self.features[index], labels=self.labels[index], name=name or self.name)

    def replace(self, **changes) -> "Dataset":
        fields = dict(
            features=self.features,
            labels=self.labels,
            feature_names=self.feature_names,
            name=self.name,
            label_name=self.label_name,
        )
        fields.update(changes)
        return Dataset(**fields)


@dataclass(frozen=True)
class ClassStats:
    min_count: int
    maj_count: int
    ir: float
    minority_label: str
    majority_label: str

    def __str__(self):
        return f"min={self.min_count} maj={self.maj_count} IR={self.ir:.2f}"


def class_stats(ds: Dataset) -> ClassStats:
    """Count both classes; on a tie the lexicographically smaller label is the minority."""
    a, b = ds.class_names  # sorted
    na = int(np.sum(ds.labels == a))
    nb = int(np.sum(ds.labels == b))
    if na <= nb:
        return ClassStats(na, nb, nb / na, a, b)
    return ClassStats(nb, na, na / nb, b, a)


@dataclass(frozen=True)
class Scaler:
    """Per-feature min-max scaler; constant features map to 0."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _frozen(np.asarray(self.lo, dtype=float))
        hi = _frozen(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or np.any(hi < lo):
            raise ValueError("scaler requires max >= min for every feature")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def fit(cls, X: np.ndarray) -> "Scaler":
        X = np.asarray(X, dtype=float)
        return cls(X.min(axis=0), X.max(axis=0))

    @property
    def _span(self) -> np.ndarray:
        span = self.hi - self.lo
        return np.where(span > 0, span, 1.0)

    def transform(self, X: np.ndarray) -> np.ndarray:
        Z = (np.asarray(X, dtype=float) - self.lo) / self._span
        return np.where(self.hi > self.lo, Z, 0.0)

    def inverse_transform(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z, dtype=float) * (self.hi - self.lo) + self.lo

    def apply(self, ds: Dataset) -> Dataset:
        return ds.replace(features=self.transform(ds.features))


def normalize_minmax(ds: Dataset) -> tuple[Dataset, Scaler]:
    scaler = Scaler.fit(ds.features)
    return scaler.apply(ds), scaler


# ---------------------------------------------------------------------------
# loaders


def _parse_float(text: str, row: int, col: int | str) -> float:
    s = text.strip()
    if s == "" or s == "?" or s.lower() in ("na", "nan"):
        raise DataError(f"missing value at row {row}, column {col}")
    try:
        v = float(s)
    except ValueError:
        raise DataError(f"cannot parse {s!r} as a number at row {row}, column {col}") from None
    if not math.isfinite(v):
        raise DataError(f"non-finite value {s!r} at row {row}, column {col}")
    return v


def load_csv(
    path: str | Path,
    label_column: int | str = -1,
    drop_columns: Sequence[str] = (),
) -> Dataset:
    """Read a headed CSV file; one column holds the class label, the rest must be numeric.

    ``label_column`` is a column name or a (possibly negative) index. Row numbers in
    error messages count the header as row 1, matching what an editor shows.
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: empty file (header row required)")
    header = [h.strip() for h in rows[0]]
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not in header")
        li = header.index(label_column)
    else:
        li = int(label_column)
        if not -len(header) <= li < len(header):
            raise DataError(f"{path}: label column index {li} out of range")
        li %= len(header)
    keep = [j for j, h in enumerate(header) if j != li and h not in drop_columns]
    X, y = [], []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {r} has {len(row)} fields, header has {len(header)}")
        X.append([_parse_float(row[j], r, header[j]) for j in keep])
        lab = row[li].strip()
        if lab == "":
            raise DataError(f"{path}: missing label at row {r}")
        y.append(lab)
    if not X:
        raise DataError(f"{path}: no data rows")
    return Dataset(
        np.array(X, dtype=float),
        np.array(y),
        feature_names=tuple(header[j] for j in keep),
        name=path.stem,
        label_name=header[li],
    )


_ATTR = re.compile(r"@attribute\s+('[^']*'|\"[^\"]*\"|\S+)\s+(.*)$", re.IGNORECASE)
_NUMERIC_TYPES = ("real", "integer", "numeric")


def load_keel(path: str | Path) -> Dataset:
    """Read a KEEL ``.dat`` file (numeric inputs, one output attribute)."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None

    relation = path.stem
    attrs: list[tuple[str, str]] = []
    inputs: list[str] | None = None
    outputs: list[str] | None = None
    data_start = None
    for i, raw in enumerate(lines):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        low = line.lower()
        if low.startswith("@relation"):
            relation = line.split(None, 1)[1].strip() if " " in line else relation
        elif low.startswith("@attribute"):
            m = _ATTR.match(line)
            if not m:
                raise DataError(f"{path}: malformed @attribute at line {i + 1}")
            attrs.append((m.group(1).strip("'\""), m.group(2).strip()))
        elif low.startswith("@inputs"):
            inputs = [s.strip() for s in line[len("@inputs"):].split(",") if s.strip()]
        elif low.startswith("@outputs") or low.startswith("@output"):
            rest = line.split(None, 1)[1] if " " in line else ""
            outputs = [s.strip() for s in rest.split(",") if s.strip()]
        elif low.startswith("@data"):
            data_start = i + 1
            break
        elif not line.startswith("@"):
            raise DataError(f"{path}: missing @data marker before line {i + 1}")
        else:
            raise DataError(f"{path}: unknown header directive at line {i + 1}: {line!r}")
    if data_start is None:
        raise DataError(f"{path}: missing @data marker")
    if len(attrs) < 2:
        raise DataError(f"{path}: need at least one input and one output @attribute")

    names = [a for a, _ in attrs]
    if outputs is None:
        outputs = [names[-1]]
    if len(outputs) != 1 or outputs[0] not in names:
        raise DataError(f"{path}: exactly one known @outputs attribute required, got {outputs}")
    out = names.index(outputs[0])
    if inputs is None:
        inputs = [a for a in names if a != outputs[0]]
    for a in inputs:
        if a not in names:
            raise DataError(f"{path}: @inputs names unknown attribute {a!r}")
    in_idx = [names.index(a) for a in inputs]
    for j in in_idx:
        kind = attrs[j][1].split()[0].lower() if attrs[j][1] else ""
        if kind not in _NUMERIC_TYPES:
            raise DataError(f"{path}: attribute {names[j]!r} is not numeric ({attrs[j][1]!r}); nominal inputs are unsupported")

    X, y = [], []
    for i in range(data_start, len(lines)):
        line = lines[i].strip()
        if not line or line.startswith("%"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != len(names):
            raise DataError(f"{path}: line {i + 1} has {len(fields)} values, expected {len(names)}")
        X.append([_parse_float(fields[j], i + 1, names[j]) for j in in_idx])
        if fields[out] in ("", "?"):
            raise DataError(f"{path}: missing label at line {i + 1}")
        y.append(fields[out])
    if not X:
        raise DataError(f"{path}: no data rows after @data")
    return Dataset(
        np.array(X, dtype=float),
        np.array(y),
        feature_names=tuple(inputs),
        name=relation,
        label_name=outputs[0],
    )


def load(path: str | Path, fmt: str | None = None, label_column: int | str = -1) -> Dataset:
    """Dispatch on ``fmt`` ('csv' or 'keel'), or on the file suffix when it is None."""
    path = Path(path)
    if fmt is None:
        fmt = "keel" if path.suffix.lower() == ".dat" else "csv"
    if fmt == "keel":
        return load_keel(path)
    if fmt == "csv":
        return load_csv(path, label_column)
    raise DataError(f"unknown format {fmt!r}")


# ---------------------------------------------------------------------------
# splitting


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def stratified_split_indices(
    labels: np.ndarray, train_fraction: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-class shuffle, first round(count * fraction) to train. Returns sorted index arrays."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for cls in sorted(set(labels.tolist())):
        idx = np.flatnonzero(labels == cls)
        if idx.size < 2:
            raise SplitError(f"class {cls!r} has {idx.size} instance(s); need at least 2 to split")
        k = _round_half_up(idx.size * train_fraction)
        if k >= idx.size:
            raise SplitError(f"class {cls!r} ({idx.size} instances) would receive 0 test instances at fraction {train_fraction}")
        if k == 0:
            raise SplitError(f"class {cls!r} ({idx.size} instances) would receive 0 training instances at fraction {train_fraction}")
        perm = rng.permutation(idx)
        train.append(perm[:k])
        test.append(perm[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_split(ds: Dataset, train_fraction: float = 0.7, seed: int = 0) -> tuple[Dataset, Dataset]:
    tr, te = stratified_split_indices(ds.labels, train_fraction, seed)
    return ds.subset(tr, name=ds.name), ds.subset(te, name=ds.name)
