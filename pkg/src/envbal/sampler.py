"""Balancing workflows: the envelope network sampler and two baselines (SMOTE, random)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, asdict

import numpy as np

from . import envelope
from .dataset import Dataset, class_stats
from .envelope import CorrectionSettings, EnvelopeOutput, LayerPlan
from .errors import ConfigError
from .fcm import FcmConfig
from .mmd import Kernel

__all__ = [
    "METHODS",
    "BalanceConfig",
    "BalancedDataset",
    "balance",
    "trim_generated",
    "random_oversample",
    "smote",
]

log = logging.getLogger(__name__)

METHODS = ("mifc_idmd", "mifcm", "smote", "random")
ORIGINAL = "original"
DUPLICATED = "duplicated"
INTERPOLATED = "interpolated"

# stream identifiers so sub-steps sharing one user seed draw independent numbers
_TRIM_STREAM = 1
_SMOTE_STREAM = 2
_RANDOM_STREAM = 3


def layer_tag(layer: int) -> str:
    return f"generated:layer_{layer}"


def normalize_method(name: str) -> str:
    return name.strip().lower().replace("-", "_")


@dataclass(frozen=True)
class BalanceConfig:
    method: str = "mifc_idmd"
    t: float = 2.0
    layer_cap: int = 9
    kernel: str = "linear"
    bandwidth: float | None = None
    correction_target: str = "layer"
    m: float = 2.0
    epsilon: float = 1e-5
    max_iterations: int = 100
    smote_k: int = 5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "method", normalize_method(self.method))
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {', '.join(METHODS)}")
        if self.smote_k < 1:
            raise ConfigError(f"smote_k must be >= 1, got {self.smote_k}")
        try:
            self.fcm_config()
            self.kernel_spec()
            self.correction()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.t > 1:
            raise ConfigError(f"t must exceed 1, got {self.t}")
        if self.layer_cap < 1:
            raise ConfigError(f"layer_cap must be >= 1, got {self.layer_cap}")

    def fcm_config(self) -> FcmConfig:
        return FcmConfig(self.m, self.epsilon, self.max_iterations, self.seed)

    def kernel_spec(self) -> Kernel:
        return Kernel(self.kernel, self.bandwidth)

    def correction(self) -> CorrectionSettings:
        return CorrectionSettings(enabled=self.method == "mifc_idmd", target=self.correction_target)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class BalancedDataset:
    dataset: Dataset
    provenance: np.ndarray
    plan: LayerPlan | None = None
    envelope: EnvelopeOutput | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def generated_mask(self) -> np.ndarray:
        return self.provenance != ORIGINAL


def _fuse(ds: Dataset, new_points: np.ndarray, tags, minority_label: str) -> BalancedDataset:
    X = np.vstack([ds.features, new_points]) if len(new_points) else ds.features
    y = np.concatenate([ds.labels, np.full(len(new_points), minority_label)])
    prov = np.concatenate([np.full(ds.n, ORIGINAL, dtype=object), np.asarray(tags, dtype=object)])
    return BalancedDataset(ds.replace(features=X, labels=y), prov.astype(str))


def trim_generated(out: EnvelopeOutput, deficit: int, seed: int) -> tuple[np.ndarray, list[str]]:
    """Cut the generated pool down (or up) to exactly ``deficit`` instances.

    Every layer but the last is kept whole; surplus is removed at random from the
    last layer. If the pool is short (layer cap reached), random generated
    instances are duplicated to make up the rest.
    """
    if not out.layers:
        raise ValueError("no generated layers to trim")
    rng = np.random.default_rng([seed, _TRIM_STREAM])
    pool = out.generated
    layer_of = out.layer_index
    total = pool.shape[0]
    head = total - out.layers[-1].size
    if total >= deficit:
        if head > deficit:
            raise ValueError(f"earlier layers already hold {head} instances, more than the deficit {deficit}")
        keep_last = np.sort(rng.choice(out.layers[-1].size, deficit - head, replace=False))
        idx = np.concatenate([np.arange(head), head + keep_last]).astype(int)
        return pool[idx], [layer_tag(int(layer_of[i])) for i in idx]
    fill = rng.integers(0, total, size=deficit - total)
    points = np.vstack([pool, pool[fill]])
    tags = [layer_tag(int(v)) for v in layer_of] + [DUPLICATED] * len(fill)
    return points, tags


def random_oversample(ds: Dataset, seed: int = 0) -> BalancedDataset:
    st = class_stats(ds)
    deficit = st.maj_count - st.min_count
    minority = ds.features[ds.labels == st.minority_label]
    rng = np.random.default_rng([seed, _RANDOM_STREAM])
    pick = rng.integers(0, minority.shape[0], size=deficit)
    return _fuse(ds, minority[pick], [DUPLICATED] * deficit, st.minority_label)


def knn_indices(X: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest other rows of X (Euclidean); distance ties go to the lower index."""
    diff = X[:, None, :] - X[None, :, :]
    D = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(D, np.inf)
    return np.argsort(D, axis=1, kind="stable")[:, :k]


def smote(ds: Dataset, k: int = 5, seed: int = 0) -> BalancedDataset:
    st = class_stats(ds)
    if st.min_count < 2:
        raise ConfigError(f"SMOTE needs at least 2 minority instances, got {st.min_count}")
    if k < 1:
        raise ConfigError(f"SMOTE neighbour count must be >= 1, got {k}")
    minority = ds.features[ds.labels == st.minority_label]
    k = min(k, st.min_count - 1)
    nn = knn_indices(minority, k)
    deficit = st.maj_count - st.min_count
    rng = np.random.default_rng([seed, _SMOTE_STREAM])
    base = rng.integers(0, st.min_count, size=deficit)
    nb = nn[base, rng.integers(0, k, size=deficit)]
    gap = rng.uniform(0.0, 1.0, size=(deficit, 1))
    synth = minority[base] + gap * (minority[nb] - minority[base])
    return _fuse(ds, synth, [INTERPOLATED] * deficit, st.minority_label)


def _envelope_balance(ds: Dataset, cfg: BalanceConfig) -> BalancedDataset:
    st = class_stats(ds)
    if st.min_count < 2:
        raise ConfigError(f"{cfg.method} needs at least 2 minority instances, got {st.min_count}")
    minority = ds.features[ds.labels == st.minority_label]
    plan = envelope.plan_layers(st.min_count, st.maj_count, cfg.t, cfg.layer_cap)
    out = envelope.run(minority, plan, cfg.fcm_config(), cfg.kernel_spec(), cfg.correction())
    points, tags = trim_generated(out, plan.deficit, cfg.seed)
    bal = _fuse(ds, points, tags, st.minority_label)
    bal.plan, bal.envelope = plan, out
    if plan.shortfall_fill:
        bal.notes.append(f"layer cap {cfg.layer_cap} reached; {plan.shortfall_fill} instances filled by duplication")
    return bal


def balance(ds: Dataset, cfg: BalanceConfig = BalanceConfig()) -> BalancedDataset:
    """Oversample the minority class of ``ds`` until both classes have the same size.

    Original rows come first, unchanged and in input order, followed by the
    generated minority rows. An already balanced dataset is returned as is.
    """
    st = class_stats(ds)
    if st.min_count == st.maj_count:
        note = f"{ds.name}: already balanced ({st.min_count} per class); returned unchanged"
        log.info(note)
        return BalancedDataset(ds, np.full(ds.n, ORIGINAL), notes=[note])
    if cfg.method in ("mifc_idmd", "mifcm"):
        bal = _envelope_balance(ds, cfg)
    elif cfg.method == "smote":
        bal = smote(ds, cfg.smote_k, cfg.seed)
    else:
        bal = random_oversample(ds, cfg.seed)
    for note in bal.notes:
        log.warning(note)
    return bal
