"""Multilayer envelope network.

Each layer clusters the minority instances together with every prototype produced
by earlier layers; the resulting prototypes are the generated "envelope
instances". After a layer converges its prototypes are nudged so their
distribution matches the layer input under a kernel MMD.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import fcm
from .fcm import FcmConfig
from .mmd import Kernel, mmd_sq, mmd_sq_grad

__all__ = [
    "LayerPlan",
    "CorrectionSettings",
    "PrototypeLayer",
    "EnvelopeOutput",
    "plan_layers",
    "layer_step",
    "midmd_correct",
    "run",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LayerPlan:
    cluster_counts: tuple[int, ...]
    t: float
    layer_cap: int
    min_count: int
    deficit: int
    shortfall_fill: int = 0

    @property
    def n_layers(self) -> int:
        return len(self.cluster_counts)

    @property
    def total(self) -> int:
        return sum(self.cluster_counts)

    def input_sizes(self) -> list[int]:
        """Size of the augmented input at each layer."""
        sizes, size = [], self.min_count
        for c in self.cluster_counts:
            sizes.append(size)
            size += c
        return sizes

    def __str__(self):
        s = f"L={self.n_layers} C=[{','.join(map(str, self.cluster_counts))}] deficit={self.deficit}"
        if self.shortfall_fill:
            s += f" shortfall={self.shortfall_fill}"
        return s


def plan_layers(min_count: int, maj_count: int, t: float = 2.0, layer_cap: int = 9) -> LayerPlan:
    """Grow layers of ceil(|input| / t) clusters until the deficit Maj - Min is covered.

    If ``layer_cap`` layers are not enough the remainder is recorded as
    ``shortfall_fill``, to be filled by duplicating generated instances.
    """
    if min_count < 2:
        raise ValueError(f"need at least 2 minority instances, got {min_count}")
    if maj_count <= min_count:
        raise ValueError(f"nothing to generate: majority {maj_count} <= minority {min_count}")
    if not t > 1:
        raise ValueError(f"t must exceed 1, got {t}")
    if layer_cap < 1:
        raise ValueError(f"layer_cap must be >= 1, got {layer_cap}")
    deficit = maj_count - min_count
    counts: list[int] = []
    size = min_count
    while sum(counts) < deficit and len(counts) < layer_cap:
        c = min(math.ceil(size / t), size - 1)
        counts.append(c)
        size += c
    return LayerPlan(tuple(counts), t, layer_cap, min_count, deficit, max(deficit - sum(counts), 0))


@dataclass(frozen=True)
class CorrectionSettings:
    """Settings for the per-layer MMD correction (the rbf fields are ignored for a linear kernel)."""

    enabled: bool = True
    target: str = "layer"  # 'layer' (that layer's input) or 'original'
    step: float = 0.01
    max_steps: int = 50
    rel_tol: float = 1e-6

    def __post_init__(self):
        if self.target not in ("layer", "original"):
            raise ValueError(f"correction target must be 'layer' or 'original', got {self.target!r}")


@dataclass
class PrototypeLayer:
    index: int
    prototypes: np.ndarray
    raw_prototypes: np.ndarray
    input_size: int
    mmd_before: float = 0.0
    mmd_after: float = 0.0
    fcm_iterations: int = 0
    fcm_converged: bool = False

    @property
    def size(self) -> int:
        return self.prototypes.shape[0]


@dataclass
class EnvelopeOutput:
    layers: list[PrototypeLayer] = field(default_factory=list)

    @property
    def generated(self) -> np.ndarray:
        if not self.layers:
            return np.empty((0, 0))
        return np.vstack([layer.prototypes for layer in self.layers])

    @property
    def layer_index(self) -> np.ndarray:
        """Layer number (1-based) of every row of :attr:`generated`."""
        return np.concatenate([np.full(layer.size, layer.index) for layer in self.layers])

    @property
    def mmd_before(self) -> list[float]:
        return [layer.mmd_before for layer in self.layers]

    @property
    def mmd_after(self) -> list[float]:
        return [layer.mmd_after for layer in self.layers]


def layer_step(X_l: np.ndarray, c_l: int, config: FcmConfig) -> fcm.FcmResult:
    """Cluster one layer's augmented input; the prototypes are the new instances."""
    return fcm.fit(X_l, c_l, config)


def midmd_correct(
    X_l: np.ndarray,
    V_l: np.ndarray,
    k: Kernel = Kernel(),
    settings: CorrectionSettings = CorrectionSettings(),
) -> np.ndarray:
    """Move prototypes ``V_l`` to reduce their squared MMD to ``X_l``.

    Linear kernel: the MMD is the squared distance between the set means, so the
    prototypes are translated by the mean gap, which zeroes it while leaving their
    relative geometry intact.

    rbf kernel: fixed-step gradient descent on the prototype coordinates. A step
    that would increase the discrepancy is rejected and ends the descent.
    """
    X_l = np.asarray(X_l, dtype=float)
    V = np.array(V_l, dtype=float)
    if X_l.shape[1] != V.shape[1]:
        raise ValueError(f"dimension mismatch: {X_l.shape[1]} vs {V.shape[1]}")
    if k.kind == "linear":
        return V + (X_l.mean(axis=0) - V.mean(axis=0))

    k = k.resolve(X_l, V)
    cur = mmd_sq(X_l, V, k).mmd_sq
    for _ in range(settings.max_steps):
        if cur == 0.0:
            break
        cand = V - settings.step * mmd_sq_grad(X_l, V, k)
        new = mmd_sq(X_l, cand, k).mmd_sq
        if new > cur:
            break
        V, improvement = cand, (cur - new) / cur
        cur = new
        if improvement < settings.rel_tol:
            break
    return V


def _layer_seed(seed: int, layer: int) -> int:
    return seed ^ layer


def run(
    X_min: np.ndarray,
    plan: LayerPlan,
    config: FcmConfig = FcmConfig(),
    k: Kernel = Kernel(),
    correction: CorrectionSettings = CorrectionSettings(),
) -> EnvelopeOutput:
    """Generate ``plan.cluster_counts`` prototypes layer by layer.

    Layer ``l`` fits FCM on the minority instances plus all earlier (corrected)
    prototypes, using seed ``config.seed ^ l``. Correction is skipped when
    ``correction.enabled`` is false; MMD is still reported in that case, with
    ``mmd_after == mmd_before``.
    """
    X_min = np.asarray(X_min, dtype=float)
    if X_min.shape[0] != plan.min_count:
        raise ValueError(f"plan was made for {plan.min_count} minority instances, got {X_min.shape[0]}")
    augmented = X_min
    out = EnvelopeOutput()
    for l, c_l in enumerate(plan.cluster_counts, start=1):
        cfg = FcmConfig(config.m, config.epsilon, config.max_iterations, _layer_seed(config.seed, l))
        res = layer_step(augmented, c_l, cfg)
        target = augmented if correction.target == "layer" else X_min
        # resolve once so before/after are measured with the same bandwidth
        kl = k.resolve(target, res.prototypes)
        before = mmd_sq(target, res.prototypes, kl).mmd_sq
        if correction.enabled:
            V = midmd_correct(target, res.prototypes, kl, correction)
            after = mmd_sq(target, V, kl).mmd_sq
        else:
            V, after = res.prototypes, before
        log.debug("layer %d: c=%d input=%d mmd %.3g -> %.3g", l, c_l, augmented.shape[0], before, after)
        out.layers.append(
            PrototypeLayer(l, V, res.prototypes, augmented.shape[0], before, after, res.iterations_used, res.converged)
        )
        augmented = np.vstack([augmented, V])
    return out
