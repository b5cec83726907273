"""Single-layer fuzzy c-means.

Memberships are stored cluster-major: ``u[i, k]`` is the degree to which point
``k`` belongs to cluster ``i``, so every column of ``u`` sums to one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FcmConfig",
    "FcmResult",
    "objective",
    "update_memberships",
    "update_prototypes",
    "init_memberships",
    "fit",
]


@dataclass(frozen=True)
class FcmConfig:
    m: float = 2.0
    epsilon: float = 1e-5
    max_iterations: int = 100
    seed: int = 0

    def __post_init__(self):
        if not self.m > 1:
            raise ValueError(f"fuzzification coefficient m must exceed 1, got {self.m}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


@dataclass
class FcmResult:
    prototypes: np.ndarray
    memberships: np.ndarray
    objective_trace: list[float] = field(default_factory=list)
    iterations_used: int = 0
    converged: bool = False

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


def _sq_dists(X: np.ndarray, V: np.ndarray) -> np.ndarray:
    """c x n matrix of squared Euclidean distances between prototypes and points."""
    # explicit differences rather than the |x|^2 - 2xv + |v|^2 expansion:
    # exact zeros matter for the singularity rule
    diff = V[:, None, :] - X[None, :, :]
    return np.einsum("cnd,cnd->cn", diff, diff)


def objective(X: np.ndarray, U: np.ndarray, V: np.ndarray, m: float) -> float:
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if X.ndim != 2 or V.ndim != 2 or X.shape[1] != V.shape[1]:
        raise ValueError(f"shape mismatch: X {X.shape}, V {V.shape}")
    if U.shape != (V.shape[0], X.shape[0]):
        raise ValueError(f"U has shape {U.shape}, expected {(V.shape[0], X.shape[0])}")
    return float(np.sum(U**m * _sq_dists(X, V)))


def update_memberships(X: np.ndarray, V: np.ndarray, m: float) -> np.ndarray:
    """Membership update for fixed prototypes.

    A point that coincides with one or more prototypes gets a one-hot column
    (split equally when several prototypes coincide with it).
    """
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    if X.shape[1] != V.shape[1]:
        raise ValueError(f"shape mismatch: X {X.shape}, V {V.shape}")
    D2 = _sq_dists(X, V)
    zero = D2 == 0.0
    singular = zero.any(axis=0)
    # (d_ik / d_jk)^(2/(m-1)) == (d2_ik / d2_jk)^(1/(m-1))
    with np.errstate(divide="ignore"):
        inv = np.where(zero, 0.0, D2) ** (-1.0 / (m - 1.0))
    inv[zero] = 0.0
    # scale per column by its largest entry before normalizing, so tiny
    # distances cannot overflow the reciprocal powers
    col_max = inv.max(axis=0, keepdims=True)
    col_max[col_max == 0] = 1.0
    inv = inv / col_max
    with np.errstate(invalid="ignore"):
        U = inv / inv.sum(axis=0, keepdims=True)  # singular columns are overwritten below
    if singular.any():
        hot = zero[:, singular].astype(float)
        U[:, singular] = hot / hot.sum(axis=0, keepdims=True)
    return U


def update_prototypes(X: np.ndarray, U: np.ndarray, m: float) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    W = np.asarray(U, dtype=float) ** m
    if W.shape[1] != X.shape[0]:
        raise ValueError(f"U has {W.shape[1]} columns for {X.shape[0]} points")
    mass = W.sum(axis=1)
    if np.any(mass <= 0):
        raise ValueError(f"cluster(s) {np.flatnonzero(mass <= 0).tolist()} have zero total membership")
    return (W @ X) / mass[:, None]


def init_memberships(c: int, n: int, seed: int) -> np.ndarray:
    """Uniform(0,1) entries, columns normalized to sum to one."""
    U = np.random.default_rng(seed).uniform(0.0, 1.0, size=(c, n))
    return U / U.sum(axis=0, keepdims=True)


def fit(X: np.ndarray, c: int, config: FcmConfig = FcmConfig()) -> FcmResult:
    """Alternate prototype and membership updates until the objective settles.

    Stops when the objective changes by less than ``config.epsilon`` between two
    consecutive iterations, or after ``config.max_iterations``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    n = X.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 points, got {n}")
    if not 1 <= c < n:
        raise ValueError(f"cluster count must satisfy 1 <= c < n, got c={c}, n={n}")

    m = config.m
    U = init_memberships(c, n, config.seed)
    trace: list[float] = []
    converged = False
    it = 0
    V = None
    while it < config.max_iterations:
        it += 1
        V = update_prototypes(X, U, m)
        U = update_memberships(X, V, m)
        trace.append(objective(X, U, V, m))
        if len(trace) > 1 and abs(trace[-1] - trace[-2]) < config.epsilon:
            converged = True
            break
    return FcmResult(V, U, trace, it, converged)
