"""Kernel Gram matrices and the biased (V-statistic) squared MMD estimator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Kernel", "MmdEstimate", "gram", "mean_moment", "mmd_sq", "mmd_sq_grad", "median_bandwidth"]


@dataclass(frozen=True)
class Kernel:
    """``kind`` is 'linear' or 'rbf'. An rbf kernel with ``bandwidth=None`` must be
    resolved (see :meth:`resolve`) before use."""

    kind: str = "linear"
    bandwidth: float | None = None

    def __post_init__(self):
        if self.kind not in ("linear", "rbf"):
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.kind == "rbf" and self.bandwidth is not None and not self.bandwidth > 0:
            raise ValueError(f"rbf bandwidth must be positive, got {self.bandwidth}")

    def resolve(self, *sets: np.ndarray) -> "Kernel":
        """Fill in a median-heuristic bandwidth from the pooled sets when unset."""
        if self.kind == "rbf" and self.bandwidth is None:
            return Kernel("rbf", median_bandwidth(np.vstack(sets)))
        return self


@dataclass(frozen=True)
class MmdEstimate:
    mmd_sq: float
    e_xx: float
    e_vv: float
    e_xv: float


def _sq_dist(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def median_bandwidth(Z: np.ndarray) -> float:
    """Median pairwise Euclidean distance; 1.0 when every point coincides."""
    Z = np.asarray(Z, dtype=float)
    iu = np.triu_indices(Z.shape[0], k=1)
    if iu[0].size == 0:
        return 1.0
    med = float(np.median(np.sqrt(_sq_dist(Z, Z)[iu])))
    return med if med > 0 else 1.0


def gram(A: np.ndarray, B: np.ndarray, k: Kernel = Kernel()) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if k.kind == "linear":
        return A @ B.T
    if k.bandwidth is None:
        raise ValueError("rbf kernel bandwidth is unset; call Kernel.resolve first")
    return np.exp(-_sq_dist(A, B) / (2.0 * k.bandwidth**2))


def mean_moment(S: np.ndarray) -> float:
    S = np.asarray(S, dtype=float)
    if S.size == 0:
        raise ValueError("mean of an empty matrix")
    return float(S.mean())


def mmd_sq(X: np.ndarray, V: np.ndarray, k: Kernel = Kernel()) -> MmdEstimate:
    """Biased squared MMD from the three Gram-matrix means; tiny negatives clamp to 0."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if X.shape[0] == 0 or V.shape[0] == 0:
        raise ValueError("MMD needs two nonempty sets")
    k = k.resolve(X, V)
    exx = mean_moment(gram(X, X, k))
    evv = mean_moment(gram(V, V, k))
    exv = mean_moment(gram(X, V, k))
    return MmdEstimate(max(exx + evv - 2.0 * exv, 0.0), exx, evv, exv)


def mmd_sq_grad(X: np.ndarray, V: np.ndarray, k: Kernel) -> np.ndarray:
    """Gradient of the squared MMD with respect to the rows of ``V``.

    Only the cross term and the V-V term depend on V:
        d/dv_i = -2/(nc) sum_k dk(x_k, v_i)/dv_i + 2/c^2 sum_j dk(v_j, v_i)/dv_i
    """
    X = np.asarray(X, dtype=float)
    V = np.asarray(V, dtype=float)
    n, c = X.shape[0], V.shape[0]
    if k.kind == "linear":
        return 2.0 * (V.mean(axis=0) - X.mean(axis=0))[None, :].repeat(c, axis=0) / c
    s2 = k.bandwidth**2
    Kxv = gram(X, V, k)  # n x c
    Kvv = gram(V, V, k)  # c x c
    # d k(a, v)/dv = k(a, v) (a - v) / s2
    cross = (Kxv.T @ X - Kxv.sum(axis=0)[:, None] * V) / s2
    self_ = (Kvv @ V - Kvv.sum(axis=1)[:, None] * V) / s2
    return -2.0 / (n * c) * cross + 2.0 / c**2 * self_
