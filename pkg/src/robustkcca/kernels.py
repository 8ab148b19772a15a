"""Positive-definite kernels, Gram matrices and (weighted) Gram centering.

Gram matrices are plain ``numpy`` arrays wrapped in light dataclasses that
carry the kernel that produced them. Every function that takes a Gram matrix
also accepts a bare array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

KERNEL_KINDS = ("linear", "polynomial", "gaussian", "laplacian")
WEIGHT_SUM_TOL = 1e-10


@dataclass(frozen=True)
class KernelSpec:
    """Kernel descriptor.

    ``gaussian``: exp(-||x - y||^2 / (2 bandwidth^2)).
    ``laplacian``: exp(-||x - y||_1 / bandwidth).
    ``polynomial``: (<x, y> + 1)^degree.
    ``linear``: <x, y>.
    """

    kind: str
    degree: int = 1
    bandwidth: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KERNEL_KINDS}")
        if self.kind == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise ValueError(f"polynomial degree must be a positive integer, got {self.degree}")
        if self.kind in ("gaussian", "laplacian"):
            if not np.isfinite(self.bandwidth) or self.bandwidth <= 0:
                raise ValueError(f"{self.kind} bandwidth must be positive, got {self.bandwidth}")

    @property
    def bounded(self) -> bool:
        return self.kind in ("gaussian", "laplacian")

    def label(self) -> str:
        if self.kind == "polynomial":
            return f"poly-{self.degree}"
        if self.kind == "linear":
            return "poly-1"
        return self.kind


@dataclass(frozen=True)
class GramMatrix:
    values: np.ndarray
    spec: KernelSpec | None = None

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class CenteredGram:
    """``H K H^T`` with ``H = I - 1 w^T``; keeps the centering weights."""

    values: np.ndarray
    weights: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def as_matrix(K) -> np.ndarray:
    """Return the underlying float array of a Gram-like object."""
    return np.asarray(getattr(K, "values", K), dtype=float)


def _as_data(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"data must be a vector or a 2-D array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("data contains non-finite values")
    return X


def check_weights(w, n: int | None = None) -> np.ndarray:
    """Validate a weight vector: nonnegative, summing to one."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1:
        raise ValueError("weights must be a 1-D vector")
    if n is not None and w.shape[0] != n:
        raise ValueError(f"weights have length {w.shape[0]}, expected {n}")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and nonnegative")
    if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise ValueError(f"weights must sum to 1 (got {w.sum():.16g})")
    return w


def uniform_weights(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def eval_kernel(spec: KernelSpec, x, y) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(cross_gram(spec, x[None, :], y[None, :])[0, 0])


def median_bandwidth(X) -> float:
    """Median of all pairwise Euclidean distances."""
    X = _as_data(X)
    if X.shape[0] < 2:
        raise ValueError("median bandwidth needs at least two points")
    sigma = float(np.median(pdist(X)))
    if sigma <= 0:
        raise ValueError("median pairwise distance is zero; cannot use it as a bandwidth")
    return sigma


def cross_gram(spec: KernelSpec, X_test, X) -> np.ndarray:
    """Kernel evaluations ``k(X_test[t], X[i])`` as a ``T x n`` matrix."""
    X_test = _as_data(X_test)
    X = _as_data(X)
    if X_test.shape[1] != X.shape[1]:
        raise ValueError(f"dimension mismatch: {X_test.shape[1]} vs {X.shape[1]}")
    if spec.kind == "linear":
        K = X_test @ X.T
    elif spec.kind == "polynomial":
        K = (X_test @ X.T + 1.0) ** spec.degree
    elif spec.kind == "gaussian":
        K = np.exp(-cdist(X_test, X, "sqeuclidean") / (2.0 * spec.bandwidth**2))
    else:
        K = np.exp(-cdist(X_test, X, "cityblock") / spec.bandwidth)
    if not np.all(np.isfinite(K)):
        raise ValueError("kernel evaluation produced non-finite entries")
    return K


def gram(spec: KernelSpec, X) -> GramMatrix:
    K = cross_gram(spec, X, X)
    # BLAS products need not be exactly symmetric
    K = 0.5 * (K + K.T)
    return GramMatrix(K, spec)


def center_weighted(K, w) -> CenteredGram:
    """Weighted centering ``H K H^T`` with ``H = I - 1 w^T``."""
    K = as_matrix(K)
    w = check_weights(w, K.shape[0])
    Kw = K @ w
    wKw = float(w @ Kw)
    C = K - Kw[None, :] - Kw[:, None] + wKw
    return CenteredGram(0.5 * (C + C.T), w)


def center_test(K_test, K, w) -> np.ndarray:
    """Center test-point kernel rows against training points under weights ``w``."""
    K = as_matrix(K)
    K_test = np.atleast_2d(as_matrix(K_test))
    n = K.shape[0]
    if K.shape != (n, n) or K_test.shape[1] != n:
        raise ValueError(f"shape mismatch: K_test {K_test.shape} vs K {K.shape}")
    w = check_weights(w, n)
    Kw = K @ w
    return K_test - Kw[None, :] - (K_test @ w)[:, None] + float(w @ Kw)
