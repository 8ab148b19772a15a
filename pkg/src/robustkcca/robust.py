"""Robust losses and kernelized IRWLS (KIRWLS) estimators.

All estimators here work on an ``n x n`` matrix ``M`` of inner products between
the per-observation feature elements whose robust mean is sought:

* kernel mean element: ``M = K``
* cross-covariance operator: ``M = Kx_c * Ky_c`` (entrywise), since
  ``<phi(x_i) (x) psi(y_i), phi(x_j) (x) psi(y_j)> = Kx_ij Ky_ij``
* r-th central moment element: ``M = K_c ** r`` (entrywise)

so the ``n^2 x n`` tensor matrix is never materialized.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .kernels import CenteredGram, as_matrix, center_weighted, check_weights

DEFAULT_THRESHOLD = 1e-8
DEFAULT_MAX_ITER = 100
LOSS_KINDS = ("quadratic", "huber", "hampel")


@dataclass(frozen=True)
class RobustLoss:
    """Loss descriptor.

    Constants left as ``None`` are data-driven: they are set from the median of
    the residuals at the initial (uniformly weighted) estimate, see
    :meth:`resolve`. Hampel defaults are ``c1 = median``, ``c2 = 2 c1``,
    ``c3 = 4 c1``.
    """

    kind: str = "huber"
    c: float | None = None
    c1: float | None = None
    c2: float | None = None
    c3: float | None = None

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss {self.kind!r}; expected one of {LOSS_KINDS}")
        for name in ("c", "c1", "c2", "c3"):
            value = getattr(self, name)
            if value is not None and not value >= 0:
                raise ValueError(f"loss constant {name} must be nonnegative, got {value}")
        if self.kind == "hampel" and None not in (self.c1, self.c2, self.c3):
            if not self.c1 <= self.c2 <= self.c3:
                raise ValueError("hampel constants must satisfy c1 <= c2 <= c3")

    @classmethod
    def quadratic(cls) -> RobustLoss:
        return cls("quadratic")

    @classmethod
    def huber(cls, c: float | None = None) -> RobustLoss:
        return cls("huber", c=c)

    @classmethod
    def hampel(cls, c1=None, c2=None, c3=None) -> RobustLoss:
        return cls("hampel", c1=c1, c2=c2, c3=c3)

    @property
    def resolved(self) -> bool:
        if self.kind == "huber":
            return self.c is not None
        if self.kind == "hampel":
            return None not in (self.c1, self.c2, self.c3)
        return True

    def resolve(self, residuals) -> RobustLoss:
        """Fill unset constants from the median of ``residuals``."""
        if self.resolved:
            return self
        med = float(np.median(residuals))
        if self.kind == "huber":
            return replace(self, c=med)
        c1 = self.c1 if self.c1 is not None else med
        c2 = self.c2 if self.c2 is not None else 2.0 * c1
        c3 = self.c3 if self.c3 is not None else 2.0 * c2
        return replace(self, c1=c1, c2=c2, c3=c3)

    def _require_resolved(self):
        if not self.resolved:
            raise ValueError(f"{self.kind} loss has unset constants; call resolve() first")

    def rho(self, t) -> np.ndarray:
        """The loss value zeta(t)."""
        self._require_resolved()
        t = np.asarray(t, dtype=float)
        if self.kind == "quadratic":
            return 0.5 * t**2
        if self.kind == "huber":
            c = self.c
            return np.where(t <= c, 0.5 * t**2, c * t - 0.5 * c**2)
        c1, c2, c3 = self.c1, self.c2, self.c3
        top = 0.5 * c1 * (c2 + c3 - c1)
        out = np.where(t <= c1, 0.5 * t**2, c1 * t - 0.5 * c1**2)
        if c3 > c2:
            descend = 0.5 * c1 * (t - c3) ** 2 / (c2 - c3) + top
            out = np.where((t >= c2) & (t < c3), descend, out)
        return np.where((t >= c3) & (t > c1), top, out)

    def psi(self, t) -> np.ndarray:
        """Derivative zeta'(t)."""
        t = np.asarray(t, dtype=float)
        return self.weight(t) * t

    def weight(self, t) -> np.ndarray:
        """IRLS weight ``zeta'(t) / t``, continuous at ``t = 0``."""
        self._require_resolved()
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("loss weight is defined for t >= 0 only")
        if self.kind == "quadratic":
            return np.ones_like(t)
        safe = np.where(t > 0, t, 1.0)
        if self.kind == "huber":
            return np.where(t <= self.c, 1.0, self.c / safe)
        c1, c2, c3 = self.c1, self.c2, self.c3
        out = np.where(t <= c1, 1.0, c1 / safe)
        if c3 > c2:
            out = np.where((t >= c2) & (t < c3), c1 * (c3 - t) / (safe * (c3 - c2)), out)
        return np.where((t >= c3) & (t > c1), 0.0, out)


def loss_weight(loss: RobustLoss, t: float) -> float:
    if t < 0:
        raise ValueError("loss weight is defined for t >= 0 only")
    return float(loss.weight(t))


@dataclass
class KirwlsResult:
    weights: np.ndarray
    objective_trace: list[float]
    iterations: int
    converged: bool
    loss: RobustLoss
    residuals: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class DualOperator:
    """``sum_i w_i phi_c(x_i) (x) psi_c(y_i)`` held through its centered Grams."""

    weights: np.ndarray
    gramX: np.ndarray
    gramY: np.ndarray

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def inner_products(self) -> np.ndarray:
        """Gram matrix of the rank-one summands, ``Kx_c * Ky_c``."""
        return self.gramX * self.gramY


def feature_residuals(M, w) -> np.ndarray:
    """Distances ``||b_i - sum_j w_j b_j||`` given ``M_ij = <b_i, b_j>``."""
    Mw = M @ w
    sq = np.diag(M) - 2.0 * Mw + float(w @ Mw)
    return np.sqrt(np.maximum(sq, 0.0))


def kirwls(M, loss: RobustLoss, threshold: float = DEFAULT_THRESHOLD,
           max_iter: int = DEFAULT_MAX_ITER) -> KirwlsResult:
    """Robust weighted mean of feature elements with Gram matrix ``M``.

    Starts from uniform weights and alternates residual evaluation with
    weight updates ``w_i ~ phi(eps_i)`` until the relative change of the mean
    loss drops below ``threshold``. Running out of iterations is reported via
    ``converged=False``, not raised.
    """
    M = as_matrix(M)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError(f"expected a square matrix, got {M.shape}")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")

    w = np.full(n, 1.0 / n)
    eps = feature_residuals(M, w)
    loss = loss.resolve(eps)
    objective = float(np.mean(loss.rho(eps)))
    trace = [objective]
    converged = False
    iterations = 0
    while iterations < max_iter:
        iterations += 1
        phi = loss.weight(eps)
        total = phi.sum()
        if not total > 0:
            raise ValueError("every observation was rejected by the loss (all weights zero)")
        w = phi / total
        eps = feature_residuals(M, w)
        new_objective = float(np.mean(loss.rho(eps)))
        trace.append(new_objective)
        previous, objective = objective, new_objective
        if previous == 0.0 or abs(new_objective - previous) / previous < threshold:
            converged = True
            break
    return KirwlsResult(w, trace, iterations, converged, loss, eps)


def kirwls_mean(K, loss: RobustLoss, threshold: float = DEFAULT_THRESHOLD,
                max_iter: int = DEFAULT_MAX_ITER) -> KirwlsResult:
    """Robust kernel mean element weights."""
    return kirwls(K, loss, threshold, max_iter)


def robust_center(K, loss: RobustLoss, threshold: float = DEFAULT_THRESHOLD,
                  max_iter: int = DEFAULT_MAX_ITER) -> tuple[CenteredGram, np.ndarray]:
    """Center ``K`` around its robust kernel mean element."""
    result = kirwls_mean(K, loss, threshold, max_iter)
    return center_weighted(K, result.weights), result.weights


def kirwls_cco(Kx_c, Ky_c, loss: RobustLoss, threshold: float = DEFAULT_THRESHOLD,
               max_iter: int = DEFAULT_MAX_ITER) -> tuple[DualOperator, KirwlsResult]:
    """Robust kernel cross-covariance operator from two centered Grams.

    Passing the same centered Gram twice gives the robust covariance operator.
    """
    Kx_c = as_matrix(Kx_c)
    Ky_c = as_matrix(Ky_c)
    if Kx_c.shape != Ky_c.shape:
        raise ValueError(f"centered Grams differ in shape: {Kx_c.shape} vs {Ky_c.shape}")
    result = kirwls(Kx_c * Ky_c, loss, threshold, max_iter)
    return DualOperator(result.weights, Kx_c, Ky_c), result


def robust_central_moment(K_c, r: int, loss: RobustLoss, threshold: float = DEFAULT_THRESHOLD,
                          max_iter: int = DEFAULT_MAX_ITER) -> tuple[np.ndarray, KirwlsResult]:
    """Weights of the robust r-th kernel central moment element."""
    if int(r) != r or r < 1:
        raise ValueError(f"moment order must be a positive integer, got {r}")
    K_c = as_matrix(K_c)
    result = kirwls(K_c ** int(r), loss, threshold, max_iter)
    return result.weights, result


def hs_norm(op: DualOperator) -> float:
    """Hilbert-Schmidt norm, ``sqrt(w^T (Kx_c * Ky_c) w)``."""
    w = check_weights(op.weights, op.n)
    return float(np.sqrt(max(w @ op.inner_products() @ w, 0.0)))
