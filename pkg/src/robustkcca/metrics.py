"""Accuracy and sensitivity measures for kernel operators and kernel CCA."""

from __future__ import annotations

import numpy as np

from scipy.linalg import eigvalsh

from .kernels import KernelSpec, as_matrix, check_weights, cross_gram, uniform_weights
from .robust import DualOperator

NORM_KINDS = ("O", "F", "M", "S")


def eta_rkco(K_sample, K_cross, K_pop, w) -> float:
    """Squared tensor-RKHS distance between weighted sample and population second moments.

    ``K_sample`` is n x n, ``K_cross`` n x N (sample rows, population columns)
    and ``K_pop`` N x N.
    """
    Kp = as_matrix(K_pop)
    N = Kp.shape[0]
    if Kp.shape != (N, N):
        raise ValueError(f"population Gram must be square, got {Kp.shape}")
    return eta_rkco_terms(K_sample, K_cross, float((Kp**2).sum()) / N**2, w)


def eta_rkco_terms(K_sample, K_cross, pop_term: float, w) -> float:
    """:func:`eta_rkco` with the population term ``mean(K_pop^2)`` precomputed."""
    Ks = as_matrix(K_sample)
    Kc = as_matrix(K_cross)
    n = Ks.shape[0]
    if Ks.shape != (n, n) or Kc.ndim != 2 or Kc.shape[0] != n:
        raise ValueError(f"inconsistent shapes: sample {Ks.shape}, cross {Kc.shape}")
    w = check_weights(w, n)
    sample = float(w @ Ks**2 @ w)
    cross = float(w @ (Kc**2).sum(axis=1)) / Kc.shape[1]
    return sample - 2.0 * cross + pop_term


def population_term(spec: KernelSpec, P, block: int = 2000) -> float:
    """``mean_{I,J} k(P_I, P_J)^2`` accumulated over row blocks."""
    P = np.asarray(P, dtype=float)
    total = 0.0
    for start in range(0, P.shape[0], block):
        total += float((cross_gram(spec, P[start:start + block], P) ** 2).sum())
    return total / P.shape[0] ** 2


def eta_kco(K_sample, K_cross, K_pop) -> float:
    return eta_rkco(K_sample, K_cross, K_pop, uniform_weights(as_matrix(K_sample).shape[0]))


def matrix_norm(A, kind: str) -> float:
    """O: max absolute column sum; F: Frobenius; M: max modulus; S: spectral."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if kind == "O":
        return float(np.abs(A).sum(axis=0).max()) if A.size else 0.0
    if kind == "F":
        return float(np.linalg.norm(A, "fro"))
    if kind == "M":
        return float(np.abs(A).max()) if A.size else 0.0
    if kind == "S":
        if not A.size:
            return 0.0
        if A.shape[0] == A.shape[1] and np.array_equal(A, A.T):
            # symmetric: largest |eigenvalue|, only the two extremes are needed
            m = A.shape[0] - 1
            lo = eigvalsh(A, subset_by_index=[0, 0])[0]
            hi = eigvalsh(A, subset_by_index=[m, m])[0]
            return float(max(abs(lo), abs(hi)))
        return float(np.linalg.norm(A, 2))
    raise ValueError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")


def operator_matrix(op: DualOperator) -> np.ndarray:
    """Symmetric matrix ``W^1/2 Kx_c W^1/2`` sharing the nonzero spectrum of a covariance operator.

    For ``Y = X`` its Frobenius and spectral norms are the Hilbert-Schmidt and
    operator norms of ``sum_i w_i phi_c(x_i) (x) phi_c(x_i)``.
    """
    Kx = as_matrix(op.gramX)
    if op.gramY is not op.gramX and not np.array_equal(Kx, as_matrix(op.gramY)):
        raise ValueError("operator_matrix is defined for covariance operators (gramY == gramX)")
    root = np.sqrt(check_weights(op.weights, op.n))
    return root[:, None] * Kx * root[None, :]


def eta_co(op_id: DualOperator, op_cd: DualOperator, kind: str) -> float:
    """``|1 - ||C_id|| / ||C_cd|||`` for covariance operators."""
    num = matrix_norm(operator_matrix(op_id), kind)
    den = matrix_norm(operator_matrix(op_cd), kind)
    if den == 0:
        raise ValueError("contaminated-data operator has zero norm")
    return abs(1.0 - num / den)


def _ratio(num: float, den: float) -> float:
    if den == 0:
        raise ValueError("contaminated-data influence has zero norm")
    return abs(1.0 - num / den)


def eta_rho(eif_id, eif_cd) -> float:
    """``|1 - ||EIF_id(rho^2)||_F / ||EIF_cd(rho^2)||_F|``."""
    return _ratio(np.linalg.norm(np.asarray(eif_id, dtype=float)),
                  np.linalg.norm(np.asarray(eif_cd, dtype=float)))


def eta_f(eifx_id, eify_id, eifx_cd, eify_cd) -> float:
    """``|1 - ||EIF_id(f_X) - EIF_id(f_Y)||_F / ||EIF_cd(f_X) - EIF_cd(f_Y)||_F|``."""
    num = np.linalg.norm(np.asarray(eifx_id, dtype=float) - np.asarray(eify_id, dtype=float))
    den = np.linalg.norm(np.asarray(eifx_cd, dtype=float) - np.asarray(eify_cd, dtype=float))
    return _ratio(num, den)
