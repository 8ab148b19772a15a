"""Empirical influence functions (EIF) of kernel statistics and kernel CCA.

Function-valued influence functions are reported through their values at
the sample points. :func:`gateaux_oracle` evaluates the defining difference
quotient on an explicitly reweighted sample and is used to validate the
analytic expressions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .kcca import DEGENERACY_TOL, KccaModel, _sym_power, fit_weighted
from .kernels import KernelSpec, as_matrix, center_test, cross_gram, gram


@dataclass
class InfluenceRecord:
    component: int
    if_rho: float
    if_fx: np.ndarray
    if_fy: np.ndarray
    point_index: int | None = None
    degenerate: bool = False


def _point(z):
    return np.atleast_2d(np.asarray(z, dtype=float))


def eif_kernel_me(z_prime, X, spec: KernelSpec) -> np.ndarray:
    """``k(X_i, x') - mean_a k(X_i, X_a)`` for every sample point ``X_i``."""
    K = gram(spec, X).values
    return cross_gram(spec, X, _point(z_prime))[:, 0] - K.mean(axis=1)


def eif_cross_raw_moment(z_prime, X, Y, spec_x: KernelSpec, spec_y: KernelSpec) -> np.ndarray:
    x_prime, y_prime = z_prime
    Kx = gram(spec_x, X).values
    Ky = gram(spec_y, Y).values
    kx = cross_gram(spec_x, X, _point(x_prime))[:, 0]
    ky = cross_gram(spec_y, Y, _point(y_prime))[:, 0]
    return kx * ky - (Kx * Ky).mean(axis=1)


def eif_kernel_cco(z_prime, X, Y, spec_x: KernelSpec, spec_y: KernelSpec) -> np.ndarray:
    """EIF of the kernel cross-covariance operator evaluated at each ``(X_i, Y_i)``."""
    x_prime, y_prime = z_prime
    Kx = gram(spec_x, X).values
    Ky = gram(spec_y, Y).values
    mx = Kx.mean(axis=1)
    my = Ky.mean(axis=1)
    kx = cross_gram(spec_x, X, _point(x_prime))[:, 0] - mx
    ky = cross_gram(spec_y, Y, _point(y_prime))[:, 0] - my
    cov = ((Kx - mx[:, None]) * (Ky - my[:, None])).mean(axis=1)
    return kx * ky - cov


def _resolvent(model: KccaModel, view: str, j: int):
    """``C^-1/2 (B - rho_j^2)^+ C^-1/2`` with the eigenspace of ``rho_j^2`` removed."""
    if view == "x":
        C, xi, corr = model.Cxx, model.xi_x, model.corr_x
    else:
        C, xi, corr = model.Cyy, model.xi_y, model.corr_y
    target = model.rho[j] ** 2
    gaps = corr**2 - target
    off = np.abs(gaps) >= DEGENERACY_TOL
    degenerate = np.count_nonzero(~off) > 1
    inner = (xi[:, off] / gaps[off]) @ xi[:, off].T
    root = _sym_power(C, -0.5)
    return root @ inner @ root, degenerate


def eif_kcca_rows(model: KccaModel, Kx_rows, Ky_rows, j: int = 0, regularized: bool = True):
    """Vectorized EIF of kernel CCA for perturbing points given by kernel rows.

    ``Kx_rows`` / ``Ky_rows`` are raw kernel evaluations (T x n) between the
    perturbing points and the training sample. Returns ``(if_rho, if_fx,
    if_fy, degenerate)`` with ``if_rho`` of length T and the variate
    influences as T x n matrices of values at the sample points.

    With ``regularized=True`` (default) the result is the exact first-order
    perturbation of the kappa-regularized problem. It adds to the unregularized
    expressions the terms that come from the constraint
    ``<f, (Sigma + kappa I) f> = 1``, e.g. ``-rho^2 kappa (||f_x||^2 + ||f_y||^2)``
    for the squared correlation. All extra terms vanish as ``kappa -> 0``.
    ``regularized=False`` evaluates the unregularized expressions.
    """
    if not 0 <= j < model.p:
        raise ValueError(f"component index {j} outside [0, {model.p})")
    rho = float(model.rho[j])
    kappa = model.kappa if regularized else 0.0
    px = model.basis_x.project(center_test(Kx_rows, model.Kx, model.center_weights_x))
    py = model.basis_y.project(center_test(Ky_rows, model.Ky, model.center_weights_y))
    fx = model.vx[:, j]
    fy = model.vy[:, j]
    u = px @ fx
    v = py @ fy
    if_rho = (-rho**2 * u**2 + 2 * rho * u * v - rho**2 * v**2
              - rho**2 * kappa * (fx @ fx + fy @ fy))

    Lx, deg_x = _resolvent(model, "x", j)
    Ly, deg_y = _resolvent(model, "y", j)
    # Cxy Cyy^-1 and Cyx Cxx^-1 carry one view's coordinates into the other
    to_x = model.Cxy @ np.linalg.inv(model.Cyy)
    to_y = model.Cxy.T @ np.linalg.inv(model.Cxx)
    gx = (rho * (v - rho * u))[:, None] * px + (u - rho * v)[:, None] * (py @ to_x.T) \
        - kappa * (rho * to_x @ fy + rho**2 * fx)[None, :]
    gy = (rho * (u - rho * v))[:, None] * py + (v - rho * u)[:, None] * (px @ to_y.T) \
        - kappa * (rho * to_y @ fx + rho**2 * fy)[None, :]
    dx = -gx @ Lx + 0.5 * (1 - u**2 - kappa * (fx @ fx))[:, None] * fx[None, :]
    dy = -gy @ Ly + 0.5 * (1 - v**2 - kappa * (fy @ fy))[:, None] * fy[None, :]
    if_fx = dx @ model.basis_x.coords.T
    if_fy = dy @ model.basis_y.coords.T
    return if_rho, if_fx, if_fy, deg_x or deg_y


def eif_kcca(model: KccaModel, X, Y, z_prime, j: int = 0, regularized: bool = True) -> InfluenceRecord:
    """EIF of the j-th kernel canonical correlation and variates at ``z_prime = (x', y')``."""
    spec_x, spec_y = model.specs
    if spec_x is None or spec_y is None:
        raise ValueError("model carries no kernel specs; use eif_kcca_rows with kernel rows")
    x_prime, y_prime = z_prime
    kx = cross_gram(spec_x, _point(x_prime), X)
    ky = cross_gram(spec_y, _point(y_prime), Y)
    if_rho, if_fx, if_fy, degenerate = eif_kcca_rows(model, kx, ky, j, regularized)
    if degenerate:
        warnings.warn(f"canonical correlation {j} is (near-)degenerate; "
                      "variate influence computed off its eigenspace", RuntimeWarning, stacklevel=2)
    return InfluenceRecord(j, float(if_rho[0]), if_fx[0], if_fy[0], degenerate=degenerate)


def index_plot_data(model: KccaModel, j: int = 0, regularized: bool = True) -> list[InfluenceRecord]:
    """Influence of every training subject, in subject order."""
    if_rho, if_fx, if_fy, degenerate = eif_kcca_rows(model, model.Kx, model.Ky, j, regularized)
    return [InfluenceRecord(j, float(if_rho[i]), if_fx[i], if_fy[i], point_index=i, degenerate=degenerate)
            for i in range(model.n)]


def gateaux_oracle(functional: Callable[[np.ndarray], np.ndarray], n: int, epsilon: float):
    """One-sided Gateaux difference quotient of a weighted-sample functional.

    ``functional`` maps weights over the sample augmented with the perturbing
    point (last position) to a value. The quotient compares weights
    ``((1 - eps)/n, ..., eps)`` with the empirical weights ``(1/n, ..., 0)``.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    base = np.append(np.full(n, 1.0 / n), 0.0)
    mixed = np.append(np.full(n, (1.0 - epsilon) / n), epsilon)
    return (np.asarray(functional(mixed)) - np.asarray(functional(base))) / epsilon


def augmented_gram(spec: KernelSpec, X, z) -> np.ndarray:
    """Gram matrix of the sample with the point ``z`` appended last."""
    X = np.asarray(X, dtype=float)
    X = X[:, None] if X.ndim == 1 else X
    return gram(spec, np.vstack([X, _point(z)])).values


def mean_element_functional(K_eval_aug):
    """Weighted kernel mean element evaluated at fixed points."""
    K_eval_aug = as_matrix(K_eval_aug)
    return lambda w: K_eval_aug @ w


def cross_raw_moment_functional(Kx_eval_aug, Ky_eval_aug):
    M = as_matrix(Kx_eval_aug) * as_matrix(Ky_eval_aug)
    return lambda w: M @ w


def cco_functional(Kx_eval_aug, Ky_eval_aug):
    """Weighted covariance of ``k_x(X_i, .)`` and ``k_y(Y_i, .)`` for each evaluation point."""
    A = as_matrix(Kx_eval_aug)
    B = as_matrix(Ky_eval_aug)
    return lambda w: (A * B) @ w - (A @ w) * (B @ w)


def kcca_rho2_functional(Kx_aug, Ky_aug, kappa: float, j: int = 0):
    """Squared j-th canonical correlation of weighted classical kernel CCA."""
    def value(w):
        return fit_weighted(Kx_aug, Ky_aug, w, kappa, p=j + 1).rho[j] ** 2
    return value


def kcca_variates_functional(Kx_aug, Ky_aug, kappa: float, j: int = 0, n_eval: int | None = None):
    """Weighted kernel CCA variates of component j at the first ``n_eval`` sample points.

    Evaluation uses the empirical (unperturbed) centering so that the
    quotient tracks the change of the canonical functions alone.
    """
    Kx_aug = as_matrix(Kx_aug)
    Ky_aug = as_matrix(Ky_aug)
    n = Kx_aug.shape[0] - 1
    n_eval = n if n_eval is None else n_eval
    base = np.append(np.full(n, 1.0 / n), 0.0)

    def evaluate(K, alpha, w):
        # <sum_a alpha_a (phi_a - mu_w), phi_i - mu_base>
        Kb = K @ base
        Kw = K @ w
        return (K[:n_eval] - Kb[None, :] - Kw[:n_eval, None] + float(w @ Kb)) @ alpha

    def value(w):
        model = fit_weighted(Kx_aug, Ky_aug, w, kappa, p=j + 1)
        return np.concatenate([evaluate(Kx_aug, model.alphaX[:, j], w),
                               evaluate(Ky_aug, model.alphaY[:, j], w)])
    return value
