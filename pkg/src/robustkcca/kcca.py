"""Classical and robust kernel CCA in dual (sample) coordinates.

The centered Gram ``Kc = U diag(lam) U^T`` gives explicit coordinates
``F = U diag(sqrt(lam))`` of the centered feature vectors in an orthonormal
basis of their span. Inside that span the weighted (cross-)covariance
operators are ``F_x^T W F_y`` and the regularized problem is ordinary
regularized CCA; outside the span every cross-covariance vanishes, so no
canonical direction lives there. Dual coefficients are recovered as
``alpha = U diag(lam^-1/2) v`` for feature-space coordinates ``v``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import KernelSpec, as_matrix, center_test, center_weighted, check_weights, uniform_weights
from .robust import DEFAULT_MAX_ITER, DEFAULT_THRESHOLD, RobustLoss, kirwls_cco, robust_center

DEFAULT_KAPPA = 1e-5
# eigenvalue gap below which canonical correlations are treated as tied
DEGENERACY_TOL = 1e-8


@dataclass(frozen=True)
class FeatureBasis:
    """Orthonormal coordinates of centered features: ``coords = U sqrt(lam)``."""

    U: np.ndarray
    lam: np.ndarray

    @property
    def coords(self) -> np.ndarray:
        return self.U * np.sqrt(self.lam)

    @property
    def rank(self) -> int:
        return self.lam.shape[0]

    def project(self, Kc_test) -> np.ndarray:
        """Coordinates of centered test points (rows of ``Kc_test``)."""
        return (np.atleast_2d(Kc_test) @ self.U) / np.sqrt(self.lam)

    def dual(self, v) -> np.ndarray:
        """Dual coefficients of the feature-space element with coordinates ``v``."""
        return (self.U / np.sqrt(self.lam)) @ v


def feature_basis(Kc) -> FeatureBasis:
    Kc = as_matrix(Kc)
    lam, U = np.linalg.eigh(Kc)
    top = max(float(lam[-1]), 0.0)
    keep = lam > top * Kc.shape[0] * np.finfo(float).eps
    if not np.any(keep):
        # a constant kernel has no centered features at all
        return FeatureBasis(np.zeros((Kc.shape[0], 0)), np.zeros(0))
    return FeatureBasis(U[:, keep][:, ::-1], lam[keep][::-1])


def _sym_power(C, power):
    evals, evecs = np.linalg.eigh(C)
    return (evecs * evals**power) @ evecs.T


@dataclass
class KccaModel:
    rho: np.ndarray
    alphaX: np.ndarray
    alphaY: np.ndarray
    weights: np.ndarray
    kappa: float
    p: int
    center_weights_x: np.ndarray
    center_weights_y: np.ndarray
    specs: tuple[KernelSpec | None, KernelSpec | None] = (None, None)
    # training Grams and the whitened problem, kept for prediction and influence
    Kx: np.ndarray = field(default=None, repr=False)
    Ky: np.ndarray = field(default=None, repr=False)
    basis_x: FeatureBasis = field(default=None, repr=False)
    basis_y: FeatureBasis = field(default=None, repr=False)
    Cxx: np.ndarray = field(default=None, repr=False)
    Cyy: np.ndarray = field(default=None, repr=False)
    Cxy: np.ndarray = field(default=None, repr=False)
    # full orthonormal eigenbases of the whitened problem for each view and
    # the matching correlations (zero-padded past the shared rank)
    xi_x: np.ndarray = field(default=None, repr=False)
    xi_y: np.ndarray = field(default=None, repr=False)
    corr_x: np.ndarray = field(default=None, repr=False)
    corr_y: np.ndarray = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.alphaX.shape[0]

    def _coords(self, C, xi, rank) -> np.ndarray:
        out = np.zeros((rank, self.p))
        q = min(rank, self.p)
        if q:
            out[:, :q] = _sym_power(C, -0.5) @ xi[:, :q]
        return out

    @property
    def vx(self) -> np.ndarray:
        """Feature coordinates of the X canonical functions (rank_x x p, zero past the rank)."""
        return self._coords(self.Cxx, self.xi_x, self.basis_x.rank)

    @property
    def vy(self) -> np.ndarray:
        return self._coords(self.Cyy, self.xi_y, self.basis_y.rank)

    def variance_constraint(self) -> tuple[np.ndarray, np.ndarray]:
        """``<f, (Sigma + kappa I) f>`` for every component of each view."""
        vx, vy = self.vx, self.vy
        return (np.einsum("ij,ik,kj->j", vx, self.Cxx, vx),
                np.einsum("ij,ik,kj->j", vy, self.Cyy, vy))


def _tie_groups(corr):
    """Index ranges of correlations whose squares agree within the degeneracy tolerance."""
    start = 0
    while start < corr.shape[0]:
        stop = start + 1
        while stop < corr.shape[0] and abs(corr[start] ** 2 - corr[stop] ** 2) < DEGENERACY_TOL:
            stop += 1
        yield start, stop
        start = stop


def _variance_order(block, C_inv):
    """Rotation of a tied block putting the highest-variance direction first.

    For unit-constraint directions ``xi``, ``kappa xi^T C^-1 xi`` is the part of
    the constraint not spent on variance, so ascending eigenvalues of
    ``block^T C^-1 block`` order the rotated columns by explained variance.
    """
    _, Q = np.linalg.eigh(block.T @ C_inv @ block)
    return Q


def _resolve_ties(xi_x, xi_y, corr_x, corr_y, Cxx, Cyy, shared):
    """Deterministic bases inside tied eigenspaces.

    Tied nonzero correlations rotate both views together so pairs stay
    matched; the (near-)zero block of each view is rotated on its own.
    """
    xi_x = xi_x.copy()
    xi_y = xi_y.copy()
    inv_x = np.linalg.inv(Cxx) if Cxx.size else Cxx
    inv_y = np.linalg.inv(Cyy) if Cyy.size else Cyy
    for start, stop in _tie_groups(corr_x):
        if stop - start < 2:
            continue
        Q = _variance_order(xi_x[:, start:stop], inv_x)
        xi_x[:, start:stop] = xi_x[:, start:stop] @ Q
        if corr_x[start] ** 2 >= DEGENERACY_TOL and stop <= shared:
            xi_y[:, start:stop] = xi_y[:, start:stop] @ Q
    for start, stop in _tie_groups(corr_y):
        if stop - start > 1 and corr_y[start] ** 2 < DEGENERACY_TOL:
            Q = _variance_order(xi_y[:, start:stop], inv_y)
            xi_y[:, start:stop] = xi_y[:, start:stop] @ Q
    return xi_x, xi_y


def fit_weighted(Kx, Ky, w, kappa: float = DEFAULT_KAPPA, p: int = 1,
                 center_wx=None, center_wy=None, specs=(None, None)) -> KccaModel:
    """Regularized kernel CCA with observation weights ``w``.

    Features are centered with ``center_wx`` / ``center_wy`` (default ``w``)
    and every covariance operator is ``sum_i w_i phi_c(x_i) (x) psi_c(y_i)``.
    Uniform weights give classical kernel CCA.
    """
    Kx = as_matrix(Kx)
    Ky = as_matrix(Ky)
    n = Kx.shape[0]
    if Kx.shape != (n, n) or Ky.shape != (n, n):
        raise ValueError(f"Gram matrices must be square and of equal size: {Kx.shape}, {Ky.shape}")
    if not kappa > 0:
        raise ValueError(f"regularizer kappa must be positive, got {kappa}")
    if not 1 <= p <= n:
        raise ValueError(f"number of components must be in [1, {n}], got {p}")
    w = check_weights(w, n)
    center_wx = w if center_wx is None else check_weights(center_wx, n)
    center_wy = w if center_wy is None else check_weights(center_wy, n)

    bx = feature_basis(center_weighted(Kx, center_wx))
    by = feature_basis(center_weighted(Ky, center_wy))
    Fx, Fy = bx.coords, by.coords
    Cxx = (Fx * w[:, None]).T @ Fx + kappa * np.eye(bx.rank)
    Cyy = (Fy * w[:, None]).T @ Fy + kappa * np.eye(by.rank)
    Cxy = (Fx * w[:, None]).T @ Fy
    Cxx = 0.5 * (Cxx + Cxx.T)
    Cyy = 0.5 * (Cyy + Cyy.T)

    if bx.rank and by.rank:
        T = _sym_power(Cxx, -0.5) @ Cxy @ _sym_power(Cyy, -0.5)
        try:
            left, s, right_t = np.linalg.svd(T, full_matrices=True)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(f"kernel CCA eigen-solver failed: {exc}") from exc
        right = right_t.T
    else:
        left, right, s = np.eye(bx.rank), np.eye(by.rank), np.zeros(0)
    corr_x = np.zeros(bx.rank)
    corr_y = np.zeros(by.rank)
    corr_x[: s.size] = s
    corr_y[: s.size] = s
    xi_x, xi_y = _resolve_ties(left, right, corr_x, corr_y, Cxx, Cyy, s.size)

    model = KccaModel(
        rho=np.zeros(p), alphaX=np.zeros((n, p)), alphaY=np.zeros((n, p)), weights=w,
        kappa=float(kappa), p=p, center_weights_x=center_wx, center_weights_y=center_wy,
        specs=tuple(specs), Kx=Kx, Ky=Ky, basis_x=bx, basis_y=by, Cxx=Cxx, Cyy=Cyy, Cxy=Cxy,
        xi_x=xi_x, xi_y=xi_y, corr_x=corr_x, corr_y=corr_y,
    )
    # components beyond the rank of a view are zero functions with zero correlation
    px = min(p, bx.rank)
    py = min(p, by.rank)
    model.rho[: min(px, py)] = corr_x[: min(px, py)]
    if px:
        model.alphaX[:, :px] = bx.dual(_sym_power(Cxx, -0.5) @ xi_x[:, :px])
    if py:
        model.alphaY[:, :py] = by.dual(_sym_power(Cyy, -0.5) @ xi_y[:, :py])
    signs = _sign_flips(model.alphaX)
    model.alphaX *= signs
    model.alphaY *= signs
    model.xi_x = xi_x.copy()
    model.xi_y = xi_y.copy()
    model.xi_x[:, :px] *= signs[:px]
    model.xi_y[:, :py] *= signs[:py]
    return model


def _sign_flips(alpha) -> np.ndarray:
    signs = np.ones(alpha.shape[1])
    for j in range(alpha.shape[1]):
        col = alpha[:, j]
        scale = np.max(np.abs(col)) if col.size else 0.0
        if scale == 0:
            continue
        if col[np.argmax(np.abs(col) > 1e-12 * scale)] < 0:
            signs[j] = -1.0
    return signs


def classical_kcca(Kx, Ky, kappa: float = DEFAULT_KAPPA, p: int = 1) -> KccaModel:
    """Kernel CCA with classical (uniform-weight) centering and operators."""
    n = as_matrix(Kx).shape[0]
    specs = (getattr(Kx, "spec", None), getattr(Ky, "spec", None))
    return fit_weighted(Kx, Ky, uniform_weights(n), kappa, p, specs=specs)


def robust_kcca(Kx, Ky, loss: RobustLoss, kappa: float = DEFAULT_KAPPA, p: int = 1,
                threshold: float = DEFAULT_THRESHOLD, max_iter: int = DEFAULT_MAX_ITER) -> KccaModel:
    """Kernel CCA on robust kernel (cross-)covariance operators.

    Each Gram is centered at its robust kernel mean element; the weights of the
    robust cross-covariance operator are then shared by all three operators.
    """
    if not kappa > 0:
        raise ValueError(f"regularizer kappa must be positive, got {kappa}")
    Kx_c, wx = robust_center(Kx, loss, threshold, max_iter)
    Ky_c, wy = robust_center(Ky, loss, threshold, max_iter)
    op, _ = kirwls_cco(Kx_c, Ky_c, loss, threshold, max_iter)
    specs = (getattr(Kx, "spec", None), getattr(Ky, "spec", None))
    return fit_weighted(Kx, Ky, op.weights, kappa, p, center_wx=wx, center_wy=wy, specs=specs)


def canonical_variates(model: KccaModel, Kx_eval, Ky_eval) -> tuple[np.ndarray, np.ndarray]:
    """Canonical variate values at evaluation points.

    ``Kx_eval`` / ``Ky_eval`` hold raw kernel evaluations between evaluation
    points (rows) and the training points (columns).
    """
    Kx_eval = np.atleast_2d(as_matrix(Kx_eval))
    Ky_eval = np.atleast_2d(as_matrix(Ky_eval))
    if Kx_eval.shape[1] != model.n or Ky_eval.shape[1] != model.n:
        raise ValueError(f"evaluation Grams must have {model.n} columns")
    fx = center_test(Kx_eval, model.Kx, model.center_weights_x) @ model.alphaX
    fy = center_test(Ky_eval, model.Ky, model.center_weights_y) @ model.alphaY
    return fx, fy
