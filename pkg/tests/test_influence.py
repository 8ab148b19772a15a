import warnings

import numpy as np
import pytest

from robustkcca.experiments.config import parse_kernel
from robustkcca.influence import (augmented_gram, cco_functional, cross_raw_moment_functional, eif_cross_raw_moment,
                                  eif_kcca, eif_kcca_rows, eif_kernel_cco, eif_kernel_me, gateaux_oracle,
                                  index_plot_data, kcca_rho2_functional, kcca_variates_functional,
                                  mean_element_functional)
from robustkcca.kcca import canonical_variates, classical_kcca, fit_weighted, robust_kcca
from robustkcca.kernels import KernelSpec, cross_gram, gram, uniform_weights
from robustkcca.robust import RobustLoss
from robustkcca.synthdata import generate

GAUSS = KernelSpec("gaussian", bandwidth=1.0)
LINEAR = KernelSpec("linear")


def me_oracle(X, z, spec, eps):
    K_eval = augmented_gram(spec, X, z)[: len(X)]
    return gateaux_oracle(mean_element_functional(K_eval), len(X), eps)


def test_eif_me_examples():
    np.testing.assert_allclose(eif_kernel_me([1.0], np.array([[0.0], [2.0]]), LINEAR), [0.0, 0.0], atol=0)
    X = np.random.default_rng(0).normal(size=(6, 2))
    np.testing.assert_allclose(eif_kernel_me([0.3, 0.1], X, KernelSpec("gaussian", bandwidth=1e12)), 0, atol=1e-12)
    # k(., 0) = 0 under the linear kernel, leaving minus the row means
    np.testing.assert_allclose(eif_kernel_me([0.0, 0.0], X, LINEAR), -(X @ X.T).mean(axis=1), atol=1e-15)


def test_eif_me_matches_oracle_at_mode():
    X = np.random.default_rng(1).normal(size=(30, 1))
    z = X[np.argmax(gram(GAUSS, X).values.sum(axis=1))]
    np.testing.assert_allclose(eif_kernel_me(z, X, GAUSS), me_oracle(X, z, GAUSS, 1e-6), atol=1e-6)


def test_eif_me_zero_mean_over_sample():
    X = np.random.default_rng(2).normal(size=(25, 2))
    total = sum(eif_kernel_me(x, X, GAUSS) for x in X) / len(X)
    np.testing.assert_allclose(total, 0, atol=1e-10)


def test_eif_cross_raw_moment():
    rng = np.random.default_rng(3)
    X, Y = rng.normal(size=(3, 1)), rng.normal(size=(3, 1))
    z = (np.array([0.2]), np.array([-0.4]))
    # direct substitution
    kx = np.exp(-(X[:, 0] - 0.2) ** 2 / 2)
    ky = np.exp(-(Y[:, 0] + 0.4) ** 2 / 2)
    Kx = np.exp(-(X - X.T) ** 2 / 2)
    Ky = np.exp(-(Y - Y.T) ** 2 / 2)
    expected = kx * ky - (Kx * Ky).mean(axis=1)
    np.testing.assert_allclose(eif_cross_raw_moment(z, X, Y, GAUSS, GAUSS), expected, atol=1e-15)
    # Y = X reduces to the Hadamard-square second raw moment
    second = cross_gram(GAUSS, X, [[0.2]])[:, 0] ** 2 - (gram(GAUSS, X).values ** 2).mean(axis=1)
    np.testing.assert_allclose(eif_cross_raw_moment((np.array([0.2]),) * 2, X, X, GAUSS, GAUSS), second, atol=1e-15)
    wide = KernelSpec("gaussian", bandwidth=1e12)
    np.testing.assert_allclose(eif_cross_raw_moment(z, X, Y, wide, wide), 0, atol=1e-12)


def test_eif_cross_raw_moment_matches_oracle():
    rng = np.random.default_rng(4)
    X, Y = rng.normal(size=(50, 2)), rng.normal(size=(50, 1))
    z = (np.array([0.5, -1.0]), np.array([2.0]))
    A = augmented_gram(GAUSS, X, z[0])[:50]
    B = augmented_gram(GAUSS, Y, z[1])[:50]
    oracle = gateaux_oracle(cross_raw_moment_functional(A, B), 50, 1e-6)
    np.testing.assert_allclose(eif_cross_raw_moment(z, X, Y, GAUSS, GAUSS), oracle, atol=1e-5)


def cco_setup(n=40, seed=5):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    Y = np.sin(X[:, :1]) + 0.2 * rng.normal(size=(n, 1))
    z = (np.array([1.5, 0.3]), np.array([-0.7]))
    A = augmented_gram(GAUSS, X, z[0])[:n]
    B = augmented_gram(GAUSS, Y, z[1])[:n]
    return X, Y, z, cco_functional(A, B)


def test_eif_cco_direct_formula_at_sample_point():
    X, Y, _, _ = cco_setup()
    z = (X[7], Y[7])
    Kx, Ky = gram(GAUSS, X).values, gram(GAUSS, Y).values
    C = np.eye(40) - 1 / 40
    Kxc, Kyc = Kx @ C, Ky @ C  # rows: centered kernel sections in the second argument
    expected = Kxc[:, 7] * Kyc[:, 7] - (Kxc * Kyc).mean(axis=1)
    np.testing.assert_allclose(eif_kernel_cco(z, X, Y, GAUSS, GAUSS), expected, atol=1e-14)
    wide = KernelSpec("gaussian", bandwidth=1e12)
    np.testing.assert_allclose(eif_kernel_cco(z, X, Y, wide, wide), 0, atol=1e-12)


def test_eif_cco_matches_oracle_and_richardson():
    X, Y, z, functional = cco_setup()
    eif = eif_kernel_cco(z, X, Y, GAUSS, GAUSS)
    q5 = gateaux_oracle(functional, 40, 1e-5)
    q6 = gateaux_oracle(functional, 40, 1e-6)
    np.testing.assert_allclose(eif, q6, atol=1e-5)
    # the functional is quadratic in the weights, so the quotient is affine in epsilon
    np.testing.assert_allclose((10 * q6 - q5) / 9, eif, atol=1e-8)
    np.testing.assert_allclose(q5 - eif, 10 * (q6 - eif), atol=1e-8)


def test_gateaux_oracle_rejects_nonpositive_epsilon():
    with pytest.raises(ValueError):
        gateaux_oracle(lambda w: w, 3, 0.0)
    with pytest.raises(ValueError):
        gateaux_oracle(lambda w: w, 3, -1e-3)


def test_boundedness_probe():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(30, 2))
    probe = rng.normal(size=(100, 2)) * 20
    assert max(np.abs(eif_kernel_me(z, X, GAUSS)).max() for z in probe) <= 2
    direction = np.array([0.6, 0.8])
    maxima = [np.abs(eif_kernel_me(r * direction, X, LINEAR)).max() for r in (10, 100, 1000)]
    assert maxima[0] < maxima[1] < maxima[2]


def scsd_model(seed, n=100, cd=False):
    ds = generate("scsd", n, contaminated=cd, seed=seed)
    sx, sy = parse_kernel("gaussian", ds.X), parse_kernel("gaussian", ds.Y)
    return ds, sx, sy, classical_kcca(gram(sx, ds.X), gram(sy, ds.Y), p=2)


def test_rho_influence_matches_weighted_refit():
    ds, sx, sy, model = scsd_model(seed=0)
    k = 17
    rec = eif_kcca(model, ds.X, ds.Y, (ds.X[k], ds.Y[k]), 0)
    Ka, Kb = augmented_gram(sx, ds.X, ds.X[k]), augmented_gram(sy, ds.Y, ds.Y[k])
    oracle = gateaux_oracle(kcca_rho2_functional(Ka, Kb, model.kappa, 0), 100, 1e-4)
    assert abs(rec.if_rho - oracle) <= 0.05 * abs(oracle)


def test_rho_influence_out_of_sample_small_epsilon():
    # an out-of-sample point opens a new feature direction, so the quotient is linear only for eps << kappa
    ds, sx, sy, model = scsd_model(seed=1, n=60)
    z = (ds.X[0] + 0.3, ds.Y[0] - 0.2)
    rec = eif_kcca(model, ds.X, ds.Y, z, 0)
    Ka, Kb = augmented_gram(sx, ds.X, z[0]), augmented_gram(sy, ds.Y, z[1])
    oracle = gateaux_oracle(kcca_rho2_functional(Ka, Kb, model.kappa, 0), 60, 1e-9)
    assert abs(rec.if_rho - oracle) <= 1e-3 * abs(oracle)


def test_variate_influence_matches_oracle():
    rng = np.random.default_rng(9)
    n = 40
    Z = rng.normal(size=n)
    X = np.c_[Z + 0.5 * rng.normal(size=n), rng.normal(size=n)]
    Y = np.c_[Z**2 + 0.5 * rng.normal(size=n)]
    kappa = 1e-3
    model = fit_weighted(gram(GAUSS, X), gram(GAUSS, Y), uniform_weights(n), kappa, p=2)
    k = 3
    _, fx, fy, _ = eif_kcca_rows(model, model.Kx[k:k + 1], model.Ky[k:k + 1], 0)
    _, fx0, _, _ = eif_kcca_rows(model, model.Kx[k:k + 1], model.Ky[k:k + 1], 0, regularized=False)
    Ka, Kb = augmented_gram(GAUSS, X, X[k]), augmented_gram(GAUSS, Y, Y[k])
    oracle = gateaux_oracle(kcca_variates_functional(Ka, Kb, kappa, 0), n, 1e-7)
    err = lambda a, b: np.linalg.norm(a - b) / np.linalg.norm(b)
    assert err(fx[0], oracle[:n]) < 1e-4
    assert err(fy[0], oracle[n:]) < 1e-4
    # the unregularized expression misses the constraint terms at this kappa
    assert err(fx0[0], oracle[:n]) > 10 * err(fx[0], oracle[:n])


def test_rho_zero_gives_zero_influence():
    rng = np.random.default_rng(10)
    x = rng.normal(size=(12, 1))
    y = x**2 + rng.normal(size=(12, 1))
    model = classical_kcca(gram(LINEAR, x), gram(LINEAR, y), p=2)
    assert model.rho[1] == 0
    px, py = rng.normal(size=(5, 1)) * 3, rng.normal(size=(5, 1))
    if_rho, _, _, _ = eif_kcca_rows(model, cross_gram(LINEAR, px, x), cross_gram(LINEAR, py, y), 1)
    np.testing.assert_array_equal(if_rho, 0.0)


def test_unit_correlation_structure():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(50, 2))
    K = gram(GAUSS, X)
    model = classical_kcca(K, K, kappa=1e-6)
    assert model.rho[0] > 0.999
    for z in ((X[4], X[9]), (X[0] + 0.5, X[1])):
        rec = eif_kcca(model, X, X, z, 0)
        fx, fy = canonical_variates(model, cross_gram(GAUSS, [z[0]], X), cross_gram(GAUSS, [z[1]], X))
        u, v = fx[0, 0], fy[0, 0]
        assert rec.if_rho <= 1e-12
        assert abs(rec.if_rho + (u - v) ** 2) <= 5e-3 * (1 + u**2 + v**2)


def test_degenerate_component_warns():
    X = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
    K = gram(LINEAR, X)
    model = classical_kcca(K, K, p=2)
    with pytest.warns(RuntimeWarning):
        rec = eif_kcca(model, X, X, (X[0], X[0]), 0)
    assert rec.degenerate and np.all(np.isfinite(rec.if_fx))


def test_index_plot_basics():
    ds, _, _, model = scsd_model(seed=2, n=50)
    records = index_plot_data(model, 0)
    assert len(records) == 50 and [r.point_index for r in records] == list(range(50))
    assert all(np.isfinite(r.if_rho) and np.all(np.isfinite(r.if_fx)) for r in records)

    X = np.vstack([ds.X, ds.X[5]])
    Y = np.vstack([ds.Y, ds.Y[5]])
    sx, sy = parse_kernel("gaussian", ds.X), parse_kernel("gaussian", ds.Y)
    dup = index_plot_data(classical_kcca(gram(sx, X), gram(sy, Y)), 0)
    np.testing.assert_allclose(dup[50].if_rho, dup[5].if_rho, rtol=1e-12)
    np.testing.assert_allclose(dup[50].if_fx, dup[5].if_fx, rtol=1e-12, atol=1e-12 * np.abs(dup[5].if_fx).max())


def test_index_plot_flags_scsd_outlier():
    hits = 0
    for seed in range(20):
        ds, _, _, model = scsd_model(seed, cd=True)
        values = np.abs([r.if_rho for r in index_plot_data(model, 0)])
        hits += int(np.argmax(values)) in set(ds.contaminated_indices.tolist())
    assert hits >= 18, f"an outlier had the largest |influence| in {hits}/20 seeds"


def test_robust_model_influence_is_finite():
    ds = generate("scsd", 40, contaminated=True, seed=3)
    sx, sy = parse_kernel("gaussian", ds.X), parse_kernel("gaussian", ds.Y)
    model = robust_kcca(gram(sx, ds.X), gram(sy, ds.Y), RobustLoss.huber())
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rec = eif_kcca(model, ds.X, ds.Y, (ds.X[0], ds.Y[0]))
    assert np.isfinite(rec.if_rho)
