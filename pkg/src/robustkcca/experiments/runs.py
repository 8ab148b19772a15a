"""The synthetic and real-data experiments.

Each replicate draws its data from ``SeedSequence(seed, spawn_key=(rep, ...))``
so results do not depend on the order or parallelism of replicates.
"""

from __future__ import annotations

from importlib import resources

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.model_selection import StratifiedKFold

from ..influence import eif_kcca_rows, index_plot_data
from ..kcca import KccaModel, canonical_variates, classical_kcca, robust_kcca
from ..kernels import center_weighted, cross_gram, gram, uniform_weights
from ..metrics import eta_co, eta_f, eta_rho, eta_rkco_terms, population_term
from ..robust import DualOperator, RobustLoss, kirwls, kirwls_cco, robust_center
from ..synthdata import Dataset, generate
from .config import ExperimentConfig, parse_kernel
from .io import TabularResult, ingest_dataset

METHODS = ("classical", "robust")


def _stream(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))


def _summary(values) -> tuple[float, float, int]:
    v = np.asarray(values, dtype=float)
    sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return float(v.mean()), sd, int(v.size)


def _loss(config: ExperimentConfig) -> RobustLoss:
    return RobustLoss(config.loss)


def run_cov_accuracy(config: ExperimentConfig) -> TabularResult:
    """Distance of classical and robust second-moment estimates from a large ideal sample.

    For every population size N and sample size n, a contaminated sample of
    size n is compared with an independent ideal population of size N.
    """
    result = TabularResult(["generator", "kernel", "N", "n", "estimator", "mean", "sd", "count"])
    loss = _loss(config)
    for gen in config.generators:
        for kname in config.kernels:
            for N in config.population:
                values = {(n, m): [] for n in config.n for m in METHODS}
                for rep in range(config.replicates):
                    P = generate(gen, N, seed=_stream(config.seed, rep, 0, N), **config.generator_options).X
                    spec = parse_kernel(kname, P)
                    pop = population_term(spec, P)
                    for n in config.n:
                        X = generate(gen, n, contaminated=True, fraction=config.fraction,
                                     seed=_stream(config.seed, rep, 1, N, n), **config.generator_options).X
                        K = gram(spec, X).values
                        Kc = cross_gram(spec, X, P)
                        w = kirwls(K**2, loss).weights
                        values[n, "classical"].append(eta_rkco_terms(K, Kc, pop, uniform_weights(n)))
                        values[n, "robust"].append(eta_rkco_terms(K, Kc, pop, w))
                for n in config.n:
                    for m in METHODS:
                        result.add(gen, kname, N, n, m, *_summary(values[n, m]))
    return result


def covariance_operators(K, loss: RobustLoss) -> dict[str, DualOperator]:
    """Classical and robust kernel covariance operators of one Gram matrix."""
    K = np.asarray(K)
    n = K.shape[0]
    Kc = center_weighted(K, uniform_weights(n)).values
    Kr, _ = robust_center(K, loss)
    robust, _ = kirwls_cco(Kr.values, Kr.values, loss)
    return {"classical": DualOperator(uniform_weights(n), Kc, Kc), "robust": robust}


def run_norm_ratio(config: ExperimentConfig) -> TabularResult:
    """Matrix-norm ratio between ideal and contaminated covariance operators."""
    result = TabularResult(["generator", "kernel", "n", "norm", "estimator", "mean", "sd", "count"])
    loss = _loss(config)
    for gen in config.generators:
        for kname in config.kernels:
            for n in config.n:
                values = {(k, m): [] for k in config.norms for m in METHODS}
                for rep in range(config.replicates):
                    ops = {}
                    for cd in (False, True):
                        X = generate(gen, n, contaminated=cd, fraction=config.fraction,
                                     seed=_stream(config.seed, rep), **config.generator_options).X
                        ops[cd] = covariance_operators(gram(parse_kernel(kname, X), X).values, loss)
                    for k in config.norms:
                        for m in METHODS:
                            values[k, m].append(eta_co(ops[False][m], ops[True][m], k))
                for k in config.norms:
                    for m in METHODS:
                        result.add(gen, kname, n, k, m, *_summary(values[k, m]))
    return result


def _paired_grams(config: ExperimentConfig, ds: Dataset):
    kx = config.kernels[0] if config.kernels else "gaussian"
    Kx = gram(parse_kernel(kx, ds.X), ds.X)
    Ky = gram(parse_kernel(config.kernel_y, ds.Y), ds.Y)
    return Kx, Ky


def _fit(method: str, Kx, Ky, config: ExperimentConfig, p: int) -> KccaModel:
    if method == "classical":
        return classical_kcca(Kx, Ky, config.kappa, p)
    return robust_kcca(Kx, Ky, _loss(config), config.kappa, p)


def run_if_ratio(config: ExperimentConfig) -> TabularResult:
    """Influence ratios of kernel CCA between ideal and contaminated paired data."""
    result = TabularResult(["generator", "n", "method", "measure", "mean", "sd", "count"])
    j = config.component - 1
    for gen in config.generators:
        for n in config.n:
            values = {(m, k): [] for m in METHODS for k in ("eta_rho", "eta_f")}
            for rep in range(config.replicates):
                eif = {}
                for cd in (False, True):
                    ds = generate(gen, n, contaminated=cd, fraction=config.fraction,
                                  seed=_stream(config.seed, rep), **config.generator_options)
                    Kx, Ky = _paired_grams(config, ds)
                    for m in METHODS:
                        model = _fit(m, Kx, Ky, config, config.component)
                        eif[m, cd] = eif_kcca_rows(model, model.Kx, model.Ky, j)
                for m in METHODS:
                    id_rho, id_fx, id_fy, _ = eif[m, False]
                    cd_rho, cd_fx, cd_fy, _ = eif[m, True]
                    values[m, "eta_rho"].append(eta_rho(id_rho, cd_rho))
                    values[m, "eta_f"].append(eta_f(id_fx, id_fy, cd_fx, cd_fy))
            for m in METHODS:
                for k in ("eta_rho", "eta_f"):
                    result.add(gen, n, m, k, *_summary(values[m, k]))
    return result


def run_index_plot(config: ExperimentConfig) -> TabularResult:
    """Per-subject influence on the squared canonical correlation."""
    result = TabularResult(["subject", "method", "variant", "eta"])
    gen = config.generators[0]
    n = config.n[0]
    for variant, cd in (("ID", False), ("CD", True)):
        ds = generate(gen, n, contaminated=cd, fraction=config.fraction,
                      seed=_stream(config.seed, 0), **config.generator_options)
        Kx, Ky = _paired_grams(config, ds)
        for m in METHODS:
            model = _fit(m, Kx, Ky, config, config.component)
            for rec in index_plot_data(model, config.component - 1):
                result.add(rec.point_index, m, variant, rec.if_rho)
    return result


def knn_predict(train_F, train_labels, test_F, k: int = 5) -> np.ndarray:
    """Euclidean kNN vote.

    Vote ties go to the tied class whose neighbours are closest on average,
    then to the smallest class index.
    """
    train_labels = np.asarray(train_labels)
    if k < 1:
        raise ValueError("k must be at least 1")
    k = min(k, train_labels.size)
    D = cdist(np.atleast_2d(test_F), np.atleast_2d(train_F))
    out = np.empty(D.shape[0], dtype=train_labels.dtype)
    for t, row in enumerate(D):
        near = np.argsort(row, kind="stable")[:k]
        classes, counts = np.unique(train_labels[near], return_counts=True)
        tied = classes[counts == counts.max()]
        mean_dist = [row[near][train_labels[near] == c].mean() for c in tied]
        order = np.lexsort((tied, mean_dist))
        out[t] = tied[order[0]]
    return out


def load_dataset(config: ExperimentConfig) -> Dataset:
    if config.dataset == "wine":
        path = resources.files("robustkcca.experiments").joinpath("data/wine.csv")
        with resources.as_file(path) as p:
            return ingest_dataset(p, label_column="class", y_columns=None)
    return ingest_dataset(config.dataset, label_column=config.label_column, y_columns=None)


def run_classify(config: ExperimentConfig) -> TabularResult:
    """kNN error (%) on canonical variates with stratified k-fold cross-validation.

    Kernel CCA is fitted on each training fold against one-hot labels; the
    test fold is projected with the training statistics. Features are
    standardized with training-fold moments.
    """
    result = TabularResult(["dataset", "method", "components", "mean", "sd", "count"])
    ds = load_dataset(config)
    if ds.labels is None:
        raise ValueError("classification needs a label column")
    labels = ds.labels
    onehot = np.eye(labels.max() + 1)[labels]
    folds = StratifiedKFold(n_splits=config.folds, shuffle=True, random_state=config.seed)
    p_max = max(config.components)
    errors = {(m, p): [] for m in METHODS for p in config.components}
    for train, test in folds.split(ds.X, labels):
        mu = ds.X[train].mean(axis=0)
        sd = ds.X[train].std(axis=0)
        sd[sd == 0] = 1.0
        Xtr = (ds.X[train] - mu) / sd
        Xte = (ds.X[test] - mu) / sd
        spec_x = parse_kernel(config.kernels[0] if config.kernels else "gaussian", Xtr)
        spec_y = parse_kernel("linear")
        Kx = gram(spec_x, Xtr)
        Ky = gram(spec_y, onehot[train])
        p = min(p_max, train.size)
        for m in METHODS:
            model = _fit(m, Kx, Ky, config, p)
            f_train, _ = canonical_variates(model, Kx, Ky)
            f_test, _ = canonical_variates(model, cross_gram(spec_x, Xte, Xtr),
                                           cross_gram(spec_y, onehot[test], onehot[train]))
            for q in config.components:
                pred = knn_predict(f_train[:, :q], labels[train], f_test[:, :q], config.knn_k)
                errors[m, q].append(100.0 * np.mean(pred != labels[test]))
    for m in METHODS:
        for q in config.components:
            result.add(config.dataset, m, q, *_summary(errors[m, q]))
    return result


RUNNERS = {"cov-accuracy": run_cov_accuracy, "norm-ratio": run_norm_ratio, "if-ratio": run_if_ratio,
           "index-plot": run_index_plot, "classify": run_classify}


def run_experiment(config: ExperimentConfig) -> TabularResult:
    return RUNNERS[config.experiment](config)
