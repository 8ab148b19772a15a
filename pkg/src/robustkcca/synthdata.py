"""Seeded synthetic datasets with ideal (ID) and contaminated (CD) variants.

Every generator draws the ideal sample and the contamination from two
independent child streams of one seed. The CD variant of a seed is therefore
the ID variant of that seed with a random ``ceil(fraction * n)`` subset of rows
regenerated from the contaminating distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SeedLike = int | np.random.SeedSequence


@dataclass
class Dataset:
    X: np.ndarray
    Y: np.ndarray | None = None
    labels: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def contaminated_indices(self) -> np.ndarray:
        return np.asarray(self.meta.get("contaminated_indices", []), dtype=int)


def _streams(seed: SeedLike) -> tuple[np.random.Generator, np.random.Generator]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    base, contam = ss.spawn(2)
    return np.random.default_rng(base), np.random.default_rng(contam)


def _subset(rng: np.random.Generator, n: int, contaminated: bool, fraction: float) -> np.ndarray:
    if not 0 <= fraction < 1:
        raise ValueError(f"contamination fraction must lie in [0, 1), got {fraction}")
    if not contaminated:
        return np.zeros(0, dtype=int)
    size = math.ceil(fraction * n)
    return np.sort(rng.choice(n, size=size, replace=False))


def _meta(name, seed, contaminated, fraction, idx, **extra) -> dict:
    seed_value = seed.entropy if isinstance(seed, np.random.SeedSequence) else seed
    return {"generator": name, "seed": seed_value, "contaminated": bool(contaminated),
            "fraction": float(fraction) if contaminated else 0.0,
            "contaminated_indices": idx.tolist(), **extra}


def gen_tcsd(n1: int, n2: int, n3: int, contaminated: bool = False, fraction: float = 0.05,
             seed: SeedLike = 0) -> Dataset:
    """Three noisy circles of radii 1, 0.5 and 0.25.

    Contaminated rows are replaced by points drawn uniformly from
    ``[-10, 10]^2``.
    """
    counts = (n1, n2, n3)
    if min(counts) < 1:
        raise ValueError(f"circle sizes must be at least 1, got {counts}")
    rng, crng = _streams(seed)
    n = sum(counts)
    radius = np.repeat([1.0, 0.5, 0.25], counts)
    angle = rng.uniform(-np.pi, np.pi, n)
    X = radius[:, None] * np.c_[np.cos(angle), np.sin(angle)] + rng.normal(0.0, 0.1, (n, 2))
    idx = _subset(crng, n, contaminated, fraction)
    X[idx] = crng.uniform(-10.0, 10.0, (idx.size, 2))
    labels = np.repeat([0, 1, 2], counts)
    return Dataset(X, None, labels, _meta("tcsd", seed, contaminated, fraction, idx))


def gen_sfsd(n: int, contaminated: bool = False, fraction: float = 0.05, seed: SeedLike = 0) -> Dataset:
    """Rows ``(Z, 2 sin 2Z, ..., 10 sin 10Z) + noise`` with ``Z ~ U[-2 pi, 0]``.

    Contaminated rows use noise ``N(0, 10 I)`` instead of ``N(0, 0.01 I)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng, crng = _streams(seed)
    Z = rng.uniform(-2 * np.pi, 0.0, n)
    j = np.arange(1, 11)
    clean = j * np.sin(np.outer(Z, j))
    clean[:, 0] = Z
    noise = rng.normal(0.0, 0.1, (n, 10))
    idx = _subset(crng, n, contaminated, fraction)
    noise[idx] = crng.normal(0.0, np.sqrt(10.0), (idx.size, 10))
    return Dataset(clean + noise, None, None, _meta("sfsd", seed, contaminated, fraction, idx))


def mgsd_covariance(block: int = 6, within: float = 0.7, across: float = 0.3) -> np.ndarray:
    """AR(1) correlation within each block, constant correlation across blocks."""
    lags = np.abs(np.subtract.outer(np.arange(block), np.arange(block)))
    S = np.full((2 * block, 2 * block), across)
    S[:block, :block] = within**lags
    S[block:, block:] = within**lags
    if np.linalg.eigvalsh(S)[0] <= 0:
        raise ValueError("MGSD covariance parameters give a matrix that is not positive definite")
    return S


def gen_mgsd(n: int, contaminated: bool = False, fraction: float = 0.05, seed: SeedLike = 0,
             within: float = 0.7, across: float = 0.3) -> Dataset:
    """``Z ~ N(0, Sigma)`` in R^12; ``X`` = first six coordinates, ``Y = log|last six|``.

    Contaminated rows are drawn from ``N(1, Sigma)``. Rows with an exact zero
    in the ``Y`` block are redrawn.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng, crng = _streams(seed)
    S = mgsd_covariance(6, within, across)

    def draw(gen, size, mean):
        Z = gen.multivariate_normal(np.full(12, mean), S, size=size, method="cholesky")
        bad = np.any(Z[:, 6:] == 0, axis=1)
        while np.any(bad):
            Z[bad] = gen.multivariate_normal(np.full(12, mean), S, size=int(bad.sum()), method="cholesky")
            bad = np.any(Z[:, 6:] == 0, axis=1)
        return Z

    Z = draw(rng, n, 0.0)
    idx = _subset(crng, n, contaminated, fraction)
    Z[idx] = draw(crng, idx.size, 1.0)
    meta = _meta("mgsd", seed, contaminated, fraction, idx, within=within, across=across)
    return Dataset(Z[:, :6], np.log(np.abs(Z[:, 6:])), None, meta)


def gen_scsd(n: int, contaminated: bool = False, fraction: float = 0.05, seed: SeedLike = 0,
             d: int = 100) -> Dataset:
    """``X_ij = sin(j Z_i) + eta_i``, ``Y_ij = cos(j Z_i) + eta_i`` for ``j = 1..d``.

    ``eta_i ~ N(0, 0.01)`` for ideal rows and ``N(1, 0.01)`` for contaminated ones.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng, crng = _streams(seed)
    Z = rng.uniform(-np.pi, np.pi, n)
    eta = rng.normal(0.0, 0.1, n)
    idx = _subset(crng, n, contaminated, fraction)
    eta[idx] = crng.normal(1.0, 0.1, idx.size)
    arg = np.outer(Z, np.arange(1, d + 1))
    return Dataset(np.sin(arg) + eta[:, None], np.cos(arg) + eta[:, None], None,
                   _meta("scsd", seed, contaminated, fraction, idx))


def _genotype_cuts(maf: float) -> np.ndarray:
    """Standard-normal thresholds giving Hardy-Weinberg genotype frequencies."""
    from scipy.stats import norm

    q = maf
    return norm.ppf([(1 - q) ** 2, (1 - q) ** 2 + 2 * q * (1 - q)])


def gen_smsd(n: int, p_snp: int = 1000, p_voxel: int = 1000, signal: float = 0.5,
             noise_id: float = 1.0, noise_cd: float = 5.0, contaminated: bool = False,
             fraction: float = 0.05, seed: SeedLike = 0, support: float = 0.1,
             maf: float = 0.3) -> Dataset:
    """Latent-factor SNP / voxel data.

    A latent ``u_i ~ N(0, 1)`` enters a random ``support`` share of the SNP and
    voxel columns with loading ``signal``. Voxels are ``signal u_i + noise e``.
    SNPs discretize ``(signal u_i + noise e) / sd`` into {0, 1, 2} at
    Hardy-Weinberg thresholds for minor-allele frequency ``maf``; columns off
    the support carry noise only. Contaminated rows use ``noise_cd``.
    """
    if min(p_snp, p_voxel) < 10:
        raise ValueError("SMSD needs at least 10 SNPs and 10 voxels")
    if n < 1:
        raise ValueError("n must be at least 1")
    rng, crng = _streams(seed)
    k_snp = max(1, round(support * p_snp))
    k_vox = max(1, round(support * p_voxel))
    snp_cols = np.sort(rng.choice(p_snp, k_snp, replace=False))
    vox_cols = np.sort(rng.choice(p_voxel, k_vox, replace=False))
    load_x = np.zeros(p_snp)
    load_y = np.zeros(p_voxel)
    load_x[snp_cols] = signal
    load_y[vox_cols] = signal

    u = rng.normal(size=n)
    ex = rng.normal(size=(n, p_snp))
    ey = rng.normal(size=(n, p_voxel))
    idx = _subset(crng, n, contaminated, fraction)
    noise = np.full(n, float(noise_id))
    noise[idx] = noise_cd

    liability = np.outer(u, load_x) + noise[:, None] * ex
    # scale by the ideal-data spread so the genotype frequencies hold on ID rows
    scale = np.sqrt(load_x**2 + noise_id**2)
    X = np.searchsorted(_genotype_cuts(maf), liability / scale).astype(float)
    Y = np.outer(u, load_y) + noise[:, None] * ey
    meta = _meta("smsd", seed, contaminated, fraction, idx, signal=signal, noise_id=noise_id,
                 noise_cd=noise_cd, snp_support=snp_cols.tolist(), voxel_support=vox_cols.tolist())
    return Dataset(X, Y, None, meta)


GENERATORS = {"tcsd": gen_tcsd, "sfsd": gen_sfsd, "mgsd": gen_mgsd, "scsd": gen_scsd, "smsd": gen_smsd}


def generate(name: str, n: int, contaminated: bool = False, fraction: float = 0.05,
             seed: SeedLike = 0, **kwargs) -> Dataset:
    """Uniform entry point; TCSD splits ``n`` over the circles as evenly as possible."""
    if name not in GENERATORS:
        raise ValueError(f"unknown generator {name!r}; expected one of {sorted(GENERATORS)}")
    if name == "tcsd":
        base, extra = divmod(n, 3)
        sizes = [base + (i < extra) for i in range(3)]
        return gen_tcsd(*sizes, contaminated=contaminated, fraction=fraction, seed=seed)
    return GENERATORS[name](n, contaminated=contaminated, fraction=fraction, seed=seed, **kwargs)
