"""Anomaly and change detectors.

Every ``score_*`` function returns a :class:`ScoreVector` whose scores grow
with anomalousness.  Change detection reuses the same machinery: fit on the
before-image pixels, score the after-image pixels.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import rbig
from .errors import (
    DegenerateColumnError,
    DimensionMismatchError,
    DomainError,
    InsufficientSamplesError,
    KindMismatchError,
    UnfittableError,
)
from .numerics import (
    LOG_2PI,
    as_data_matrix,
    cholesky,
    make_rng,
    mean_and_covariance,
    solve_spd,
    spd_inverse,
)
from .parallel import map_chunks

RX_REG = 1e-6
KRX_REG = 1e-3
MAX_SUPPORT = 2000
SIGMA_RULES = ("median", "mean")


@dataclass(frozen=True, eq=False)
class ScoreVector:
    scores: np.ndarray
    detector_tag: str
    monotone_of: str

    def __len__(self):
        return self.scores.size

    def __array__(self, dtype=None, copy=None):
        return self.scores if dtype is None else self.scores.astype(dtype)


@dataclass(frozen=True, eq=False)
class RxModel:
    mean: np.ndarray
    precision: np.ndarray
    reg_lambda: float

    @property
    def dim(self):
        return self.mean.size


@dataclass(frozen=True, eq=False)
class KernelModel:
    """Background sample plus kernel settings for KRX or KDE.

    For KRX, ``factor`` is the lower Cholesky factor of
    ``K_centered + reg_lambda * I`` and ``mean_kernel`` the column means of
    the support kernel matrix.  KDE only needs ``support`` and ``sigma``.
    """

    kind: str
    support: np.ndarray
    sigma: float
    reg_lambda: float = 0.0
    factor: np.ndarray | None = None
    mean_kernel: np.ndarray | None = None

    @property
    def dim(self):
        return self.support.shape[1]


@dataclass(frozen=True, eq=False)
class HybridModel:
    """RX pre-filter and the RBIG model fitted on the rows it retained."""

    rx: RxModel
    density: rbig.GaussianizationModel
    retain_fraction: float
    retained: np.ndarray

    @property
    def dim(self):
        return self.rx.dim


def _check_dim(model_dim, X):
    X = as_data_matrix(X)
    if X.shape[1] != model_dim:
        raise DimensionMismatchError(f"model expects {model_dim} columns, got {X.shape[1]}")
    return X


# ---------------------------------------------------------------- RX


def fit_rx(X, reg_lambda=RX_REG):
    """Gaussian background model: mean and regularized inverse covariance.

    The covariance gets ``reg_lambda * trace(cov) / d`` added to its diagonal
    before inversion.
    """
    X = as_data_matrix(X)
    n, d = X.shape
    mean, cov = mean_and_covariance(X)
    trace = float(np.trace(cov))
    if trace <= 0.0:
        raise UnfittableError("all columns are constant")
    if n <= d:
        warnings.warn(f"{n} samples for {d} bands; raising RX regularization", stacklevel=2)
        reg_lambda = max(reg_lambda, 1e-2)
    ridge = reg_lambda * trace / d
    precision = spd_inverse(cov + ridge * np.eye(d)) if ridge > 0 else spd_inverse(cov)
    return RxModel(mean, precision, reg_lambda)


def score_rx(model, X):
    X = _check_dim(model.dim, X)
    D = X - model.mean
    scores = np.einsum("ij,jk,ik->i", D, model.precision, D)
    return ScoreVector(np.maximum(scores, 0.0), "rx", "mahalanobis")


# ---------------------------------------------------------------- kernels


def _sq_dists(A, B):
    d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
    return np.maximum(d2, 0.0)


def pairwise_distance_scale(X, rule="median"):
    """Median (or mean) of the Euclidean distances over all distinct pairs."""
    if rule not in SIGMA_RULES:
        raise DomainError(f"sigma_rule must be one of {SIGMA_RULES}")
    D = np.sqrt(_sq_dists(X, X))
    iu = np.triu_indices(X.shape[0], k=1)
    dists = D[iu]
    return float(np.median(dists) if rule == "median" else np.mean(dists))


def fit_kernel(X, kind="krx", sigma_rule="median", max_support=MAX_SUPPORT,
               reg_lambda=None, sigma=None, seed=0):
    """Fit a kernel background model of the given ``kind`` ("krx" or "kde").

    Rows beyond ``max_support`` are dropped by uniform subsampling with
    ``seed``.  ``sigma`` defaults to the median (or mean) pairwise distance of
    the support; for KDE that value is further divided by ``sqrt(d)``.
    ``reg_lambda`` defaults to ``1e-3 * trace(K_centered) / n``.
    """
    kind = kind.lower()
    if kind not in ("krx", "kde"):
        raise DomainError(f"kernel kind must be 'krx' or 'kde', got {kind!r}")
    X = as_data_matrix(X)
    n, d = X.shape
    if n < 2:
        raise InsufficientSamplesError("kernel models need at least 2 samples")
    if n > max_support:
        rows = np.sort(make_rng(seed).choice(n, size=max_support, replace=False))
        X = X[rows]
        n = max_support
    if sigma is None:
        sigma = pairwise_distance_scale(X, sigma_rule)
        if sigma <= 0.0:
            raise DegenerateColumnError("all support points coincide; kernel width is zero")
        if kind == "kde":
            sigma /= math.sqrt(d)
    elif sigma <= 0.0:
        raise DomainError("sigma must be positive")

    if kind == "kde":
        return KernelModel("kde", X, float(sigma))

    K = np.exp(-_sq_dists(X, X) / (2.0 * sigma * sigma))
    mean_kernel = K.mean(axis=0)
    Kc = K - mean_kernel[None, :] - mean_kernel[:, None] + mean_kernel.mean()
    Kc = 0.5 * (Kc + Kc.T)
    if reg_lambda is None:
        reg_lambda = KRX_REG * float(np.trace(Kc)) / n
    if reg_lambda <= 0.0:
        raise DomainError("KRX needs a positive regularizer")
    factor = cholesky(Kc + reg_lambda * np.eye(n))
    return KernelModel("krx", X, float(sigma), float(reg_lambda), factor, mean_kernel)


def _kernel_vectors(model, X):
    return np.exp(-_sq_dists(X, model.support) / (2.0 * model.sigma ** 2))


def score_krx(model, X):
    """Kernel RX: ``(k_x - k_bar)^T (K_c + reg I)^-1 (k_x - k_bar)``."""
    if model.kind != "krx":
        raise KindMismatchError(f"score_krx needs a KRX model, got {model.kind!r}")
    X = _check_dim(model.dim, X)

    def chunk(rows):
        D = _kernel_vectors(model, rows) - model.mean_kernel
        W = solve_spd(None, D.T, factor=model.factor)
        return np.einsum("ij,ji->i", D, W)

    scores = map_chunks(chunk, X)
    return ScoreVector(np.maximum(scores, 0.0), "krx", "kernel-quadratic")


def _logsumexp_rows(A):
    m = A.max(axis=1)
    return m + np.log(np.exp(A - m[:, None]).sum(axis=1))


def score_kde(model, X):
    """Negative log of the Gaussian-kernel density estimate."""
    if model.kind != "kde":
        raise KindMismatchError(f"score_kde needs a KDE model, got {model.kind!r}")
    X = _check_dim(model.dim, X)
    n, d = model.support.shape
    s2 = model.sigma ** 2
    log_norm = -0.5 * d * (LOG_2PI + math.log(s2)) - math.log(n)

    def chunk(rows):
        return -(_logsumexp_rows(-_sq_dists(rows, model.support) / (2.0 * s2)) + log_norm)

    return ScoreVector(map_chunks(chunk, X), "kde", "negative-log-density")


# ---------------------------------------------------------------- RBIG


def score_rbig(model, X):
    """Negative RBIG log-density."""
    return ScoreVector(-rbig.log_density(model, X).log_p, "rbig", "negative-log-density")


def fit_hybrid(X, retain_fraction=0.95, rbig_config=None, **rbig_overrides):
    """RX first, then RBIG on the rows RX finds least anomalous.

    Exactly ``floor(retain_fraction * l)`` rows are kept; ties in the RX
    score are broken by row index.
    """
    if not 0.5 <= retain_fraction < 1.0:
        raise DomainError("retain_fraction must lie in [0.5, 1)")
    X = as_data_matrix(X)
    n, d = X.shape
    keep = int(math.floor(retain_fraction * n + 1e-9))
    if keep < 10 * d or keep < rbig.MIN_SAMPLES:
        raise InsufficientSamplesError(
            f"hybrid keeps {keep} of {n} rows, needs at least {max(10 * d, rbig.MIN_SAMPLES)}"
        )
    rx = fit_rx(X)
    order = np.argsort(score_rx(rx, X).scores, kind="stable")
    retained = np.sort(order[:keep])
    density = rbig.fit(X[retained], rbig_config, **rbig_overrides)
    return HybridModel(rx, density, float(retain_fraction), retained)


def score_hybrid(model, X):
    scores = score_rbig(model.density, X).scores
    return ScoreVector(scores, "hybrid", "negative-log-density")


# ---------------------------------------------------------------- dispatch


def fit_detector(X, method, **options):
    """Fit any detector by name: rx, krx, kde, rbig or hybrid."""
    method = method.lower()
    if method == "rx":
        return fit_rx(X, **options)
    if method in ("krx", "kde"):
        return fit_kernel(X, kind=method, **options)
    if method == "rbig":
        return rbig.fit(X, **options)
    if method == "hybrid":
        return fit_hybrid(X, **options)
    raise DomainError(f"unknown detector method {method!r}")


def detector_kind(model):
    if isinstance(model, RxModel):
        return "rx"
    if isinstance(model, KernelModel):
        return model.kind
    if isinstance(model, rbig.GaussianizationModel):
        return "rbig"
    if isinstance(model, HybridModel):
        return "hybrid"
    raise KindMismatchError(f"not a detector model: {type(model).__name__}")


def score(model, X):
    """Anomaly scores of the rows of ``X`` under any fitted detector."""
    kind = detector_kind(model)
    if kind == "rx":
        return score_rx(model, X)
    if kind == "krx":
        return score_krx(model, X)
    if kind == "kde":
        return score_kde(model, X)
    if kind == "rbig":
        return score_rbig(model, X)
    return score_hybrid(model, X)


def score_change(model, X_after):
    """Change scores: improbability of after-image pixels under a model fitted
    on the before image."""
    return score(model, X_after)
