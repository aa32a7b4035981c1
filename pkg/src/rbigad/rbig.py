"""Rotation-based iterative Gaussianization (RBIG) density model.

Each layer Gaussianizes every dimension with a :class:`MarginalMap` and then
applies an orthogonal rotation.  Stacking layers drives the data towards
``N(0, I)``; because the rotations have unit determinant, the log-density of
a point is the standard normal log-density of its image plus the summed
marginal log-derivatives collected along the way.
"""

import warnings
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import (
    DimensionMismatchError,
    DomainError,
    InsufficientSamplesError,
    NotRecordedError,
    UnfittableError,
)
from .marginal import MIN_SAMPLES, default_bins, fit_marginal, marginal_negentropy
from .numerics import (
    as_data_matrix,
    make_rng,
    mean_and_covariance,
    random_rotation,
    standard_normal_log_pdf,
    symmetric_eig,
)

ROTATIONS = ("pca", "random")


@dataclass(frozen=True)
class RbigConfig:
    """Fit settings.

    ``tol_negentropy`` is per dimension: fitting stops once the summed
    marginal negentropy of the current representation has stayed below
    ``tol_negentropy * d`` for ``patience`` consecutive layers.  Only the
    first layer of that quiet run is kept; the others served to confirm that
    no rotation exposes further structure.  Set ``tol_negentropy`` to 0 to
    always fit ``max_layers`` layers.
    """

    max_layers: int = 100
    bins: int | None = None
    rotation: str = "pca"
    tol_negentropy: float = 1e-3
    patience: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.max_layers < 1:
            raise DomainError("max_layers must be >= 1")
        if self.rotation not in ROTATIONS:
            raise DomainError(f"rotation must be one of {ROTATIONS}, got {self.rotation!r}")
        if self.bins is not None and self.bins < 2:
            raise DomainError("bins must be >= 2")
        if self.tol_negentropy < 0:
            raise DomainError("tol_negentropy must be >= 0")
        if self.patience < 1:
            raise DomainError("patience must be >= 1")


def _rotate(Z, R):
    """Rows of ``Z`` times ``R^T``.

    Plain einsum instead of BLAS keeps every row's result independent of the
    batch it arrives in, so scoring one pixel or a whole image agrees bit for
    bit.
    """
    return np.einsum("ij,kj->ik", Z, R, optimize=False)


@dataclass(eq=False)
class RbigLayer:
    marginals: list
    rotation: np.ndarray

    def forward(self, X):
        Z = np.empty_like(X)
        log_det = np.zeros(X.shape[0])
        for j, marginal in enumerate(self.marginals):
            Z[:, j], ld = marginal.forward(X[:, j])
            log_det += ld
        # x[i+1] = R . Psi(x[i]) for column vectors
        return _rotate(Z, self.rotation), log_det

    def inverse(self, Y):
        Z = _rotate(Y, self.rotation.T)
        X = np.empty_like(Z)
        for j, marginal in enumerate(self.marginals):
            X[:, j] = marginal.inverse(Z[:, j])
        return X


@dataclass(eq=False)
class GaussianizationModel:
    """A fitted RBIG transform.

    ``input_dim`` counts the columns the model was fitted on; constant
    columns listed in ``dropped_bands`` are removed before the layers see the
    data, leaving ``dim`` active columns.
    """

    input_dim: int
    layers: list
    dropped_bands: list = field(default_factory=list)
    dropped_values: list = field(default_factory=list)
    config: RbigConfig = field(default_factory=RbigConfig)
    trace: np.ndarray | None = None

    @property
    def dim(self):
        return self.input_dim - len(self.dropped_bands)

    @property
    def n_layers(self):
        return len(self.layers)

    @property
    def kept_bands(self):
        dropped = set(self.dropped_bands)
        return [j for j in range(self.input_dim) if j not in dropped]

    def fit_metadata(self):
        return {
            "bins": self.layers[0].marginals[0].n_bins if self.layers else self.config.bins,
            "rotation": self.config.rotation,
            "seed": self.config.seed,
            "max_layers": self.config.max_layers,
            "tol_negentropy": self.config.tol_negentropy,
            "patience": self.config.patience,
            "layers_used": self.n_layers,
            "dropped_bands": list(self.dropped_bands),
            "negentropy_trace": None if self.trace is None else [float(v) for v in self.trace],
            "negentropy_estimator": "histogram entropy with Miller-Madow correction vs matched-variance Gaussian",
        }

    def _select(self, X):
        X = as_data_matrix(X)
        if X.shape[1] != self.input_dim:
            raise DimensionMismatchError(f"model expects {self.input_dim} columns, got {X.shape[1]}")
        if self.dropped_bands:
            X = X[:, self.kept_bands]
        return X


@dataclass(frozen=True, eq=False)
class LogDensityResult:
    """``log_p == log_p_gauss + log_det_j`` holds elementwise by construction."""

    log_p_gauss: np.ndarray
    log_det_j: np.ndarray

    @property
    def log_p(self):
        return self.log_p_gauss + self.log_det_j


def _rotation_for(Z, config, rng):
    d = Z.shape[1]
    if d == 1:
        return np.ones((1, 1))
    if config.rotation == "random":
        return random_rotation(d, rng)
    _, cov = mean_and_covariance(Z)
    _, vectors = symmetric_eig(cov)
    # rows of R are the principal directions
    return np.ascontiguousarray(vectors.T)


def total_negentropy(X, bins=None):
    return float(sum(marginal_negentropy(X[:, j], bins) for j in range(X.shape[1])))


def fit(X, config=None, **overrides):
    """Fit a :class:`GaussianizationModel` to the rows of ``X``.

    Settings come from ``config`` (an :class:`RbigConfig`) with keyword
    overrides, e.g. ``fit(X, max_layers=150, rotation="random")``.
    """
    config = config or RbigConfig()
    if overrides:
        config = RbigConfig(**{**asdict(config), **overrides})
    X = as_data_matrix(X)
    n, input_dim = X.shape
    if n < MIN_SAMPLES:
        raise InsufficientSamplesError(f"RBIG needs at least {MIN_SAMPLES} samples, got {n}")

    spread = X.max(axis=0) - X.min(axis=0)
    dropped = [int(j) for j in np.flatnonzero(spread == 0.0)]
    if len(dropped) == input_dim:
        raise UnfittableError("every column is constant")
    dropped_values = [float(X[0, j]) for j in dropped]
    if dropped:
        X = X[:, [j for j in range(input_dim) if j not in set(dropped)]]
    d = X.shape[1]
    if n < 10 * d:
        warnings.warn(f"only {n} samples for {d} dimensions; density estimates will be poor", stacklevel=2)

    bins = config.bins if config.bins is not None else default_bins(n)
    rng = make_rng(config.seed)
    threshold = config.tol_negentropy * d
    layers, trace = [], []
    quiet = 0
    current = X.copy()
    for _ in range(config.max_layers):
        marginals = [fit_marginal(current[:, j], bins) for j in range(d)]
        Z = np.empty_like(current)
        for j, marginal in enumerate(marginals):
            Z[:, j], _ = marginal.forward(current[:, j])
        rotation = _rotation_for(Z, config, rng)
        layers.append(RbigLayer(marginals, rotation))
        current = _rotate(Z, rotation)
        trace.append(total_negentropy(current, bins))
        # a single quiet layer is not enough: the next rotation can expose
        # structure the current marginals hide
        quiet = quiet + 1 if trace[-1] < threshold else 0
        if quiet >= config.patience:
            # the confirming layers found nothing and would only add
            # histogram noise, so keep up to the first quiet one
            del layers[len(layers) - quiet + 1:]
            del trace[len(trace) - quiet + 1:]
            break
    return GaussianizationModel(
        input_dim=input_dim,
        layers=layers,
        dropped_bands=dropped,
        dropped_values=dropped_values,
        config=config,
        trace=np.array(trace),
    )


def transform(model, X):
    """Map ``X`` through every layer; returns ``(Y, log_det_j)``."""
    Y = model._select(X)
    log_det = np.zeros(Y.shape[0])
    for layer in model.layers:
        Y, ld = layer.forward(Y)
        log_det += ld
    return Y, log_det


def inverse_transform(model, Y):
    """Undo :func:`transform`; dropped constant bands are restored."""
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[1] != model.dim:
        raise DimensionMismatchError(f"expected {model.dim} columns, got shape {Y.shape}")
    X = Y
    for layer in reversed(model.layers):
        X = layer.inverse(X)
    if not model.dropped_bands:
        return X
    full = np.empty((X.shape[0], model.input_dim))
    full[:, model.kept_bands] = X
    full[:, model.dropped_bands] = model.dropped_values
    return full


def log_density(model, X):
    Y, log_det = transform(model, X)
    return LogDensityResult(standard_normal_log_pdf(Y), log_det)


def sample(model, n, rng=None):
    """Draw ``n`` points by pushing standard normal draws through the inverse map."""
    if n < 0:
        raise DomainError("sample count must be >= 0")
    rng = make_rng(rng)
    Y = rng.standard_normal((n, model.dim))
    return inverse_transform(model, Y)


def negentropy_trace(model):
    if model.trace is None:
        raise NotRecordedError("model carries no negentropy trace")
    return np.asarray(model.trace, dtype=np.float64)
