"""Numerical primitives shared by the density models and detectors.

Data matrices are plain ``float64`` numpy arrays of shape ``(n_samples,
n_features)``; square matrices are ``(d, d)`` arrays.  Random state is a
:class:`numpy.random.Generator` so that the same seed always reproduces the
same stream.
"""

import math

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import erfc

from .errors import (
    DimensionMismatchError,
    DomainError,
    InsufficientSamplesError,
    NotPositiveDefiniteError,
)

__all__ = [
    "as_data_matrix",
    "make_rng",
    "mean_and_covariance",
    "symmetric_eig",
    "cholesky",
    "solve_spd",
    "spd_inverse",
    "normal_cdf",
    "normal_sf",
    "inverse_normal_cdf",
    "standard_normal_log_pdf",
    "random_rotation",
]

LOG_2PI = math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)


def as_data_matrix(X, name="X"):
    """Return ``X`` as a finite, C-contiguous float64 array of shape (l, d)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D (samples x features), got shape {X.shape}")
    if X.shape[1] < 1:
        raise DimensionMismatchError(f"{name} has no feature columns")
    if not np.all(np.isfinite(X)):
        raise DomainError(f"{name} contains NaN or infinite values")
    return X


def make_rng(seed=None):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def mean_and_covariance(X):
    """Sample mean and unbiased (divisor l-1) covariance of the rows of X."""
    X = as_data_matrix(X)
    n = X.shape[0]
    if n < 2:
        raise InsufficientSamplesError(f"covariance needs at least 2 samples, got {n}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = (Xc.T @ Xc) / (n - 1)
    cov = 0.5 * (cov + cov.T)
    return mean, cov


def _round_robin_orders(n):
    """n - 1 orderings of range(n) (n even); pairing positions (2k, 2k+1) of
    every ordering covers each index pair exactly once."""
    players = list(range(n))
    orders = []
    for _ in range(n - 1):
        half = n // 2
        top, bottom = players[:half], players[half:][::-1]
        orders.append([i for pair in zip(top, bottom) for i in pair])
        players = [players[0], players[-1]] + players[1:-1]
    return [np.array(o) for o in orders]


def _rotate_pairs(B, c, s):
    # rows (2k, 2k+1) <- J^T applied to each pair
    B2 = B.reshape(-1, 2, B.shape[1])
    top = B2[:, 0, :]
    bottom = B2[:, 1, :]
    out = np.empty_like(B2)
    out[:, 0, :] = c[:, None] * top - s[:, None] * bottom
    out[:, 1, :] = s[:, None] * top + c[:, None] * bottom
    return out.reshape(B.shape)


def symmetric_eig(A, max_sweeps=60):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Disjoint index pairs are rotated together (round-robin ordering), so each
    sweep costs ``d - 1`` vectorized updates instead of ``d(d-1)/2`` scalar
    ones.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues in descending
    order and eigenvectors stored as columns.
    """
    A = np.array(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix contains NaN or infinite values")
    d = A.shape[0]
    scale = max(1.0, float(np.max(np.abs(A)))) if d else 1.0
    if d and np.max(np.abs(A - A.T)) > 1e-9 * scale:
        raise DomainError("symmetric_eig requires a symmetric matrix")
    A = 0.5 * (A + A.T)
    if d <= 1:
        return A.diagonal().copy(), np.eye(d)

    n = d + (d % 2)
    if n != d:
        # the zero padding row/column never couples to the rest
        A = np.pad(A, ((0, 1), (0, 1)))
    orders = _round_robin_orders(n)
    # B and Vt are kept permuted into the current ordering
    current = orders[0]
    B = A[np.ix_(current, current)]
    Vt = np.eye(n)[current]
    norm = np.linalg.norm(A)
    for _ in range(max_sweeps):
        off = np.linalg.norm(B - np.diag(B.diagonal()))
        if off <= 1e-15 * norm:
            break
        for order in orders:
            if order is not current:
                pos = np.empty(n, dtype=np.intp)
                pos[current] = np.arange(n)
                perm = pos[order]
                B = B[np.ix_(perm, perm)]
                Vt = Vt[perm]
                current = order
            diag = B.diagonal()
            app = diag[0::2]
            aqq = diag[1::2]
            apq = B[0::2, 1::2].diagonal()
            active = np.abs(apq) > 1e-300
            if not np.any(active):
                continue
            safe = np.where(active, apq, 1.0)
            theta = (aqq - app) / (2.0 * safe)
            t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t = np.where(theta == 0.0, 1.0, t)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            c = np.where(active, c, 1.0)
            s = np.where(active, s, 0.0)
            B = _rotate_pairs(B, c, s)
            B = _rotate_pairs(np.ascontiguousarray(B.T), c, s)
            idx = np.arange(0, n, 2)
            B[idx, idx + 1] = np.where(active, 0.0, B[idx, idx + 1])
            B[idx + 1, idx] = np.where(active, 0.0, B[idx + 1, idx])
            Vt = _rotate_pairs(Vt, c, s)

    pos = np.empty(n, dtype=np.intp)
    pos[current] = np.arange(n)
    w = B.diagonal()[pos][:d].copy()
    V = Vt[pos].T[:d, :d]
    order = np.argsort(-w, kind="stable")
    return w[order], np.ascontiguousarray(V[:, order])


def cholesky(A):
    """Lower Cholesky factor; raises NotPositiveDefiniteError on failure."""
    A = np.asarray(A, dtype=np.float64)
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("matrix is not positive definite; add jitter") from exc


def solve_spd(A, b, factor=None):
    """Solve ``A x = b`` for symmetric positive definite ``A``.

    ``b`` may be a vector or a matrix of right-hand sides. A precomputed lower
    factor from :func:`cholesky` can be passed to skip the factorization.
    """
    L = cholesky(A) if factor is None else factor
    b = np.asarray(b, dtype=np.float64)
    if b.shape[0] != L.shape[0]:
        raise DimensionMismatchError(f"rhs has {b.shape[0]} rows, matrix is {L.shape[0]}x{L.shape[0]}")
    z = solve_triangular(L, b, lower=True, check_finite=False)
    return solve_triangular(L.T, z, lower=False, check_finite=False)


def spd_inverse(A):
    A = np.asarray(A, dtype=np.float64)
    inv = solve_spd(A, np.eye(A.shape[0]))
    return 0.5 * (inv + inv.T)


def normal_cdf(x):
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * erfc(-x / _SQRT2)


def normal_sf(x):
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * erfc(x / _SQRT2)


# Acklam's rational approximation, relative error below 1.15e-9 before refinement
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549671750376838e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _lower_quantile(q):
    """Phi^-1(q) for q in (0, 0.5], vectorized; result is <= 0."""
    z = np.empty_like(q)
    tail = q < _P_LOW
    if np.any(tail):
        r = np.sqrt(-2.0 * np.log(q[tail]))
        num = ((((_C[0] * r + _C[1]) * r + _C[2]) * r + _C[3]) * r + _C[4]) * r + _C[5]
        den = (((_D[0] * r + _D[1]) * r + _D[2]) * r + _D[3]) * r + 1.0
        z[tail] = num / den
    mid = ~tail
    if np.any(mid):
        u = q[mid] - 0.5
        r = u * u
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * u
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        z[mid] = num / den
    # one Halley step against the erfc-based CDF
    e = 0.5 * erfc(-z / _SQRT2) - q
    u = e * math.sqrt(2.0 * math.pi) * np.exp(0.5 * z * z)
    z = z - u / (1.0 + 0.5 * z * u)
    return np.minimum(z, 0.0)


def _check_probability(p):
    p = np.asarray(p, dtype=np.float64)
    if not np.all((p > 0.0) & (p < 1.0)):
        raise DomainError("probabilities must lie strictly inside (0, 1)")
    return p


def inverse_normal_cdf(p):
    """Standard normal quantile function for ``0 < p < 1``.

    Accepts scalars or arrays; scalars return a Python float.
    """
    scalar = np.ndim(p) == 0
    p = np.atleast_1d(_check_probability(p))
    upper = p > 0.5
    q = np.where(upper, 1.0 - p, p)
    z = _lower_quantile(q)
    z = np.where(upper, -z, z)
    return float(z[0]) if scalar else z


def inverse_normal_sf(q):
    """Quantile of the upper tail: the ``y`` with ``P(Y > y) = q``.

    More accurate than ``inverse_normal_cdf(1 - q)`` when ``q`` is tiny.
    """
    scalar = np.ndim(q) == 0
    q = np.atleast_1d(_check_probability(q))
    z = -inverse_normal_cdf(q)
    return float(z[0]) if scalar else z


def standard_normal_log_pdf(y):
    """log N(y; 0, I_d). A 1-D input is one point; a 2-D input gives one value per row."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        return float(-0.5 * y.size * LOG_2PI - 0.5 * np.dot(y, y))
    return -0.5 * y.shape[-1] * LOG_2PI - 0.5 * np.einsum("ij,ij->i", y, y)


def random_rotation(d, rng):
    """Haar-distributed rotation (orthogonal, determinant +1) of size d."""
    if d < 1:
        raise DomainError("rotation dimension must be >= 1")
    if d == 1:
        return np.ones((1, 1))
    rng = make_rng(rng)
    Q, R = np.linalg.qr(rng.standard_normal((d, d)))
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    Q = Q * signs
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q
