"""Synthetic datasets for demos and tests.

All generators are deterministic for a fixed seed and return labels with
exactly ``round(rate * n)`` positives.
"""

import math

import numpy as np

from .errors import DomainError
from .numerics import make_rng
from .raster import RasterImage

RING_RADIUS = 1.0
RING_NOISE = 0.05
CENTER_SPREAD = 0.1
GAUSSIAN_COV = np.array([[1.0, 0.6], [0.6, 0.5]])
CD_CLASS_RADIUS = 6.0
KINDS = ("ring", "gaussian", "mixture", "cd-pair")


def _split(n, rate):
    if n < 1:
        raise DomainError("n must be >= 1")
    if not 0.0 <= rate < 1.0:
        raise DomainError("anomaly rate must lie in [0, 1)")
    k = int(round(rate * n))
    return n - k, k


def _stack(normal, anomalous):
    X = np.vstack([normal, anomalous])
    labels = np.r_[np.zeros(len(normal)), np.ones(len(anomalous))]
    return X, labels


def make_ring(n=10_000, anomaly_rate=0.01, seed=0):
    """Noisy unit circle with anomalies clustered at its centre."""
    m, k = _split(n, anomaly_rate)
    rng = make_rng(seed)
    theta = rng.uniform(0.0, 2.0 * math.pi, m)
    radius = RING_RADIUS + RING_NOISE * rng.standard_normal(m)
    ring = np.c_[radius * np.cos(theta), radius * np.sin(theta)]
    center = CENTER_SPREAD * rng.standard_normal((k, 2))
    return _stack(ring, center)


def make_gaussian(n=10_000, anomaly_rate=0.01, seed=0):
    """Correlated 2-D Gaussian; anomalies sit off the main axis at (2, -2)."""
    m, k = _split(n, anomaly_rate)
    rng = make_rng(seed)
    L = np.linalg.cholesky(GAUSSIAN_COV)
    background = rng.standard_normal((m, 2)) @ L.T
    anomalies = np.array([2.0, -2.0]) + 0.1 * rng.standard_normal((k, 2))
    return _stack(background, anomalies)


def make_mixture(n=10_000, anomaly_rate=0.01, seed=0):
    """Three elongated clusters; anomalies fill the gap between them."""
    m, k = _split(n, anomaly_rate)
    rng = make_rng(seed)
    means = np.array([[-2.0, 0.0], [2.0, 0.0], [0.0, 2.5]])
    scales = np.array([[0.6, 0.15], [0.15, 0.6], [0.5, 0.2]])
    which = rng.integers(0, 3, m)
    background = means[which] + scales[which] * rng.standard_normal((m, 2))
    anomalies = np.array([0.0, 0.8]) + 0.15 * rng.standard_normal((k, 2))
    return _stack(background, anomalies)


def _unit_rows(A):
    return A / np.linalg.norm(A, axis=1, keepdims=True)


def _simplex(k, d, rng):
    """``k`` points at distance CD_CLASS_RADIUS from the origin, centred on it,
    all pairwise equidistant, in a random orientation."""
    vertices = np.eye(k) - 1.0 / k
    vertices = CD_CLASS_RADIUS * _unit_rows(vertices)
    basis, _ = np.linalg.qr(rng.standard_normal((d, k)))
    return vertices @ basis.T


def _class_map(height, width, n_classes, block, rng):
    coarse = rng.integers(0, n_classes, (math.ceil(height / block), math.ceil(width / block)))
    return np.kron(coarse, np.ones((block, block), dtype=int))[:height, :width]


def _change_region(height, width, count, rng):
    """Exactly ``count`` pixels filling a square window in scan order."""
    side = max(1, math.ceil(math.sqrt(count)))
    if side > min(height, width):
        raise DomainError("change region does not fit in the image")
    r0 = int(rng.integers(0, height - side + 1))
    c0 = int(rng.integers(0, width - side + 1))
    region = np.zeros((height, width), dtype=bool)
    rows, cols = np.divmod(np.arange(count), side)
    region[r0 + rows, c0 + cols] = True
    return region


def make_cd_pair(width=250, height=250, bands=8, change_rate=0.05, seed=0, n_classes=4):
    """Before/after rasters plus a change mask.

    Pixels belong to blocky land-cover classes, each a curved (non-Gaussian)
    cloud in band space.  Class centres form a regular simplex of radius 6
    around the origin.  The after image redraws every pixel from its class;
    changed pixels instead come from a new cover type at the origin, which is
    the mean of the before image, so a single Gaussian fitted there rates them
    as typical.
    """
    if bands < 2:
        raise DomainError("cd-pair needs at least 2 bands")
    if not 2 <= n_classes <= bands:
        raise DomainError("cd-pair needs 2 <= n_classes <= bands")
    rng = make_rng(seed)
    n_pix = width * height
    _, n_changed = _split(n_pix, change_rate)
    classes = _class_map(height, width, n_classes, block=max(2, min(height, width) // 10), rng=rng)
    centers = _simplex(n_classes, bands, rng)
    direction = _unit_rows(rng.standard_normal((n_classes, bands)))
    bend = _unit_rows(rng.standard_normal((n_classes, bands)))

    def draw(cls):
        t = rng.standard_normal(cls.size)
        noise = 0.25 * rng.standard_normal((cls.size, bands))
        return centers[cls] + t[:, None] * direction[cls] + 0.3 * (t * t)[:, None] * bend[cls] + noise

    flat = classes.ravel()
    before = draw(flat)
    after = draw(flat)
    region = _change_region(height, width, n_changed, rng)
    changed = region.ravel()
    after[changed] = 0.3 * rng.standard_normal((n_changed, bands))

    def raster(pixels):
        return RasterImage(pixels.T.reshape(bands, height, width).copy())

    return raster(before), raster(after), region.astype(np.float64)
