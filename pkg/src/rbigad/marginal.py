"""Per-dimension Gaussianization through a histogram CDF.

A :class:`MarginalMap` is a piecewise-linear CDF ``F`` (the integral of a
floored, piecewise-constant histogram density ``f``) composed with the
standard normal quantile: ``y = Phi^-1(F(x))``.  Its derivative is
``f(x) / phi(y)``, which is what the density model accumulates.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateColumnError, DomainError, InsufficientSamplesError
from .numerics import LOG_2PI, _lower_quantile, normal_cdf, normal_sf

SUPPORT_EXTENSION = 0.1
MIN_SAMPLES = 10


def default_bins(n_samples):
    return int(min(max(math.ceil(math.sqrt(n_samples)), 16), 1024))


@dataclass(frozen=True, eq=False)
class MarginalMap:
    """Monotone map from one feature to the standard normal.

    ``cdf_at_edges`` and ``sf_at_edges`` hold ``F`` and ``1 - F`` at the bin
    edges; both are kept so that either tail is resolved without
    cancellation.
    """

    bin_edges: np.ndarray
    bin_densities: np.ndarray
    cdf_at_edges: np.ndarray
    sf_at_edges: np.ndarray
    eps_cdf: float
    eps_pdf: float

    @property
    def support_lo(self):
        return float(self.bin_edges[0])

    @property
    def support_hi(self):
        return float(self.bin_edges[-1])

    @property
    def n_bins(self):
        return self.bin_densities.size

    def forward(self, x):
        """Return ``(y, log_deriv)`` for ``x`` (scalar or array).

        Inputs outside the support are clamped to its boundary first.
        """
        scalar = np.ndim(x) == 0
        x = np.clip(np.atleast_1d(np.asarray(x, dtype=np.float64)), self.support_lo, self.support_hi)
        edges = self.bin_edges
        k = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, self.n_bins - 1)
        dens = self.bin_densities[k]
        dx = x - edges[k]
        F = self.cdf_at_edges[k] + dens * dx
        S = self.sf_at_edges[k] - dens * dx
        lower = F <= 0.5
        q = np.where(lower, F, S)
        q = np.clip(q, self.eps_cdf, 0.5)
        z = _lower_quantile(q)
        y = np.where(lower, z, -z)
        log_deriv = np.log(dens) + 0.5 * LOG_2PI + 0.5 * y * y
        if scalar:
            return float(y[0]), float(log_deriv[0])
        return y, log_deriv

    def inverse(self, y):
        scalar = np.ndim(y) == 0
        y = np.atleast_1d(np.asarray(y, dtype=np.float64))
        edges, dens = self.bin_edges, self.bin_densities
        cdf, sf = self.cdf_at_edges, self.sf_at_edges
        last = self.n_bins - 1
        x = np.empty_like(y)

        lower = y <= 0.0
        if np.any(lower):
            F = np.clip(normal_cdf(y[lower]), cdf[0], cdf[-1])
            k = np.clip(np.searchsorted(cdf, F, side="right") - 1, 0, last)
            xl = edges[k] + (F - cdf[k]) / dens[k]
            # saturated tail lands exactly on the support boundary
            x[lower] = np.where(F <= cdf[0], edges[0], xl)
        upper = ~lower
        if np.any(upper):
            S = np.clip(normal_sf(y[upper]), sf[-1], sf[0])
            k = np.clip(np.searchsorted(-sf, -S, side="right") - 1, 0, last)
            xu = edges[k] + (sf[k] - S) / dens[k]
            x[upper] = np.where(S <= sf[-1], edges[-1], xu)
        x = np.clip(x, self.support_lo, self.support_hi)
        return float(x[0]) if scalar else x

    def median(self):
        return self.inverse(0.0)


def fit_marginal(column, bins=None, extension=SUPPORT_EXTENSION):
    """Fit a :class:`MarginalMap` to one column of samples.

    The histogram covers the data range widened by ``extension`` times the
    range on each side.  Empty bins get the floor density ``1e-10 / range``
    and the CDF is squeezed into ``[eps, 1 - eps]`` with ``eps = 1 / (4 l)``,
    so every finite input has a finite image and log-derivative.
    """
    column = np.asarray(column, dtype=np.float64).ravel()
    n = column.size
    if n < MIN_SAMPLES:
        raise InsufficientSamplesError(f"need at least {MIN_SAMPLES} samples per column, got {n}")
    if not np.all(np.isfinite(column)):
        raise DomainError("column contains NaN or infinite values")
    bins = default_bins(n) if bins is None else int(bins)
    if bins < 2:
        raise DomainError("need at least 2 bins")
    lo, hi = float(column.min()), float(column.max())
    spread = hi - lo
    if not spread > 0.0:
        raise DegenerateColumnError("column is constant")

    eps_cdf = 1.0 / (4.0 * n)
    eps_pdf = 1e-10 / spread
    edges = np.linspace(lo - extension * spread, hi + extension * spread, bins + 1)
    counts, _ = np.histogram(column, bins=edges)
    widths = np.diff(edges)

    mass_total = 1.0 - 2.0 * eps_cdf
    dens = counts / (n * widths) * mass_total
    floored = dens < eps_pdf
    dens[floored] = eps_pdf
    # take the floor mass back from the populated bins so the total stays exact
    floor_mass = float(np.sum(eps_pdf * widths[floored]))
    kept = ~floored
    dens[kept] *= (mass_total - floor_mass) / float(np.sum(dens[kept] * widths[kept]))

    mass = dens * widths
    cdf = np.empty(bins + 1)
    cdf[0] = eps_cdf
    cdf[1:] = eps_cdf + np.cumsum(mass)
    sf = np.empty(bins + 1)
    sf[-1] = eps_cdf
    sf[:-1] = eps_cdf + np.cumsum(mass[::-1])[::-1]
    return MarginalMap(edges, dens, cdf, sf, eps_cdf, eps_pdf)


def marginal_negentropy(column, bins=None):
    """Histogram estimate of ``H(gaussian, same variance) - H(column)`` in nats.

    Uses the Miller-Madow bias correction and clips at zero.  Crude, but
    consistent enough for convergence diagnostics.
    """
    column = np.asarray(column, dtype=np.float64).ravel()
    n = column.size
    var = float(np.var(column))
    if n < 2 or var <= 0.0:
        return 0.0
    bins = default_bins(n) if bins is None else int(bins)
    counts, edges = np.histogram(column, bins=bins)
    width = edges[1] - edges[0]
    p = counts[counts > 0] / n
    h_hist = -float(np.sum(p * np.log(p / width))) + (p.size - 1) / (2.0 * n)
    h_gauss = 0.5 * math.log(2.0 * math.pi * math.e * var)
    return max(h_gauss - h_hist, 0.0)
