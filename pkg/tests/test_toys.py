import numpy as np
import pytest
from numpy.testing import assert_array_equal

from rbigad import detectors as det
from rbigad.errors import DomainError
from rbigad.evaluation import auc_score
from rbigad.raster import flatten_to_matrix
from rbigad.toys import GAUSSIAN_COV, make_cd_pair, make_gaussian, make_mixture, make_ring


@pytest.mark.parametrize("maker", [make_ring, make_gaussian, make_mixture])
def test_exact_positive_count_and_determinism(maker):
    X, y = maker(n=5000, anomaly_rate=0.01, seed=3)
    assert X.shape == (5000, 2)
    assert y.sum() == 50
    X2, y2 = maker(n=5000, anomaly_rate=0.01, seed=3)
    assert_array_equal(X, X2)
    assert_array_equal(y, y2)


def test_ring_geometry():
    X, y = make_ring(n=20_000, anomaly_rate=0.01, seed=1)
    r = np.hypot(*X[y == 0].T)
    assert abs(r.mean() - 1.0) < 0.005
    assert abs(r.std() - 0.05) < 0.005
    assert np.all(np.hypot(*X[y == 1].T) < 0.5)


def test_gaussian_covariance_monte_carlo():
    X, y = make_gaussian(n=100_000, anomaly_rate=0.0, seed=2)
    assert np.max(np.abs(np.cov(X.T) - GAUSSIAN_COV)) < 0.02


def test_rate_domain():
    with pytest.raises(DomainError):
        make_ring(n=10, anomaly_rate=1.0)
    with pytest.raises(DomainError):
        make_ring(n=0)


def test_cd_pair_layout():
    before, after, region = make_cd_pair(width=40, height=30, bands=5, seed=4)
    assert before.values.shape == after.values.shape == (5, 30, 40)
    assert region.shape == (30, 40)
    assert region.sum() == round(0.05 * 1200)
    again = make_cd_pair(width=40, height=30, bands=5, seed=4)
    assert_array_equal(again[1].values, after.values)


def test_cd_pair_unchanged_pixels_keep_their_class():
    before, after, region = make_cd_pair(width=60, height=60, bands=6, seed=1)
    X1, _ = flatten_to_matrix(before)
    X2, _ = flatten_to_matrix(after)
    same = region.ravel() == 0
    # each pixel is redrawn from the same class cloud, so stays nearby
    assert np.median(np.linalg.norm(X1[same] - X2[same], axis=1)) < 3.0
    assert np.median(np.linalg.norm(X2[~same], axis=1)) < 1.5


def test_cd_pair_fools_rx_but_not_density():
    before, after, region = make_cd_pair(width=80, height=80, bands=4, seed=2)
    X1, _ = flatten_to_matrix(before)
    X2, _ = flatten_to_matrix(after)
    y = region.ravel()
    rx = auc_score(det.score_change(det.fit_rx(X1), X2).scores, y)
    kde = auc_score(det.score_change(det.fit_kernel(X1, kind="kde", sigma=0.5), X2).scores, y)
    assert rx < 0.5 < kde


def test_cd_pair_argument_checks():
    with pytest.raises(DomainError):
        make_cd_pair(bands=1)
    with pytest.raises(DomainError):
        make_cd_pair(bands=3, n_classes=4)
