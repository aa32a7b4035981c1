"""Detection-quality metrics: ROC, precision-recall, (partial) AUC, bootstrap.

Only the ordering of scores matters here.  Samples sharing a score form one
threshold group and move across the decision boundary together, which makes
the trapezoidal AUC equal to the tie-corrected Mann-Whitney statistic.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, DomainError, UndefinedCurveError
from .numerics import make_rng

MAX_REDRAWS = 100


@dataclass(frozen=True, eq=False)
class LabelMask:
    labels: np.ndarray

    @classmethod
    def from_values(cls, values):
        return cls(np.asarray(values).ravel() != 0)

    @property
    def positive_count(self):
        return int(np.count_nonzero(self.labels))

    @property
    def negative_count(self):
        return int(self.labels.size - self.positive_count)

    def __len__(self):
        return self.labels.size


@dataclass(frozen=True, eq=False)
class RocCurve:
    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float


@dataclass(frozen=True, eq=False)
class PrCurve:
    thresholds: np.ndarray
    recall: np.ndarray
    precision: np.ndarray
    average_precision: float


def _inputs(scores, mask):
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = mask.labels if isinstance(mask, LabelMask) else np.asarray(mask).ravel() != 0
    if scores.size != labels.size:
        raise DimensionMismatchError(f"{scores.size} scores but {labels.size} labels")
    if not np.all(np.isfinite(scores)):
        raise DomainError("scores must be finite")
    n_pos = int(np.count_nonzero(labels))
    if n_pos == 0 or n_pos == labels.size:
        raise UndefinedCurveError("labels must contain both positives and negatives")
    return scores, labels


def _threshold_counts(scores, labels):
    """Cumulative (TP, FP) at each distinct score, highest score first."""
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    tp = np.cumsum(y)
    fp = np.cumsum(~y)
    # last position of each run of equal scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    return s[ends], tp[ends].astype(np.float64), fp[ends].astype(np.float64)


def roc(scores, mask):
    """ROC curve over all distinct thresholds, starting at (0, 0)."""
    scores, labels = _inputs(scores, mask)
    thr, tp, fp = _threshold_counts(scores, labels)
    tpr = np.r_[0.0, tp / tp[-1]]
    fpr = np.r_[0.0, fp / fp[-1]]
    thresholds = np.r_[np.inf, thr]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1])) / 2.0)
    return RocCurve(thresholds, fpr, tpr, auc)


def auc_score(scores, mask):
    return roc(scores, mask).auc


def _rank_auc(scores, labels):
    # Mann-Whitney U via midranks; used where thousands of AUCs are needed
    order = np.argsort(scores, kind="stable")
    s = scores[order]
    ranks = np.empty(s.size)
    starts = np.flatnonzero(np.r_[True, s[1:] != s[:-1]])
    ends = np.r_[starts[1:], s.size]
    mid = (starts + ends + 1) / 2.0
    ranks[order] = np.repeat(mid, ends - starts)
    n_pos = np.count_nonzero(labels)
    n_neg = labels.size - n_pos
    return (ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def precision_recall(scores, mask):
    """Precision-recall curve and step-wise average precision.

    ``AP = sum_k (R_k - R_{k-1}) P_k`` over the distinct thresholds.
    """
    scores, labels = _inputs(scores, mask)
    thr, tp, fp = _threshold_counts(scores, labels)
    precision = tp / (tp + fp)
    recall = tp / tp[-1]
    ap = float(np.sum(np.diff(np.r_[0.0, recall]) * precision))
    return PrCurve(thr, recall, precision, ap)


def partial_auc(curve, fpr_cap, normalized=True):
    """Area under the ROC for ``fpr <= fpr_cap``.

    With ``normalized=True`` the area is divided by ``fpr_cap`` so that a
    perfect detector scores 1 for every cap; ``normalized=False`` returns the
    raw truncated area.
    """
    if not 0.0 < fpr_cap <= 1.0:
        raise DomainError("fpr_cap must lie in (0, 1]")
    fpr, tpr = curve.fpr, curve.tpr
    if fpr_cap >= 1.0:
        area = curve.auc
    else:
        inside = fpr <= fpr_cap
        x = fpr[inside]
        y = tpr[inside]
        # interpolate the curve at the cap
        k = np.searchsorted(fpr, fpr_cap, side="right")
        x0, y0 = fpr[k - 1], tpr[k - 1]
        x1, y1 = fpr[k], tpr[k]
        y_cap = y0 + (y1 - y0) * (fpr_cap - x0) / (x1 - x0)
        if x[-1] < fpr_cap:
            x = np.r_[x, fpr_cap]
            y = np.r_[y, y_cap]
        area = float(np.sum(np.diff(x) * (y[1:] + y[:-1])) / 2.0)
    return area / fpr_cap if normalized else area


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    values: np.ndarray

    @property
    def median(self):
        return float(np.median(self.values))

    @property
    def q025(self):
        return float(np.quantile(self.values, 0.025))

    @property
    def q975(self):
        return float(np.quantile(self.values, 0.975))

    @property
    def min(self):
        return float(self.values.min())

    @property
    def max(self):
        return float(self.values.max())

    def summary(self):
        return {
            "runs": int(self.values.size),
            "median": self.median,
            "q2.5": self.q025,
            "q97.5": self.q975,
            "min": self.min,
            "max": self.max,
        }


def bootstrap_auc(scores, mask, runs=1000, rng=None):
    """AUC over ``runs`` pixel-level resamples drawn with replacement.

    A resample containing a single class is redrawn, up to 100 times per run.
    """
    if runs < 1:
        raise DomainError("bootstrap needs at least one run")
    scores, labels = _inputs(scores, mask)
    rng = make_rng(rng)
    n = scores.size
    values = np.empty(runs)
    for r in range(runs):
        for _ in range(MAX_REDRAWS):
            idx = rng.integers(0, n, size=n)
            y = labels[idx]
            n_pos = np.count_nonzero(y)
            if 0 < n_pos < n:
                break
        else:
            raise UndefinedCurveError(f"{MAX_REDRAWS} consecutive single-class resamples")
        values[r] = _rank_auc(scores[idx], y)
    return BootstrapResult(values)
