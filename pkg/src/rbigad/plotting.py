"""Optional figures for evaluation reports, rendered off-screen to files."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def plot_roc(curve, path, fpr_caps=()):
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(curve.fpr, curve.tpr, lw=1.5, label=f"AUC = {curve.auc:.4f}")
    ax.plot([0, 1], [0, 1], color="0.6", lw=0.8, ls="--")
    for cap in fpr_caps:
        ax.axvline(cap, color="0.8", lw=0.8)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.01)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.legend(loc="lower right", frameon=False)
    _save(fig, path)


def plot_pr(curve, path):
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.step(np.r_[0.0, curve.recall], np.r_[curve.precision[0], curve.precision], where="post",
            lw=1.5, label=f"AP = {curve.average_precision:.4f}")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.01)
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.legend(loc="lower left", frameon=False)
    _save(fig, path)


def plot_score_map(scores, path):
    """Image of an (height, width) score array; NaN pixels stay blank.

    The colour scale stops at the 99th percentile so a few extreme scores do
    not flatten the rest of the map.
    """
    finite = scores[np.isfinite(scores)]
    vmin, vmax = (np.percentile(finite, [1, 99]) if finite.size else (None, None))
    fig, ax = plt.subplots(figsize=(5, 4.5))
    im = ax.imshow(np.ma.masked_invalid(scores), cmap="magma", interpolation="nearest",
                   vmin=vmin, vmax=vmax)
    fig.colorbar(im, ax=ax, shrink=0.8, label="score")
    ax.set_xticks([])
    ax.set_yticks([])
    _save(fig, path)
