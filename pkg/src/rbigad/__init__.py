"""Gaussianization-based density estimation, anomaly and change detection."""

from .detectors import (
    HybridModel,
    KernelModel,
    RxModel,
    ScoreVector,
    fit_detector,
    fit_hybrid,
    fit_kernel,
    fit_rx,
    score,
    score_change,
)
from .errors import FormatError, RbigError
from .evaluation import (
    LabelMask,
    auc_score,
    bootstrap_auc,
    partial_auc,
    precision_recall,
    roc,
)
from .marginal import MarginalMap, fit_marginal
from .modelio import load_model, save_model
from .raster import RasterImage, ScoreMap, read_raster, write_raster
from .rbig import (
    GaussianizationModel,
    RbigConfig,
    fit,
    inverse_transform,
    log_density,
    negentropy_trace,
    sample,
    transform,
)

__version__ = "0.1.0"
