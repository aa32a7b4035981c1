"""Command-line front end: ``rbigad <command> ...``.

Exit codes: 0 success, 2 usage, parse or I/O errors, 3 domain or fit errors.
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import detectors as det
from . import evaluation as ev
from . import modelio, rbig, toys
from .errors import DimensionMismatchError, FormatError, KindMismatchError, RbigError
from .parallel import set_threads
from .raster import (
    RasterImage,
    flatten_to_matrix,
    is_raster_path,
    read_csv_matrix,
    read_matrix,
    read_raster,
    score_map,
    write_csv_matrix,
    write_mask,
    write_raster,
)

EXIT_USAGE = 2
EXIT_DOMAIN = 3


class UsageError(Exception):
    pass


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True)


def _fpr_caps(text):
    try:
        caps = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad cap list {text!r}") from None
    if not caps or any(not 0.0 < c <= 1.0 for c in caps):
        raise argparse.ArgumentTypeError("caps must lie in (0, 1]")
    return caps


def _method_options(args):
    """Library keyword options for ``fit_detector`` from the shared flags."""
    method = args.method
    if method in ("rbig", "hybrid"):
        opts = {"seed": args.seed, "rotation": args.rotation}
        if args.layers is not None:
            opts["max_layers"] = args.layers
        if args.bins is not None:
            opts["bins"] = args.bins
        if args.tol is not None:
            opts["tol_negentropy"] = args.tol
        if method == "hybrid":
            opts["retain_fraction"] = args.retain_fraction
        return opts
    if method in ("krx", "kde"):
        return {"sigma_rule": args.sigma_rule, "seed": args.seed}
    return {}


def _fit_report(model, X, seconds):
    report = {
        "method": det.detector_kind(model),
        "n_samples": int(X.shape[0]),
        "dim": int(X.shape[1]),
        "timings": {"fit_seconds": round(seconds, 4)},
    }
    density = model if report["method"] == "rbig" else getattr(model, "density", None)
    if density is not None:
        meta = density.fit_metadata()
        report["layers_used"] = meta["layers_used"]
        report["negentropy_trace"] = meta["negentropy_trace"]
        report["dropped_bands"] = meta["dropped_bands"]
        report["bins"] = meta["bins"]
    if report["method"] == "hybrid":
        report["retained_rows"] = int(model.retained.size)
    if report["method"] in ("krx", "kde"):
        report["sigma"] = model.sigma
        report["support_rows"] = int(model.support.shape[0])
    return report


def _write_scores(path, scores, img, pixel_index):
    """Scores go to a raster grid (NaN where unscored) or a one-column CSV."""
    if is_raster_path(path):
        if img is None:
            raise UsageError("raster output needs raster input")
        write_raster(score_map(scores, pixel_index, img.height, img.width).to_raster(), path)
        return
    if img is not None:
        full = np.full(img.height * img.width, np.nan)
        full[pixel_index] = scores
        scores = full
    write_csv_matrix(path, scores, header=["score"])


def _read_scores(path):
    if is_raster_path(path):
        img = read_raster(path)
        if img.bands != 1:
            raise DimensionMismatchError(f"score raster must have one band, found {img.bands}")
        return img.values[0].ravel()
    X, _ = read_csv_matrix(path)
    if X.shape[1] != 1:
        raise DimensionMismatchError(f"score CSV must have one column, found {X.shape[1]}")
    return X[:, 0]


def _read_labels(path):
    if is_raster_path(path):
        img = read_raster(path)
        if img.bands != 1:
            raise DimensionMismatchError(f"mask must have one band, found {img.bands}")
        return img.values[0].ravel()
    X, _ = read_csv_matrix(path)
    if X.shape[1] != 1:
        raise DimensionMismatchError(f"mask CSV must have one column, found {X.shape[1]}")
    return X[:, 0]


# ---------------------------------------------------------------- commands


def cmd_fit(args):
    X, _, _ = read_matrix(args.input)
    start = time.perf_counter()
    model = det.fit_detector(X, args.method, **_method_options(args))
    seconds = time.perf_counter() - start
    modelio.save_model(model, args.model_out)
    print(_dump(_fit_report(model, X, seconds)))


def cmd_score(args):
    model = modelio.load_model(args.model)
    X, img, pixel_index = read_matrix(args.input)
    start = time.perf_counter()
    scores = det.score(model, X).scores
    seconds = time.perf_counter() - start
    _write_scores(args.out, scores, img, pixel_index)
    if args.plot and img is not None:
        from .plotting import plot_score_map

        plot_score_map(score_map(scores, pixel_index, img.height, img.width).scores,
                       Path(args.out).with_suffix(".png"))
    print(_dump({"method": det.detector_kind(model), "n_scored": int(scores.size),
                 "timings": {"score_seconds": round(seconds, 4)}}))


def cmd_detect_change(args):
    X1, img1, _ = read_matrix(args.before)
    X2, img2, index2 = read_matrix(args.after)
    if (img1 is None) != (img2 is None):
        raise UsageError("before and after must both be rasters or both be CSV")
    if img1 is not None and (img1.height, img1.width, img1.bands) != (img2.height, img2.width, img2.bands):
        raise DimensionMismatchError(
            f"before is {img1.height}x{img1.width}x{img1.bands}, "
            f"after is {img2.height}x{img2.width}x{img2.bands}"
        )
    if X1.shape[1] != X2.shape[1]:
        raise DimensionMismatchError(f"before has {X1.shape[1]} bands, after has {X2.shape[1]}")
    start = time.perf_counter()
    model = det.fit_detector(X1, args.method, **_method_options(args))
    scores = det.score_change(model, X2).scores
    seconds = time.perf_counter() - start
    _write_scores(args.out, scores, img2, index2)
    if args.model_out:
        modelio.save_model(model, args.model_out)
    if args.plot and img2 is not None:
        from .plotting import plot_score_map

        plot_score_map(score_map(scores, index2, img2.height, img2.width).scores,
                       Path(args.out).with_suffix(".png"))
    report = _fit_report(model, X1, seconds)
    report["n_scored"] = int(scores.size)
    print(_dump(report))


def cmd_eval(args):
    scores = _read_scores(args.scores)
    labels = _read_labels(args.mask)
    if scores.size != labels.size:
        raise DimensionMismatchError(f"{scores.size} scores but {labels.size} mask entries")
    # unscored pixels (NaN) are left out of every metric
    keep = ~np.isnan(scores)
    scores, mask = scores[keep], ev.LabelMask.from_values(labels[keep])
    curve = ev.roc(scores, mask)
    pr = ev.precision_recall(scores, mask)
    summary = {
        "n": int(scores.size),
        "positives": mask.positive_count,
        "auc": curve.auc,
        "ap": pr.average_precision,
        "fpr_caps": args.fpr_caps,
        "partial_auc": {
            f"{cap:g}": {
                "raw": ev.partial_auc(curve, cap, normalized=False),
                "normalized": ev.partial_auc(curve, cap, normalized=True),
            }
            for cap in args.fpr_caps
        },
    }
    if args.bootstrap > 0:
        boot = ev.bootstrap_auc(scores, mask, runs=args.bootstrap, rng=args.seed)
        summary["bootstrap"] = {**boot.summary(), "seed": args.seed}

    prefix = args.out_prefix
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    write_csv_matrix(f"{prefix}_roc.csv", np.c_[curve.thresholds, curve.fpr, curve.tpr],
                     header=["threshold", "fpr", "tpr"])
    write_csv_matrix(f"{prefix}_pr.csv", np.c_[pr.thresholds, pr.recall, pr.precision],
                     header=["threshold", "recall", "precision"])
    text = _dump(summary)
    Path(f"{prefix}_summary.json").write_text(text + "\n", encoding="utf-8")
    if args.plot:
        from .plotting import plot_pr, plot_roc

        plot_roc(curve, f"{prefix}_roc.png", args.fpr_caps)
        plot_pr(pr, f"{prefix}_pr.png")
    print(text)


def cmd_synth(args):
    model = modelio.load_model(args.model)
    if det.detector_kind(model) != "rbig":
        raise KindMismatchError(f"synth needs an rbig model, got {det.detector_kind(model)!r}")
    if args.n < 0:
        raise UsageError("--n must be >= 0")
    X = rbig.sample(model, args.n, rng=args.seed)
    write_csv_matrix(args.out, X.reshape(args.n, model.input_dim),
                     header=[f"x{j}" for j in range(model.input_dim)])


def cmd_make_toy(args):
    prefix = args.out_prefix
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    if args.kind == "cd-pair":
        before, after, region = toys.make_cd_pair(
            width=args.width, height=args.height, bands=args.bands,
            change_rate=args.anomaly_rate, seed=args.seed,
        )
        paths = {"before": f"{prefix}_before.mbrs", "after": f"{prefix}_after.mbrs",
                 "mask": f"{prefix}_mask.mbrs"}
        write_raster(before, paths["before"])
        write_raster(after, paths["after"])
        write_raster(RasterImage(region[None]), paths["mask"])
        positives = int(region.sum())
    else:
        make = {"ring": toys.make_ring, "gaussian": toys.make_gaussian, "mixture": toys.make_mixture}
        X, labels = make[args.kind](n=args.n, anomaly_rate=args.anomaly_rate, seed=args.seed)
        paths = {"data": f"{prefix}_data.csv", "mask": f"{prefix}_mask.csv"}
        write_csv_matrix(paths["data"], X)
        write_mask(paths["mask"], labels)
        positives = int(labels.sum())
    print(_dump({"kind": args.kind, "seed": args.seed, "positives": positives, "files": paths}))


# ---------------------------------------------------------------- parser


def _add_method_flags(p, default_method):
    p.add_argument("--method", choices=("rbig", "rx", "krx", "kde", "hybrid"), default=default_method)
    p.add_argument("--layers", type=int, help="maximum number of RBIG layers (default 100)")
    p.add_argument("--bins", type=int, help="histogram bins per marginal (default: sqrt rule)")
    p.add_argument("--tol", type=float, help="per-dimension negentropy stopping tolerance; 0 fits every layer")
    p.add_argument("--rotation", choices=("pca", "random"), default="pca")
    p.add_argument("--retain-fraction", type=float, default=0.95, help="hybrid: share of rows kept after RX")
    p.add_argument("--sigma-rule", choices=("median", "mean"), default="median")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="rbigad", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, help="worker threads (default: $RBIGAD_THREADS or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a detector and save it")
    p.add_argument("--input", required=True)
    p.add_argument("--model-out", required=True)
    _add_method_flags(p, "rbig")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("score", help="score samples with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", action="store_true", help="also render the score map to PNG")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("detect-change", help="fit on the before image, score the after image")
    p.add_argument("--before", required=True)
    p.add_argument("--after", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model-out")
    p.add_argument("--plot", action="store_true", help="also render the score map to PNG")
    _add_method_flags(p, "rbig")
    p.set_defaults(func=cmd_detect_change)

    p = sub.add_parser("eval", help="ROC, PR, partial AUC and bootstrap against a mask")
    p.add_argument("--scores", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--fpr-caps", type=_fpr_caps, default=[0.1, 0.2, 0.3])
    p.add_argument("--bootstrap", type=int, default=1000, help="bootstrap runs; 0 skips")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--plot", action="store_true", help="also render ROC and PR curves to PNG")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="sample from a saved rbig model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("make-toy", help="write a synthetic dataset")
    p.add_argument("--kind", choices=toys.KINDS, required=True)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--anomaly-rate", type=float, default=None,
                   help="share of anomalous samples (default 0.01, or 0.05 for cd-pair)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=250)
    p.add_argument("--height", type=int, default=250)
    p.add_argument("--bands", type=int, default=8)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_make_toy)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "anomaly_rate", 0.0) is None:
        args.anomaly_rate = 0.05 if args.kind == "cd-pair" else 0.01
    if args.threads is not None:
        if args.threads < 1:
            parser.error("--threads must be >= 1")
        set_threads(args.threads)
    try:
        args.func(args)
    except (UsageError, FormatError, OSError) as exc:
        print(f"rbigad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RbigError as exc:
        print(f"rbigad: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return 0


if __name__ == "__main__":
    sys.exit(main())
