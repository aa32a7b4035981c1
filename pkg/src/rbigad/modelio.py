"""Model files for every detector kind.

Binary layout, little-endian::

    b"RBIG"  u16 version  u8 kind  u32 n_arrays
    n_arrays x ( u16 name_len  name(utf-8)  u8 ndim  ndim x u64 shape
                 f64 payload (C order) )

Everything needed to score lives in the binary.  A JSON sidecar
(``<path>.json``) carries human-readable metadata: kind, fit configuration,
negentropy trace, dropped bands.  Loading ignores a missing sidecar except
for the configuration record.
"""

import json
import struct
from pathlib import Path

import numpy as np

from . import detectors as det
from .errors import BadMagicError, ModelFormatError, TruncatedPayloadError, UnsupportedVersionError
from .marginal import MarginalMap
from .rbig import GaussianizationModel, RbigConfig, RbigLayer

MAGIC = b"RBIG"
VERSION = 1
KIND_TAGS = {"rbig": 1, "rx": 2, "krx": 3, "kde": 4, "hybrid": 5}
_TAG_KINDS = {v: k for k, v in KIND_TAGS.items()}
_HEAD = struct.Struct("<4sHBI")


# ---------------------------------------------------------------- arrays


def _rbig_arrays(model, prefix="rbig."):
    layers = model.layers
    arrays = {
        "input_dim": np.array([model.input_dim], dtype=float),
        "dropped_bands": np.array(model.dropped_bands, dtype=float),
        "dropped_values": np.array(model.dropped_values, dtype=float),
        "edges": np.array([[m.bin_edges for m in L.marginals] for L in layers]),
        "densities": np.array([[m.bin_densities for m in L.marginals] for L in layers]),
        "cdf": np.array([[m.cdf_at_edges for m in L.marginals] for L in layers]),
        "sf": np.array([[m.sf_at_edges for m in L.marginals] for L in layers]),
        "eps": np.array([[[m.eps_cdf, m.eps_pdf] for m in L.marginals] for L in layers]),
        "rotations": np.array([L.rotation for L in layers]),
        "trace": np.asarray(model.trace if model.trace is not None else [], dtype=float),
    }
    return {prefix + k: v for k, v in arrays.items()}


def _rbig_from(arrays, config, prefix="rbig."):
    a = {k[len(prefix):]: v for k, v in arrays.items() if k.startswith(prefix)}
    layers = []
    for i in range(a["rotations"].shape[0]):
        marginals = [
            MarginalMap(a["edges"][i, j], a["densities"][i, j], a["cdf"][i, j], a["sf"][i, j],
                        float(a["eps"][i, j, 0]), float(a["eps"][i, j, 1]))
            for j in range(a["edges"].shape[1])
        ]
        layers.append(RbigLayer(marginals, a["rotations"][i]))
    trace = a["trace"] if a["trace"].size else None
    return GaussianizationModel(
        input_dim=int(a["input_dim"][0]),
        layers=layers,
        dropped_bands=[int(v) for v in a["dropped_bands"]],
        dropped_values=[float(v) for v in a["dropped_values"]],
        config=config,
        trace=trace,
    )


def _rx_arrays(model, prefix="rx."):
    return {
        prefix + "mean": model.mean,
        prefix + "precision": model.precision,
        prefix + "reg_lambda": np.array([model.reg_lambda]),
    }


def _rx_from(a, prefix="rx."):
    return det.RxModel(a[prefix + "mean"], a[prefix + "precision"], float(a[prefix + "reg_lambda"][0]))


def model_arrays(model):
    kind = det.detector_kind(model)
    if kind == "rbig":
        return _rbig_arrays(model)
    if kind == "rx":
        return _rx_arrays(model)
    if kind == "kde":
        return {"kernel.support": model.support, "kernel.sigma": np.array([model.sigma])}
    if kind == "krx":
        return {
            "kernel.support": model.support,
            "kernel.sigma": np.array([model.sigma]),
            "kernel.reg_lambda": np.array([model.reg_lambda]),
            "kernel.factor": model.factor,
            "kernel.mean_kernel": model.mean_kernel,
        }
    arrays = {**_rx_arrays(model.rx), **_rbig_arrays(model.density)}
    arrays["hybrid.retain_fraction"] = np.array([model.retain_fraction])
    arrays["hybrid.retained"] = model.retained.astype(float)
    return arrays


def model_metadata(model):
    kind = det.detector_kind(model)
    meta = {"format": "RBIG", "version": VERSION, "kind": kind}
    density = model if kind == "rbig" else getattr(model, "density", None)
    if kind in ("rx", "hybrid"):
        rx = model if kind == "rx" else model.rx
        meta["dim"] = rx.dim
        meta["reg_lambda"] = rx.reg_lambda
    if kind in ("krx", "kde"):
        meta.update(dim=model.dim, sigma=model.sigma, support_rows=int(model.support.shape[0]),
                    reg_lambda=model.reg_lambda)
    if kind == "hybrid":
        meta["retain_fraction"] = model.retain_fraction
        meta["retained_rows"] = int(model.retained.size)
    if density is not None:
        meta["dim"] = density.input_dim
        meta["rbig_config"] = {
            "max_layers": density.config.max_layers,
            "bins": density.config.bins,
            "rotation": density.config.rotation,
            "tol_negentropy": density.config.tol_negentropy,
            "patience": density.config.patience,
            "seed": density.config.seed,
        }
        meta["fit"] = density.fit_metadata()
    return meta


def _config_from(meta):
    cfg = (meta or {}).get("rbig_config")
    return RbigConfig(**cfg) if cfg else RbigConfig()


# ---------------------------------------------------------------- files


def save_model(model, path):
    path = Path(path)
    kind = det.detector_kind(model)
    arrays = model_arrays(model)
    parts = [_HEAD.pack(MAGIC, VERSION, KIND_TAGS[kind], len(arrays))]
    for name in sorted(arrays):
        value = np.ascontiguousarray(arrays[name], dtype="<f8")
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<B", value.ndim))
        parts.append(struct.pack(f"<{value.ndim}Q", *value.shape))
        parts.append(value.tobytes())
    path.write_bytes(b"".join(parts))
    sidecar = Path(str(path) + ".json")
    sidecar.write_text(json.dumps(model_metadata(model), indent=2, sort_keys=True) + "\n")


def _read_arrays(data, path):
    if len(data) < _HEAD.size:
        if data[:4] == MAGIC:
            raise TruncatedPayloadError(f"{path}: header is truncated")
        raise BadMagicError(f"{path}: not an RBIG model file")
    magic, version, tag, count = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: not an RBIG model file")
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported model version {version}")
    if tag not in _TAG_KINDS:
        raise ModelFormatError(f"{path}: unknown detector kind tag {tag}")
    offset = _HEAD.size
    arrays = {}
    try:
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", data, offset)
            offset += 2
            name = data[offset:offset + name_len].decode("utf-8")
            offset += name_len
            (ndim,) = struct.unpack_from("<B", data, offset)
            offset += 1
            shape = struct.unpack_from(f"<{ndim}Q", data, offset)
            offset += 8 * ndim
            size = int(np.prod(shape)) if ndim else 1
            if offset + 8 * size > len(data):
                raise TruncatedPayloadError(f"{path}: array {name!r} is truncated")
            arrays[name] = np.frombuffer(data, dtype="<f8", count=size, offset=offset).astype(np.float64).reshape(shape)
            offset += 8 * size
    except struct.error as exc:
        raise TruncatedPayloadError(f"{path}: truncated model file") from exc
    if offset != len(data):
        raise ModelFormatError(f"{path}: {len(data) - offset} trailing bytes")
    return _TAG_KINDS[tag], arrays


def load_model(path):
    """Load any detector model written by :func:`save_model`."""
    path = Path(path)
    kind, a = _read_arrays(path.read_bytes(), path)
    sidecar = Path(str(path) + ".json")
    meta = json.loads(sidecar.read_text()) if sidecar.exists() else None
    try:
        if kind == "rbig":
            return _rbig_from(a, _config_from(meta))
        if kind == "rx":
            return _rx_from(a)
        if kind == "kde":
            return det.KernelModel("kde", a["kernel.support"], float(a["kernel.sigma"][0]))
        if kind == "krx":
            return det.KernelModel("krx", a["kernel.support"], float(a["kernel.sigma"][0]),
                                   float(a["kernel.reg_lambda"][0]), a["kernel.factor"],
                                   a["kernel.mean_kernel"])
        return det.HybridModel(
            _rx_from(a), _rbig_from(a, _config_from(meta)),
            float(a["hybrid.retain_fraction"][0]), a["hybrid.retained"].astype(np.intp),
        )
    except KeyError as exc:
        raise ModelFormatError(f"{path}: missing array {exc.args[0]!r}") from None
