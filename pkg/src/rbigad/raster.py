"""Multiband raster, mask and CSV matrix files.

Native raster layout (``.mbrs``), all little-endian::

    b"MBRS"  u8 version  u32 width  u32 height  u32 bands
    u8 has_nodata  [f64 nodata]  f64 payload (band, row, col order)

Band names, when present, live in a JSON sidecar next to the file
(``<path>.json``).  Masks are single-band rasters holding 0/1.
"""

import csv
import io
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    CsvParseError,
    DimensionMismatchError,
    DimensionOverflowError,
    DomainError,
    TruncatedPayloadError,
    UnsupportedVersionError,
)
from .evaluation import LabelMask

MAGIC = b"MBRS"
VERSION = 1
MAX_VALUES = 1 << 34
_HEADER = struct.Struct("<4sBIIIB")
_F64 = struct.Struct("<d")


@dataclass(eq=False)
class RasterImage:
    """Band-sequential image: ``values`` has shape ``(bands, height, width)``."""

    values: np.ndarray
    nodata: float | None = None
    band_names: list | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim == 2:
            self.values = self.values[None]
        if self.values.ndim != 3:
            raise DimensionMismatchError("raster values must be (bands, height, width)")
        bad = ~np.isfinite(self.values)
        if np.any(bad):
            if self.nodata is None or not math.isnan(self.nodata) or np.any(np.isinf(self.values)):
                raise DomainError("raster contains non-finite values that are not the nodata sentinel")
        if self.band_names is not None and len(self.band_names) != self.bands:
            raise DimensionMismatchError("one band name per band required")

    @property
    def bands(self):
        return self.values.shape[0]

    @property
    def height(self):
        return self.values.shape[1]

    @property
    def width(self):
        return self.values.shape[2]

    def valid_pixels(self):
        """Boolean (height, width) map of pixels with no nodata band."""
        if self.nodata is None:
            return np.ones((self.height, self.width), dtype=bool)
        if math.isnan(self.nodata):
            return ~np.any(np.isnan(self.values), axis=0)
        return ~np.any(self.values == self.nodata, axis=0)


@dataclass(eq=False)
class ScoreMap:
    """Per-pixel scores on the source raster grid; NaN where unscored."""

    scores: np.ndarray

    @property
    def height(self):
        return self.scores.shape[0]

    @property
    def width(self):
        return self.scores.shape[1]

    @property
    def mask(self):
        return np.isfinite(self.scores)

    def to_raster(self):
        return RasterImage(self.scores[None], nodata=float("nan"))


def write_raster(img, path):
    path = Path(path)
    has_nodata = img.nodata is not None
    header = _HEADER.pack(MAGIC, VERSION, img.width, img.height, img.bands, int(has_nodata))
    with open(path, "wb") as fh:
        fh.write(header)
        if has_nodata:
            fh.write(_F64.pack(img.nodata))
        fh.write(np.ascontiguousarray(img.values, dtype="<f8").tobytes())
    sidecar = Path(str(path) + ".json")
    if img.band_names is not None:
        sidecar.write_text(json.dumps({"band_names": list(img.band_names)}, indent=2) + "\n")
    elif sidecar.exists():
        sidecar.unlink()


def read_raster(path):
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        if not data.startswith(MAGIC[: len(data)]):
            raise BadMagicError(f"{path}: not an MBRS raster")
        raise TruncatedPayloadError(f"{path}: header is truncated")
    magic, version, width, height, bands, has_nodata = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: not an MBRS raster")
    if version != VERSION:
        raise UnsupportedVersionError(f"{path}: unsupported raster version {version}")
    if min(width, height, bands) == 0 or width * height * bands > MAX_VALUES:
        raise DimensionOverflowError(f"{path}: bad dimensions {width}x{height}x{bands}")
    offset = _HEADER.size
    nodata = None
    if has_nodata:
        if len(data) < offset + 8:
            raise TruncatedPayloadError(f"{path}: missing nodata value")
        (nodata,) = _F64.unpack_from(data, offset)
        offset += 8
    expected = width * height * bands * 8
    if len(data) - offset != expected:
        raise TruncatedPayloadError(
            f"{path}: header declares {expected} payload bytes, file holds {len(data) - offset}"
        )
    values = np.frombuffer(data, dtype="<f8", offset=offset).astype(np.float64)
    values = values.reshape(bands, height, width)
    band_names = None
    sidecar = Path(str(path) + ".json")
    if sidecar.exists():
        band_names = json.loads(sidecar.read_text()).get("band_names")
    return RasterImage(values, nodata, band_names)


def flatten_to_matrix(img):
    """Pixels as rows (row-major scan), skipping nodata pixels.

    Returns ``(X, pixel_index)`` where ``pixel_index`` holds the flat
    ``row * width + col`` position of every row of ``X``.
    """
    valid = img.valid_pixels().ravel()
    pixel_index = np.flatnonzero(valid)
    if pixel_index.size == 0:
        raise DomainError("raster has no valid pixels")
    X = img.values.reshape(img.bands, -1)[:, pixel_index].T
    return np.ascontiguousarray(X), pixel_index


def unflatten(rows, pixel_index, height, width, fill=np.nan):
    """Scatter per-pixel rows back onto a (bands, height, width) grid."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim == 1:
        rows = rows[:, None]
    out = np.full((rows.shape[1], height * width), fill, dtype=np.float64)
    out[:, pixel_index] = rows.T
    return out.reshape(rows.shape[1], height, width)


def score_map(scores, pixel_index, height, width):
    return ScoreMap(unflatten(scores, pixel_index, height, width)[0])


# ---------------------------------------------------------------- CSV


def write_csv_matrix(path, X, header=None):
    """Numeric CSV with a header row; floats use shortest round-trip repr."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if header is None:
        header = [f"x{j}" for j in range(X.shape[1])]
    if len(header) != X.shape[1]:
        raise DimensionMismatchError("header length must match column count")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in X.tolist():
        writer.writerow([repr(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_csv_matrix(path):
    """Parse a numeric CSV written by :func:`write_csv_matrix` (or similar).

    Returns ``(X, header)``.  Ragged rows and non-numeric cells raise
    :class:`CsvParseError` carrying the 1-based line number.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError("empty file, expected a header row", line=1) from None
        width = len(header)
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise CsvParseError(f"expected {width} fields, found {len(row)}", line=line_no)
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                bad = next(c for c in row if not _is_float(c))
                raise CsvParseError(f"non-numeric cell {bad!r}", line=line_no) from None
    X = np.array(rows, dtype=np.float64).reshape(len(rows), width)
    return X, header


def _is_float(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


# ---------------------------------------------------------------- dispatch


def is_raster_path(path):
    return Path(path).suffix.lower() == ".mbrs"


def read_matrix(path):
    """Load samples from a raster or CSV.

    Returns ``(X, raster_or_None, pixel_index_or_None)``.
    """
    if is_raster_path(path):
        img = read_raster(path)
        X, pixel_index = flatten_to_matrix(img)
        return X, img, pixel_index
    X, _ = read_csv_matrix(path)
    return X, None, None


def read_mask(path, like=None):
    """Load a label mask; nonzero entries are positives.

    ``like`` may be a :class:`RasterImage` (mask must share its grid) or a
    row count (for CSV masks).  Single-class masks load fine; curve
    computations reject them later.
    """
    if is_raster_path(path):
        img = read_raster(path)
        if img.bands != 1:
            raise DimensionMismatchError(f"mask must have one band, found {img.bands}")
        if isinstance(like, RasterImage) and (img.height, img.width) != (like.height, like.width):
            raise DimensionMismatchError(
                f"mask is {img.height}x{img.width}, raster is {like.height}x{like.width}"
            )
        values = img.values[0].ravel()
    else:
        X, _ = read_csv_matrix(path)
        if X.shape[1] != 1:
            raise DimensionMismatchError(f"CSV mask must have one column, found {X.shape[1]}")
        values = X[:, 0]
        if isinstance(like, (int, np.integer)) and values.size != like:
            raise DimensionMismatchError(f"mask has {values.size} rows, expected {like}")
    return LabelMask.from_values(values)


def write_mask(path, labels, height=None, width=None):
    labels = np.asarray(labels).ravel().astype(np.float64)
    if is_raster_path(path):
        write_raster(RasterImage(labels.reshape(1, height, width)), path)
    else:
        write_csv_matrix(path, labels, header=["label"])
