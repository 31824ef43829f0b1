"""Data ingestion, pixel scalings, class subsets and feature export."""

from __future__ import annotations

import gzip
import io
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BadMagicError, CountMismatchError, DataError, DimensionError, TruncatedError

log = logging.getLogger(__name__)

IDX_IMAGES_MAGIC = 0x00000803  # 2051
IDX_LABELS_MAGIC = 0x00000801  # 2049


@dataclass(frozen=True, eq=False)
class Dataset:
    samples: np.ndarray  # n x d
    labels: np.ndarray | None = None
    source: str = ""
    indices: np.ndarray | None = None  # rows of the parent dataset, when subset

    def __post_init__(self):
        if self.samples.ndim != 2:
            raise DimensionError(f"samples must be 2-d, got shape {self.samples.shape}")
        if not np.all(np.isfinite(self.samples)):
            raise DataError(f"{self.source or 'dataset'}: non-finite sample values")
        if self.labels is not None and len(self.labels) != len(self.samples):
            raise DimensionError(
                f"{len(self.labels)} labels for {len(self.samples)} samples"
            )

    def __len__(self) -> int:
        return self.samples.shape[0]


def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _idx_header(raw: bytes, path, magic: int, ndim: int):
    need = 4 + 4 * ndim
    if len(raw) < 4:
        raise TruncatedError(f"{path}: file too short for an IDX header")
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise BadMagicError(f"{path}: bad IDX magic 0x{found:08x}, expected 0x{magic:08x}")
    if len(raw) < need:
        raise TruncatedError(f"{path}: truncated IDX header")
    dims = struct.unpack(">" + "I" * ndim, raw[4:need])
    size = int(np.prod(dims))
    if len(raw) - need < size:
        raise TruncatedError(
            f"{path}: truncated IDX payload ({len(raw) - need} of {size} bytes)"
        )
    return dims, np.frombuffer(raw, dtype=np.uint8, count=size, offset=need)


def read_idx_images(path) -> np.ndarray:
    (count, rows, cols), payload = _idx_header(_read_bytes(path), path, IDX_IMAGES_MAGIC, 3)
    return payload.reshape(count, rows * cols).astype(np.float64)


def read_idx_labels(path) -> np.ndarray:
    (_count,), payload = _idx_header(_read_bytes(path), path, IDX_LABELS_MAGIC, 1)
    return payload.astype(np.int64)


def load_idx(images_path, labels_path=None) -> Dataset:
    """Read MNIST-style IDX files; pixels stay raw (0..255) as float64."""
    X = read_idx_images(images_path)
    y = None
    if labels_path is not None:
        y = read_idx_labels(labels_path)
        if len(y) != len(X):
            raise CountMismatchError(
                f"{images_path} has {len(X)} images but {labels_path} has {len(y)} labels"
            )
    return Dataset(X, y, source=f"idx:{Path(images_path).name}")


def write_idx_images(path, images, rows: int = 28, cols: int = 28):
    images = np.asarray(images)
    if images.size and (images.min() < 0 or images.max() > 255):
        raise DataError("IDX images hold bytes; values must lie in 0..255")
    data = images.astype(np.uint8).reshape(len(images), rows * cols)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, len(data), rows, cols))
        fh.write(data.tobytes())


def write_idx_labels(path, labels):
    labels = np.asarray(labels).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABELS_MAGIC, len(labels)))
        fh.write(labels.tobytes())


def _is_idx(path, magic) -> bool:
    try:
        raw = _read_bytes(path)[:4]
    except OSError:
        return False
    return len(raw) == 4 and struct.unpack(">I", raw)[0] == magic


def _sniff_delimiter(path) -> str:
    if str(path).endswith((".tsv", ".tsv.gz")):
        return "\t"
    with _open_text(path) as fh:
        for line in fh:
            if line.strip() and not line.startswith("#"):
                return "\t" if "\t" in line else ","
    return ","


def _open_text(path):
    raw = _read_bytes(path)
    return io.StringIO(raw.decode())


def read_matrix(path) -> np.ndarray:
    """Numeric CSV/TSV matrix; ``#`` lines are comments."""
    delim = _sniff_delimiter(path)
    with _open_text(path) as fh:
        rows = [line for line in fh if line.strip() and not line.startswith("#")]
    if not rows:
        return np.zeros((0, 0))
    try:
        return np.atleast_2d(np.loadtxt(rows, delimiter=delim, dtype=np.float64, ndmin=2))
    except ValueError as exc:
        raise DataError(f"{path}: not a numeric matrix ({exc})") from exc


def read_labels(path) -> np.ndarray:
    if _is_idx(path, IDX_LABELS_MAGIC):
        return read_idx_labels(path)
    M = read_matrix(path)
    flat = M.ravel()
    if not np.all(flat == np.round(flat)):
        raise DataError(f"{path}: labels must be integers")
    return flat.astype(np.int64)


def load_dataset(path, labels_path=None) -> Dataset:
    """Load IDX images or a text matrix, with optional labels file."""
    if _is_idx(path, IDX_IMAGES_MAGIC):
        return load_idx(path, labels_path)
    X = read_matrix(path)
    y = None
    if labels_path is not None:
        y = read_labels(labels_path)
        if len(y) != len(X):
            raise CountMismatchError(f"{path} has {len(X)} rows but {labels_path} has {len(y)} labels")
    return Dataset(X, y, source=f"text:{Path(path).name}")


def scale_unit(d: Dataset) -> Dataset:
    """Divide raw pixel intensities by 255."""
    X = d.samples / 255.0
    if X.size and (X.min() < 0.0 or X.max() > 1.0):
        raise DataError("scale_unit expects raw pixels in 0..255")
    return Dataset(X, d.labels, d.source + "|unit", d.indices)


def scale_signed(d: Dataset) -> Dataset:
    """Map [0, 1] intensities to [-1, 1] via ``2x - 1``."""
    return Dataset(2.0 * d.samples - 1.0, d.labels, d.source + "|signed", d.indices)


def subset_by_classes(d: Dataset, classes, per_class: int, seed: int = 0) -> Dataset:
    """Take ``per_class`` samples of each class.

    ``seed=0`` takes the first occurrences in file order; any other seed draws
    a seeded random subset per class. Output is class-major (in the order of
    ``classes``), original order within a class.
    """
    if d.labels is None:
        raise DataError("subset_by_classes needs labelled data")
    if per_class < 0:
        raise DataError(f"per_class must be >= 0, got {per_class}")
    rng = np.random.default_rng(seed) if seed != 0 else None
    chosen = []
    for c in classes:
        idx = np.flatnonzero(d.labels == c)
        if len(idx) < per_class:
            raise DataError(f"class {c} has {len(idx)} samples, {per_class} requested")
        if rng is None:
            pick = idx[:per_class]
        else:
            pick = np.sort(rng.permutation(idx)[:per_class])
        chosen.append(pick)
    sel = np.concatenate(chosen) if chosen else np.zeros(0, dtype=np.int64)
    sel = sel.astype(np.int64)
    log.info("subset classes=%s per_class=%d seed=%d indices=%s", list(classes), per_class, seed, sel.tolist())
    parent = d.indices[sel] if d.indices is not None else sel
    samples = d.samples[sel].reshape(len(sel), d.samples.shape[1])
    return Dataset(samples, d.labels[sel], f"{d.source}|subset(seed={seed})", parent)


def format_value(v: float) -> str:
    """Shortest decimal that round-trips; integral values print without a point."""
    v = float(v)
    if v == 0.0:
        return "-0" if np.signbit(v) else "0"
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(v)


def export_features(features, path, labels=None, fmt: str = "csv", header: str | None = None):
    """Write one row per sample, optional final label column.

    ``header`` (if given) is written as leading ``#`` comment line(s).
    """
    if fmt not in ("csv", "tsv"):
        raise ValueError(f"format must be csv or tsv, got {fmt!r}")
    F = np.asarray(features, dtype=np.float64)
    if F.ndim == 1:
        F = F[:, None]
    if labels is not None and len(labels) != len(F):
        raise DimensionError(f"{len(labels)} labels for {len(F)} rows")
    sep = "," if fmt == "csv" else "\t"
    lines = []
    if header:
        lines += ["# " + h for h in header.splitlines()]
    for i, row in enumerate(F):
        cells = [format_value(v) for v in row]
        if labels is not None:
            cells.append(str(int(labels[i])))
        lines.append(sep.join(cells))
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def read_features(path, labels: bool = False):
    """Inverse of :func:`export_features`; returns ``(features, labels_or_None)``."""
    M = read_matrix(path)
    if not labels:
        return M, None
    if M.size == 0:
        return M, np.zeros(0, dtype=np.int64)
    return M[:, :-1], M[:, -1].astype(np.int64)
