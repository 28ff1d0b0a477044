"""File formats: the PMGM binary matrix, cloud CSV, trace CSV, and JSON.

PMGM binary layout (all little-endian):

    magic  4 bytes  "PMGM"
    version u16     1
    rows    u32     number of points
    cols    u32     dimensions per point
    payload rows*cols float64, row-major (one point per row)
    labels  optional: marker u8 = 1, then rows u32 class ids

The reader validates sizes exactly and rejects trailing bytes. In-memory
clouds keep the (p, n) points-as-columns convention, so read/write
transpose.

Cloud CSV: header ``class,d0,...,d{p-1}``, one row per point, ``repr``
floats (shortest round-trip, lossless).
"""

from __future__ import annotations

import csv
import io as _io
import json
import struct

import numpy as np

from .cloud import LabeledCloud
from .errors import InvalidInputError
from .linalg import as_point_matrix

MAGIC = b"PMGM"
VERSION = 1
SCHEMA_VERSION = 1


class FormatError(ValueError):
    """Malformed PMGM or CSV content (an I/O-level error, not a domain error)."""


def write_matrix_file(path, points, labels=None) -> None:
    """Write a (p, n) cloud (and optional per-point labels) as a PMGM file."""
    pts = as_point_matrix(points)
    p, n = pts.shape
    buf = _io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", VERSION))
    buf.write(struct.pack("<II", n, p))
    buf.write(np.ascontiguousarray(pts.T, dtype="<f8").tobytes())
    if labels is not None:
        lab = np.asarray(labels, dtype=np.int64)
        if lab.ndim != 1 or lab.size != n:
            raise InvalidInputError("labels must be one class id per point")
        if lab.min() < 0 or lab.max() > 0xFFFFFFFF:
            raise InvalidInputError("labels out of u32 range")
        buf.write(struct.pack("<B", 1))
        buf.write(lab.astype("<u4").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def read_matrix_file(path):
    """Read a PMGM file; returns (points (p, n), labels or None)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 14 or data[:4] != MAGIC:
        raise FormatError("not a PMGM file (bad magic)")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != VERSION:
        raise FormatError(f"unsupported PMGM version {version}")
    n, p = struct.unpack_from("<II", data, 6)
    if n < 1 or p < 1:
        raise FormatError("PMGM header declares an empty matrix")
    off = 14
    need = n * p * 8
    if len(data) < off + need:
        raise FormatError("PMGM payload truncated")
    pts = np.frombuffer(data[off : off + need], dtype="<f8").reshape(n, p).T.copy()
    off += need
    labels = None
    if off < len(data):
        marker = data[off]
        off += 1
        if marker != 1:
            raise FormatError(f"unknown trailing block marker {marker}")
        if len(data) < off + n * 4:
            raise FormatError("PMGM label block truncated")
        labels = np.frombuffer(data[off : off + n * 4], dtype="<u4").astype(np.int64)
        off += n * 4
    if off != len(data):
        raise FormatError(f"{len(data) - off} trailing bytes after PMGM content")
    return pts, labels


def write_pool_matrix(path, pool) -> None:
    """Serialize feature-pool contents (all batches, enqueue order) as PMGM.

    Stores the pooled features with their labels; batch boundaries and
    sequence numbers are protocol state the matrix format does not carry.
    """
    if not pool.records:
        raise InvalidInputError("cannot serialize an empty pool")
    feats = np.hstack([r.features for r in pool.records])
    labels = np.concatenate([r.labels for r in pool.records])
    write_matrix_file(path, feats, labels)


def write_cloud_csv(path, cloud: LabeledCloud) -> None:
    p = cloud.dim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["class"] + [f"d{i}" for i in range(p)])
        for j in range(cloud.n_points):
            w.writerow([int(cloud.labels[j])] + [repr(float(v)) for v in cloud.points[:, j]])


def read_cloud_csv(path) -> LabeledCloud:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError("empty CSV")
    header = rows[0]
    if not header or header[0] != "class":
        raise FormatError("cloud CSV must start with a 'class' column")
    p = len(header) - 1
    if p < 1 or header[1:] != [f"d{i}" for i in range(p)]:
        raise FormatError("cloud CSV header must be class,d0,...,d{p-1}")
    labels = []
    pts = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != p + 1:
            raise FormatError(f"line {lineno}: expected {p + 1} fields, got {len(row)}")
        try:
            cid = int(row[0])
            vals = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise FormatError(f"line {lineno}: {exc}") from exc
        if cid < 0:
            raise FormatError(f"line {lineno}: negative class id")
        labels.append(cid)
        pts.append(vals)
    if not pts:
        raise FormatError("cloud CSV has no data rows")
    return LabeledCloud(points=np.array(pts).T, labels=np.array(labels))


def read_cloud(path) -> LabeledCloud:
    """Read a cloud from PMGM or CSV, sniffing the magic bytes."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        pts, labels = read_matrix_file(path)
        if labels is None:
            labels = np.zeros(pts.shape[1], dtype=np.int64)
        return LabeledCloud(points=pts, labels=labels)
    return read_cloud_csv(path)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_safe(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if np.isfinite(f) else None  # NaN/inf have no strict-JSON form
    return obj


def dump_json(obj, path=None) -> str:
    """Serialize with the schema_version stamp; floats keep full precision."""
    payload = {"schema_version": SCHEMA_VERSION}
    payload.update(obj)
    text = json.dumps(_json_safe(payload), indent=2, allow_nan=False)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def write_rows_csv(path, fieldnames, rows) -> None:
    """Write dict rows with repr-formatted floats (byte-stable for fixed inputs)."""
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames)
        w.writeheader()
        for row in rows:
            w.writerow(
                {
                    k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                    for k, v in row.items()
                }
            )


TRACE_FIELDS_FIXED = [
    "epoch",
    "mean_loss",
    "pcc_accuracy_separation",
    "pcc_accuracy_complexity",
    "accuracy_variance",
    "bias_ratio",
]


def trace_fieldnames(n_classes: int) -> list:
    per_class = []
    for stem in ("accuracy", "separation", "complexity"):
        per_class += [f"{stem}_{c}" for c in range(n_classes)]
    return TRACE_FIELDS_FIXED[:2] + per_class + TRACE_FIELDS_FIXED[2:]


def trace_rows(trace) -> list:
    """TrainingTrace -> dict rows matching trace_fieldnames."""
    rows = []
    c = trace.n_classes
    for i in range(trace.epochs.size):
        row = {
            "epoch": int(trace.epochs[i]),
            "mean_loss": float(trace.mean_loss[i]),
            "pcc_accuracy_separation": float(trace.pcc_separation[i]),
            "pcc_accuracy_complexity": float(trace.pcc_complexity[i]),
            "accuracy_variance": float(trace.accuracy_variance[i]),
            "bias_ratio": float(trace.bias_ratio[i]),
        }
        for stem, arr in (
            ("accuracy", trace.accuracy),
            ("separation", trace.separation),
            ("complexity", trace.complexity),
        ):
            for k in range(c):
                row[f"{stem}_{k}"] = float(arr[i, k])
        rows.append(row)
    return rows


def write_trace_csv(path, trace) -> None:
    write_rows_csv(path, trace_fieldnames(trace.n_classes), trace_rows(trace))
