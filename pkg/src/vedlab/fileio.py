"""On-disk artifacts: VDSF field snapshots, CSV tables, atomic writes.

VDSF layout (all integers unsigned 32-bit little-endian):

    magic "VDSF" | version | dim | points_per_dim | period (f64 LE)
    | field_count | field_count x (name_len, utf-8 name)
    | field_count x row-major float64 LE arrays of n^dim values

Only real (physical-space) fields are stored.  Files are written
atomically: a temp file in the target directory, then rename.
"""
from __future__ import annotations

import os
import struct
import tempfile
from typing import Iterable, Sequence

import numpy as np

VDSF_MAGIC = b"VDSF"
VDSF_VERSION = 1

# every numeric CSV cell uses 17 significant digits
CSV_FMT = "%.16e"


def atomic_write_bytes(path: str, data: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_vdsf(path: str, dim: int, points_per_dim: int, period: float,
               fields: Sequence[tuple]) -> None:
    """fields is an ordered sequence of (name, real array of shape (n,)*dim)."""
    shape = (points_per_dim,) * dim
    parts = [VDSF_MAGIC,
             struct.pack("<III", VDSF_VERSION, dim, points_per_dim),
             struct.pack("<d", float(period)),
             struct.pack("<I", len(fields))]
    arrays = []
    for name, arr in fields:
        arr = np.asarray(arr)
        if arr.shape != shape:
            raise ValueError(f"field {name!r} has shape {arr.shape}, expected {shape}")
        if np.iscomplexobj(arr):
            raise ValueError(f"field {name!r} is complex; VDSF stores real fields")
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
        arrays.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    parts.extend(arrays)
    atomic_write_bytes(path, b"".join(parts))


def read_vdsf(path: str):
    """Returns (dim, points_per_dim, period, list of (name, array))."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != VDSF_MAGIC:
        raise ValueError(f"{path}: not a VDSF file (bad magic)")
    off = 4
    version, dim, n = struct.unpack_from("<III", data, off)
    off += 12
    if version != VDSF_VERSION:
        raise ValueError(f"{path}: unsupported VDSF version {version}")
    (period,) = struct.unpack_from("<d", data, off)
    off += 8
    (count,) = struct.unpack_from("<I", data, off)
    off += 4
    names = []
    for _ in range(count):
        (ln,) = struct.unpack_from("<I", data, off)
        off += 4
        names.append(data[off:off + ln].decode("utf-8"))
        off += ln
    size = n ** dim
    fields = []
    for name in names:
        arr = np.frombuffer(data, dtype="<f8", count=size, offset=off)
        off += size * 8
        fields.append((name, arr.reshape((n,) * dim).copy()))
    if off != len(data):
        raise ValueError(f"{path}: {len(data) - off} trailing bytes")
    return dim, n, period, fields


def format_csv(header: Sequence[str], rows: Iterable[Sequence[float]]) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(CSV_FMT % float(v) for v in row))
    return "\n".join(lines) + "\n"


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[float]]) -> None:
    atomic_write_text(path, format_csv(header, rows))


def read_csv(path: str):
    """Returns (header list, rows as a float ndarray)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    header = lines[0].split(",")
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    return header, rows
