"""GridFunction snapshots as CSV or a compact binary layout.

Binary layout (all little-endian):
    4 bytes magic b"HJGF", uint32 version, uint32 ndim,
    per axis: float64 min, float64 max, uint32 n, uint32 boundary (0 extrapolate, 1 periodic),
    float64 t, then prod(n) float64 values in row-major order.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .grid import BOUNDARIES, Axis, Grid, GridFunction

MAGIC = b"HJGF"
VERSION = 1
_AXIS = struct.Struct("<ddII")


def to_bytes(gf: GridFunction) -> bytes:
    parts = [MAGIC, struct.pack("<II", VERSION, gf.grid.ndim)]
    for a in gf.grid.axes:
        parts.append(_AXIS.pack(a.lo, a.hi, a.n, BOUNDARIES.index(a.boundary)))
    parts.append(struct.pack("<d", gf.t))
    parts.append(np.ascontiguousarray(gf.values, dtype="<f8").tobytes(order="C"))
    return b"".join(parts)


def from_bytes(data: bytes) -> GridFunction:
    if data[:4] != MAGIC:
        raise ValueError("not a grid function snapshot")
    version, ndim = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    off = 12
    axes = []
    for _ in range(ndim):
        lo, hi, n, b = _AXIS.unpack_from(data, off)
        off += _AXIS.size
        axes.append(Axis(lo, hi, n, BOUNDARIES[b]))
    (t,) = struct.unpack_from("<d", data, off)
    off += 8
    grid = Grid(tuple(axes))
    values = np.frombuffer(data, dtype="<f8", count=grid.size, offset=off)
    if off + 8 * grid.size != len(data):
        raise ValueError("snapshot length does not match its header")
    return GridFunction(grid, values.astype(float).reshape(grid.shape), t)


def write_binary(gf: GridFunction, path) -> None:
    Path(path).write_bytes(to_bytes(gf))


def read_binary(path) -> GridFunction:
    return from_bytes(Path(path).read_bytes())


def write_csv(gf: GridFunction, path) -> None:
    """One row per node: coordinates x0..x{d-1} then value, row-major order."""
    d = gf.grid.ndim
    rows = np.column_stack([gf.grid.mesh.reshape(-1, d), gf.flat])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(d)] + ["value"])
        for r in rows:
            w.writerow([repr(float(v)) for v in r])
