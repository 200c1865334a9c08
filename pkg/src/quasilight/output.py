"""CSV and binary field writers.

CSV: header row, '.' decimals, '\\n' line ends, 17 significant digits so every
float64 round-trips.  Binary fields (QLF1): a 32-byte little-endian header
``magic, 4 pad bytes, Nx (u64), Ny (u64), z (f64)`` followed by ``Nx*Ny``
complex samples stored as interleaved float64 (re, im), row-major with x the
slow index.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .paraxial import TransverseField, TransverseGrid

QLF_MAGIC = b"QLF1"
_QLF_HEADER = struct.Struct("<4s4xQQd")


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return "%.17g" % float(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])
    return path


def read_csv(path):
    """Header and float rows of a CSV written by :func:`write_csv`."""
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, np.array([[float(x) for x in row] for row in r])


def write_field_csv(path, f: TransverseField) -> Path:
    X, Y = f.grid.mesh()
    rows = zip(X.ravel(), Y.ravel(), f.amps.real.ravel(), f.amps.imag.ravel())
    return write_csv(path, ["x", "y", "re", "im"], rows)


def write_qlf(path, f: TransverseField) -> Path:
    path = Path(path)
    g = f.grid
    with path.open("wb") as fh:
        fh.write(_QLF_HEADER.pack(QLF_MAGIC, g.Nx, g.Ny, float(f.z)))
        fh.write(np.ascontiguousarray(f.amps, dtype="<c16").tobytes())
    return path


def read_qlf(path, grid: TransverseGrid | None = None):
    """Read a QLF1 file.

    Returns a :class:`TransverseField` when ``grid`` is given (its sizes must
    match), otherwise ``(amps, z)``.
    """
    data = Path(path).read_bytes()
    if len(data) < _QLF_HEADER.size:
        raise ValueError("file too short for a QLF1 header")
    magic, nx, ny, z = _QLF_HEADER.unpack_from(data)
    if magic != QLF_MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {QLF_MAGIC!r}")
    expected = _QLF_HEADER.size + 16 * nx * ny
    if len(data) != expected:
        raise ValueError(f"QLF1 payload has {len(data)} bytes, expected {expected}")
    amps = np.frombuffer(data, dtype="<c16", offset=_QLF_HEADER.size).reshape(nx, ny).astype(complex)
    if grid is None:
        return amps, z
    if (grid.Nx, grid.Ny) != (nx, ny):
        raise ValueError(f"grid is {grid.Nx}x{grid.Ny} but file holds {nx}x{ny}")
    return TransverseField(grid, amps, z)
