"""Binary snapshot format for exact restarts.

Layout (little endian):
  magic   4s   b"AXNS"
  version u32  format version, currently 1
  Nr, Nz  u32
  R, a, nu, t  f64
  payload      v_r, v_phi, v_z, p as row-major float64, in that order

Round trips are bit exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .fields import VelocityField
from .grid import CylinderDomain, Grid, build_grid

__all__ = ["write_snapshot", "read_snapshot", "SnapshotError"]

MAGIC = b"AXNS"
VERSION = 1
_HEADER = struct.Struct("<4sIII4d")


class SnapshotError(ValueError):
    pass


def write_snapshot(path, v: VelocityField) -> None:
    grid = v.grid
    dom = grid.domain
    header = _HEADER.pack(MAGIC, VERSION, grid.Nr, grid.Nz, dom.R, dom.a, dom.nu, v.t)
    with open(path, "wb") as fh:
        fh.write(header)
        for arr in (v.v_r, v.v_phi, v.v_z, v.p):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_snapshot(path, grid: Grid | None = None) -> VelocityField:
    """Load a snapshot; grid, when given, must match the stored header."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise SnapshotError(f"{path}: truncated header")
    magic, version, Nr, Nz, R, a, nu, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotError(f"{path}: not a snapshot file")
    if version != VERSION:
        raise SnapshotError(f"{path}: unsupported format version {version}")
    need = _HEADER.size + 4 * Nr * Nz * 8
    if len(raw) != need:
        raise SnapshotError(f"{path}: payload size {len(raw)} != expected {need}")
    if grid is None:
        grid = build_grid(CylinderDomain(R=R, a=a, nu=nu), Nr, Nz)
    else:
        dom = grid.domain
        if (grid.Nr, grid.Nz) != (Nr, Nz) or (dom.R, dom.a, dom.nu) != (R, a, nu):
            raise SnapshotError(f"{path}: header does not match the provided grid")
    offset = _HEADER.size
    arrays = []
    for _ in range(4):
        block = np.frombuffer(raw, dtype="<f8", count=Nr * Nz, offset=offset)
        arrays.append(block.reshape(Nr, Nz).copy())
        offset += Nr * Nz * 8
    return VelocityField(grid, *arrays, t=t)
