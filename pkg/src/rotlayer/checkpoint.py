"""Bit-exact binary checkpoints, monitor CSV output, and run manifests.

Checkpoint format "NSCF1": magic bytes ``NSCF1\\x00\\x00\\x00``, then a
little-endian header (u32 Nx, u32 Ny, u32 Nz, f64 L, f64 time,
f64 Omega, u32 ncomponents), then for each component the complex
coefficients as interleaved f64 (re, im) in row-major (m1, m2, n)
order with FFT-standard frequency ordering.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct

import numpy as np

from rotlayer.spectral import Grid, SpectralVectorField

__all__ = [
    "MAGIC",
    "write_checkpoint",
    "read_checkpoint",
    "write_monitors_csv",
    "file_sha256",
    "write_manifest",
]

MAGIC = b"NSCF1\x00\x00\x00"
_HEADER = struct.Struct("<IIIdddI")


def _atomic_write(path, payload: bytes):
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as handle:
        handle.write(payload)
    os.replace(tmp, path)


def write_checkpoint(path, u: SpectralVectorField, t: float, Omega: float):
    """Serialize a spectral vector field with its time and rotation rate."""
    grid = u.grid
    ncomp = u.coeffs.shape[0]
    parts = [MAGIC, _HEADER.pack(grid.nx, grid.ny, grid.nz, grid.box, t, Omega, ncomp)]
    for i in range(ncomp):
        component = np.ascontiguousarray(u.coeffs[i], dtype="<c16")
        parts.append(component.tobytes())
    _atomic_write(path, b"".join(parts))


def read_checkpoint(path):
    """Read an NSCF1 file; returns (field, time, Omega)."""
    with open(path, "rb") as handle:
        blob = handle.read()
    if blob[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not an NSCF1 checkpoint")
    nx, ny, nz, box, t, Omega, ncomp = _HEADER.unpack_from(blob, len(MAGIC))
    grid = Grid(int(nx), int(ny), int(nz), float(box))
    offset = len(MAGIC) + _HEADER.size
    per_comp = nx * ny * nz * 16
    expected = offset + ncomp * per_comp
    if len(blob) != expected:
        raise ValueError(
            f"{path}: truncated checkpoint ({len(blob)} bytes, expected {expected})"
        )
    comps = []
    for i in range(ncomp):
        flat = np.frombuffer(blob, dtype="<c16", count=nx * ny * nz, offset=offset)
        comps.append(flat.reshape(nx, ny, nz))
        offset += per_comp
    coeffs = np.stack([c.astype(np.complex128) for c in comps])
    return SpectralVectorField(grid, coeffs), float(t), float(Omega)


def write_monitors_csv(path, rows, fieldnames):
    """Write monitor rows as CSV with deterministic float formatting."""
    lines = [",".join(fieldnames)]
    for row in rows:
        lines.append(",".join(_format_cell(row.get(name)) for name in fieldnames))
    _atomic_write(path, ("\n".join(lines) + "\n").encode())


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return repr(float(value))


def read_csv_rows(path):
    """Read a CSV written by write_monitors_csv back into dict rows."""
    with open(path, "r") as handle:
        lines = [line.rstrip("\n") for line in handle if line.strip()]
    names = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        rows.append(
            {name: (float(cell) if cell else None) for name, cell in zip(names, cells)}
        )
    return rows


def file_sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(directory, filenames):
    """Hash the named output files into manifest.json; returns the mapping."""
    entries = {
        name: file_sha256(os.path.join(directory, name)) for name in sorted(filenames)
    }
    payload = json.dumps(entries, indent=2, sort_keys=True) + "\n"
    _atomic_write(os.path.join(directory, "manifest.json"), payload.encode())
    return entries
