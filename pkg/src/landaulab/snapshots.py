"""Binary snapshot format for distribution fields, with JSON sidecars.

Layout (little-endian): an 8-byte magic, a uint32 format version, uint32 N,
float64 L, float64 time and float64 gamma, followed by N^3 float64 values in
x-fastest row-major order.  An optional ``<file>.json`` sidecar carries
provenance metadata.  Round-trips are bit-exact.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .coefficients import A_CHANNELS, B_CHANNELS, CoefficientFields
from .errors import SnapshotFormatError
from .grid import DistributionState, VelocityGrid

MAGIC = b"VGRSNAP\x00"
VERSION = 1
_HEADER = struct.Struct("<8sIIddd")


def write_snapshot(path, state: DistributionState, gamma: float,
                   metadata: dict | None = None) -> None:
    """Write one distribution snapshot; the sidecar is written when metadata is given."""
    path = Path(path)
    grid = state.grid
    header = _HEADER.pack(MAGIC, VERSION, grid.points_per_axis, grid.half_width,
                          state.time, float(gamma))
    # x-fastest: Fortran raveling of the (x, y, z)-indexed array.
    payload = np.asarray(state.values, dtype="<f8").ravel(order="F").tobytes()
    path.write_bytes(header + payload)
    if metadata is not None:
        sidecar = dict(metadata)
        sidecar.setdefault("format_version", VERSION)
        sidecar.setdefault("N", grid.points_per_axis)
        sidecar.setdefault("L", grid.half_width)
        sidecar.setdefault("time", state.time)
        sidecar.setdefault("gamma", float(gamma))
        Path(str(path) + ".json").write_text(
            json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
        )


def read_snapshot(path) -> tuple[DistributionState, float, dict | None]:
    """Read a snapshot back as (state, gamma, sidecar-metadata-or-None)."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise SnapshotFormatError(f"{path}: truncated header")
    magic, version, n, half_width, time, gamma = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotFormatError(
            f"{path}: format version {version} not supported (expected {VERSION})"
        )
    expected = _HEADER.size + 8 * n**3
    if len(raw) != expected:
        raise SnapshotFormatError(
            f"{path}: payload has {len(raw) - _HEADER.size} bytes, expected {8 * n**3}"
        )
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(
        (n, n, n), order="F"
    )
    grid = VelocityGrid(half_width, n)
    state = DistributionState(grid, values.astype(np.float64), time)
    sidecar_path = Path(str(path) + ".json")
    metadata = None
    if sidecar_path.exists():
        metadata = json.loads(sidecar_path.read_text())
    return state, gamma, metadata


def export_coefficient_fields(directory, fields: CoefficientFields,
                              metadata: dict | None = None) -> list:
    """Write every coefficient channel as a tagged snapshot; returns the paths.

    Channel values are signed, so they are shifted through the plain payload
    writer without the nonnegativity validation applied to distributions.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    base_meta = dict(metadata or {})
    paths = []
    channels = {}
    order = (((0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)))
    for name, (i, j) in zip(A_CHANNELS, order):
        channels[name] = fields.abar[..., i, j]
    for axis, name in enumerate(B_CHANNELS):
        channels[name] = fields.bbar[..., axis]
    channels["c"] = fields.cbar
    for name, values in channels.items():
        path = directory / f"coeff_{name}.snap"
        _write_raw_field(path, fields.grid, values, fields.time, fields.gamma,
                         {**base_meta, "channel": name})
        paths.append(path)
    return paths


def export_collision_output(path, output, gamma: float,
                            metadata: dict | None = None) -> None:
    """Write a collision-rate field with its form tag in the sidecar."""
    meta = dict(metadata or {})
    meta["form"] = output.form
    _write_raw_field(Path(path), output.grid, output.values, output.time, gamma, meta)


def _write_raw_field(path: Path, grid: VelocityGrid, values: np.ndarray,
                     time: float, gamma: float, metadata: dict) -> None:
    header = _HEADER.pack(MAGIC, VERSION, grid.points_per_axis, grid.half_width,
                          time, float(gamma))
    payload = np.asarray(values, dtype="<f8").ravel(order="F").tobytes()
    path.write_bytes(header + payload)
    sidecar = dict(metadata)
    sidecar.setdefault("format_version", VERSION)
    sidecar.setdefault("N", grid.points_per_axis)
    sidecar.setdefault("L", grid.half_width)
    sidecar.setdefault("time", time)
    sidecar.setdefault("gamma", float(gamma))
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def read_raw_field(path) -> tuple[VelocityGrid, np.ndarray, float, float, dict | None]:
    """Read any channel snapshot without the distribution validation."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise SnapshotFormatError(f"{path}: truncated header")
    magic, version, n, half_width, time, gamma = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotFormatError(
            f"{path}: format version {version} not supported (expected {VERSION})"
        )
    values = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(
        (n, n, n), order="F"
    ).astype(np.float64)
    grid = VelocityGrid(half_width, n)
    sidecar_path = Path(str(path) + ".json")
    metadata = json.loads(sidecar_path.read_text()) if sidecar_path.exists() else None
    return grid, values, time, gamma, metadata
