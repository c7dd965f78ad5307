"""Field snapshots: a one-line JSON header followed by raw float64 samples.

The header records grid size, time, field names and byte layout; the payload
is the concatenated physical-space samples of each field, little-endian f64,
row-major with x as the slow axis.  The byte round trip is exact: reading
returns arrays bit-identical to the ones written.  Writes are atomic
(temporary file + rename).
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from .spectral import Grid, SpectralField
from .stepper import State

__all__ = ["SNAPSHOT_VERSION", "SnapshotError", "SnapshotData",
           "write_snapshot", "read_snapshot", "state_from_snapshot"]

SNAPSHOT_VERSION = 1


class SnapshotError(ValueError):
    """Raised for malformed snapshot files."""


@dataclass(frozen=True)
class SnapshotData:
    """Decoded snapshot: header fields plus the per-field sample arrays."""

    nx: int
    ny: int
    time: float
    fields: Mapping[str, np.ndarray]


def write_snapshot(path: Union[str, Path], state: State,
                   extra_fields: Mapping[str, np.ndarray] | None = None) -> None:
    """Persist the physical-space samples of a state (omega, theta and any
    extra named arrays of the same shape)."""
    g = state.grid
    fields: dict[str, np.ndarray] = {
        "omega": state.omega.to_physical(),
        "theta": state.theta.to_physical(),
    }
    for name, arr in (extra_fields or {}).items():
        arr = np.asarray(arr, dtype=np.float64)
        if arr.shape != g.shape:
            raise ValueError(f"extra field {name!r} has shape {arr.shape}, expected {g.shape}")
        fields[name] = arr
    header = {
        "version": SNAPSHOT_VERSION,
        "nx": g.nx,
        "ny": g.ny,
        "time": state.t,
        "fields": list(fields),
        "dtype": "f64",
        "endianness": "little",
        "layout": "row-major, x-major",
    }
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
            for name in fields:
                fh.write(np.ascontiguousarray(fields[name], dtype="<f8").tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_snapshot(path: Union[str, Path]) -> SnapshotData:
    """Decode a snapshot file, validating the payload length."""
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    try:
        header = json.loads(header_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SnapshotError(f"{path}: unreadable snapshot header: {exc}") from exc
    version = header.get("version")
    if version != SNAPSHOT_VERSION:
        raise SnapshotError(
            f"{path}: unsupported snapshot version {version!r} "
            f"(this reader handles {SNAPSHOT_VERSION})"
        )
    for key in ("nx", "ny", "time", "fields"):
        if key not in header:
            raise SnapshotError(f"{path}: snapshot header is missing {key!r}")
    nx, ny = int(header["nx"]), int(header["ny"])
    names = list(header["fields"])
    expected = 8 * nx * ny * len(names)
    if len(payload) != expected:
        raise SnapshotError(
            f"{path}: payload is {len(payload)} bytes, expected {expected} "
            f"({len(names)} field(s) of {nx}x{ny} f64)"
        )
    per = 8 * nx * ny
    fields = {}
    for i, name in enumerate(names):
        chunk = payload[i * per:(i + 1) * per]
        fields[name] = np.frombuffer(chunk, dtype="<f8").reshape(nx, ny).copy()
    return SnapshotData(nx=nx, ny=ny, time=float(header["time"]), fields=fields)


def state_from_snapshot(snap: SnapshotData) -> State:
    """Rebuild a solver state from a decoded snapshot."""
    for name in ("omega", "theta"):
        if name not in snap.fields:
            raise SnapshotError(f"snapshot lacks the {name!r} field")
    grid = Grid(snap.nx, snap.ny)
    return State(
        SpectralField.from_physical(grid, snap.fields["omega"]),
        SpectralField.from_physical(grid, snap.fields["theta"]),
        snap.time,
    )
