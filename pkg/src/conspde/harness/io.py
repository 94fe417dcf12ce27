"""Report, CSV and snapshot persistence."""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

_SNAP_HEADER = struct.Struct("<IIQQ")


def digest(arr) -> str:
    """SHA-256 of the little-endian float64 bytes of ``arr``."""
    a = np.ascontiguousarray(np.asarray(arr, dtype="<f8"))
    return hashlib.sha256(a.tobytes()).hexdigest()


def write_csv(path: Path, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    rows = np.column_stack([np.asarray(columns[k], dtype=float) for k in names])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def read_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        names = next(r)
        data = np.array([[float(v) for v in row] for row in r])
    return {k: data[:, i] for i, k in enumerate(names)}


def write_snapshots(path: Path, times: np.ndarray, states: np.ndarray) -> None:
    """Binary snapshots: header ``{dim, n, n_saves, reserved}`` then ``(time, cells...)`` per save."""
    dim = states.ndim - 1
    n = states.shape[1]
    with open(path, "wb") as fh:
        fh.write(_SNAP_HEADER.pack(dim, n, states.shape[0], 0))
        for t, s in zip(times, states):
            fh.write(np.float64(t).astype("<f8").tobytes())
            fh.write(np.ascontiguousarray(s, dtype="<f8").tobytes())


def read_snapshots(path: Path) -> tuple[np.ndarray, np.ndarray]:
    raw = Path(path).read_bytes()
    dim, n, count, _ = _SNAP_HEADER.unpack_from(raw, 0)
    cells = n**dim
    rec = np.frombuffer(raw, dtype="<f8", offset=_SNAP_HEADER.size).reshape(count, 1 + cells)
    return rec[:, 0].copy(), rec[:, 1:].reshape((count,) + (n,) * dim).copy()


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def write_report(path: Path, report: dict) -> None:
    Path(path).write_text(json.dumps(report, indent=2, default=_default))


def read_report(path: Path) -> dict:
    return json.loads(Path(path).read_text())
