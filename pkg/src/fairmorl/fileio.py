"""CSV and JSONL helpers shared by the CLI and the experiment driver."""

from __future__ import annotations

import json

import numpy as np


def read_points_csv(path, header: bool = False) -> np.ndarray:
    """Read an (n, d) point matrix: one vector per row, comma separated."""
    try:
        pts = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    except ValueError as exc:
        raise ValueError(f"{path}: could not parse point CSV: {exc}") from None
    if pts.size == 0:
        raise ValueError(f"{path}: no points found")
    if not np.all(np.isfinite(pts)):
        raise ValueError(f"{path}: points must be finite")
    return pts


def write_points_csv(stream, points: np.ndarray, header: bool = False) -> None:
    """Write an (n, d) point matrix as CSV, optionally with a column header."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if header and points.size:
        stream.write(",".join(f"objective_{i}" for i in range(points.shape[1])) + "\n")
    for row in points:
        stream.write(",".join(format(x, ".17g") for x in row) + "\n")


def write_jsonl(stream, records) -> None:
    """Write one JSON object per line (stable key order, as constructed)."""
    for record in records:
        payload = record.to_dict() if hasattr(record, "to_dict") else record
        stream.write(json.dumps(payload) + "\n")
