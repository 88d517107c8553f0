"""Vector dominance relations (Pareto, Lorenz, blended) and front extraction.

All comparisons operate on d-dimensional return vectors with finite entries.
The blended relation interpolates between comparing the cumulative sums of the
ascending-sorted vector (``blend=0``, the Lorenz order) and comparing the
sorted vector itself (``blend=1``), via an elementwise affine mix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PARETO = "pareto"
LORENZ = "lorenz"
LAMBDA_LORENZ = "lambda_lorenz"
RELATIONS = (PARETO, LORENZ, LAMBDA_LORENZ)


def as_vector(values) -> np.ndarray:
    """Validate a return vector: 1-D, length >= 1, all entries finite."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"expected a 1-D vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector entries must be finite")
    return arr


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")


def pareto_dominates(a, b, tol: float = 0.0) -> bool:
    """True iff ``a >= b`` in every component and the vectors differ.

    ``tol`` is an absolute equality tolerance; the default 0.0 gives exact
    floating-point semantics.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_dims(a, b)
    ge = a >= b - tol
    eq = np.abs(a - b) <= tol
    return bool(ge.all() and not eq.all())


def sort_ascending(v) -> np.ndarray:
    """Nondecreasing permutation of ``v`` (stable for equal entries)."""
    return np.sort(np.asarray(v, dtype=float), kind="stable")


def lorenz_vector(v) -> np.ndarray:
    """Cumulative sums of the ascending-sorted vector."""
    return np.cumsum(sort_ascending(v))


def lambda_transform(v, lam: float) -> np.ndarray:
    """Elementwise blend ``lam * sorted(v) + (1 - lam) * lorenz_vector(v)``."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"blend parameter must be in [0, 1], got {lam}")
    s = sort_ascending(v)
    return lam * s + (1.0 - lam) * np.cumsum(s)


def lorenz_dominates(a, b, tol: float = 0.0) -> bool:
    """Pareto dominance of the Lorenz vectors of ``a`` and ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_dims(a, b)
    return pareto_dominates(lorenz_vector(a), lorenz_vector(b), tol=tol)


def lambda_lorenz_dominates(a, b, lam: float, tol: float = 0.0) -> bool:
    """Pareto dominance of the blended transforms of ``a`` and ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_dims(a, b)
    return pareto_dominates(lambda_transform(a, lam), lambda_transform(b, lam), tol=tol)


def dominates(a, b, relation: str = PARETO, lam: float | None = None, tol: float = 0.0) -> bool:
    """Dispatch to the dominance check named by ``relation``."""
    if relation == PARETO:
        return pareto_dominates(a, b, tol=tol)
    if relation == LORENZ:
        return lorenz_dominates(a, b, tol=tol)
    if relation == LAMBDA_LORENZ:
        if lam is None:
            raise ValueError("lam is required for the blended relation")
        return lambda_lorenz_dominates(a, b, lam, tol=tol)
    raise ValueError(f"unknown relation {relation!r}")


def transform_points(points: np.ndarray, relation: str, lam: float | None = None) -> np.ndarray:
    """Row-wise comparison coordinates for ``relation`` (identity for Pareto)."""
    pts = np.asarray(points, dtype=float)
    if relation == PARETO:
        return pts
    s = np.sort(pts, axis=1, kind="stable")
    if relation == LORENZ:
        return np.cumsum(s, axis=1)
    if relation == LAMBDA_LORENZ:
        if lam is None:
            raise ValueError("lam is required for the blended relation")
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"blend parameter must be in [0, 1], got {lam}")
        return lam * s + (1.0 - lam) * np.cumsum(s, axis=1)
    raise ValueError(f"unknown relation {relation!r}")


@dataclass(frozen=True)
class FrontSet:
    """Pairwise non-dominated points under a declared relation."""

    points: np.ndarray  # (n, d)
    relation: str
    lam: float | None = None

    def __len__(self) -> int:
        return len(self.points)


def _as_point_matrix(points) -> np.ndarray:
    if isinstance(points, FrontSet):
        points = points.points
    pts = np.asarray(points, dtype=float)
    if pts.size == 0:
        return pts.reshape(0, pts.shape[1] if pts.ndim == 2 else 0)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    if pts.ndim != 2:
        raise ValueError(f"expected an (n, d) point matrix, got shape {pts.shape}")
    return pts


def extract_front(points, relation: str = PARETO, lam: float | None = None,
                  tol: float = 0.0) -> FrontSet:
    """Points of the input not dominated by any other input point.

    Exact duplicates collapse to the first occurrence; output keeps input
    order. Empty input yields an empty front.
    """
    pts = _as_point_matrix(points)
    if len(pts) == 0:
        return FrontSet(points=pts, relation=relation, lam=lam)
    seen: set[bytes] = set()
    keep = []
    for i, row in enumerate(pts):
        key = row.tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    uniq = pts[keep]
    t = transform_points(uniq, relation, lam)
    # dom[i, j]: point i dominates point j
    ge = t[:, None, :] >= t[None, :, :] - tol
    eq = np.abs(t[:, None, :] - t[None, :, :]) <= tol
    dom = ge.all(axis=2) & ~eq.all(axis=2)
    dominated = dom.any(axis=0)
    return FrontSet(points=uniq[~dominated], relation=relation, lam=lam)


def crowding_distance(points) -> np.ndarray:
    """Per-point NSGA-II crowding score; small values mark crowded regions.

    Boundary points of each objective get +inf; interior points accumulate
    neighbor gaps normalized by the objective's range. An objective whose
    values are all equal contributes 0.
    """
    pts = _as_point_matrix(points)
    n, d = pts.shape
    if n == 0:
        raise ValueError("crowding distance needs at least one point")
    dist = np.zeros(n)
    for m in range(d):
        order = np.argsort(pts[:, m], kind="stable")
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        span = pts[order[-1], m] - pts[order[0], m]
        if span > 0 and n > 2:
            gaps = (pts[order[2:], m] - pts[order[:-2], m]) / span
            dist[order[1:-1]] += gaps
    return dist
