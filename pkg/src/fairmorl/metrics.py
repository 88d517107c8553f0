"""Quality indicators for sets of policy return vectors.

Hypervolume is computed exactly by recursive slicing with dominated-point
pruning; expected utility uses an equidistant simplex-lattice weight grid;
the welfare indicators (Gini, Sen welfare, total efficiency) score a single
return vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .dominance import FrontSet, PARETO, _as_point_matrix, extract_front


@dataclass
class MetricsRecord:
    """One evaluation snapshot of a policy-value front.

    The welfare fields are None when the front contains negative entries
    (the Gini index is only defined for nonnegative vectors).
    """

    hypervolume: float
    eum: float
    sen_welfare: float | None
    gini: float | None
    total_efficiency: float
    mean_sen_welfare: float | None
    step: int

    def to_dict(self) -> dict:
        return asdict(self)


def hypervolume(front, ref) -> float:
    """Volume of the union of boxes spanned by ``ref`` and each front point.

    Points that do not strictly exceed ``ref`` in every objective span an
    empty box and contribute nothing. Empty fronts have volume 0.
    """
    pts = _as_point_matrix(front)
    ref = np.asarray(ref, dtype=float)
    if ref.ndim != 1:
        raise ValueError(f"reference point must be 1-D, got shape {ref.shape}")
    if len(pts) == 0:
        return 0.0
    if pts.shape[1] != ref.size:
        raise ValueError(f"dimension mismatch: points are {pts.shape[1]}-D, ref is {ref.size}-D")
    pts = pts[np.all(pts > ref, axis=1)]
    if len(pts) == 0:
        return 0.0
    pts = extract_front(pts, PARETO).points
    if len(pts) == 1:
        return float(np.prod(pts[0] - ref))
    if len(pts) == 2:
        return _hv_two_points(pts, ref)
    if pts.shape[1] == 2:
        return _hv_2d(pts, ref)
    return _hv_recursive(pts, ref)


def _hv_two_points(pts: np.ndarray, ref: np.ndarray) -> float:
    # Literal inclusion-exclusion; the intersection box clips at ref.
    inter = np.maximum(np.minimum(pts[0], pts[1]), ref)
    return float(np.prod(pts[0] - ref) + np.prod(pts[1] - ref) - np.prod(inter - ref))


def _hv_2d(pts: np.ndarray, ref: np.ndarray) -> float:
    # Non-dominated 2-D points sorted by x descending have y ascending.
    order = np.argsort(-pts[:, 0], kind="stable")
    pts = pts[order]
    total = 0.0
    for i in range(len(pts)):
        x_next = pts[i + 1, 0] if i + 1 < len(pts) else ref[0]
        total += (pts[i, 0] - x_next) * (pts[i, 1] - ref[1])
    return float(total)


def _hv_recursive(pts: np.ndarray, ref: np.ndarray) -> float:
    # Exclusive-contribution recursion: each point contributes its own box
    # minus the volume the remaining points cover inside that box.
    if len(pts) == 1:
        return float(np.prod(pts[0] - ref))
    order = np.argsort(-pts[:, 0], kind="stable")
    pts = pts[order]
    total = 0.0
    for i, p in enumerate(pts):
        vol = float(np.prod(p - ref))
        rest = pts[i + 1:]
        if len(rest):
            limited = np.minimum(rest, p)
            limited = limited[np.all(limited > ref, axis=1)]
            if len(limited):
                limited = extract_front(limited, PARETO).points
                vol -= _hv_recursive(limited, ref)
        total += vol
    return total


def generate_equidistant_weights(d: int, n: int) -> np.ndarray:
    """Simplex-lattice grid of at most ``n`` weight vectors in dimension ``d``.

    Uses the densest lattice resolution H whose composition count fits in
    ``n``; rows are emitted in lexicographic order and each sums to 1.
    """
    if d < 2:
        raise ValueError(f"need at least 2 objectives, got {d}")
    if n < d:
        raise ValueError(f"need n >= d, got n={n}, d={d}")
    h = 1
    while math.comb(h + d, d - 1) <= n:
        h += 1
    rows = [comp for comp in _compositions(h, d)]
    return np.asarray(rows, dtype=float) / h


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def eum(front, n_weights: int) -> float:
    """Mean over equidistant weight vectors of the best linear utility.

    Implemented as the literal double loop in plain float arithmetic so that
    results are reproducible to the last bit.
    """
    pts = _as_point_matrix(front)
    if len(pts) == 0:
        raise ValueError("expected utility of an empty front is undefined")
    if n_weights < 1:
        raise ValueError(f"need at least one weight vector, got {n_weights}")
    d = pts.shape[1]
    weights = generate_equidistant_weights(d, n_weights)
    rows = [[float(x) for x in p] for p in pts]
    best_utils = []
    for w in weights:
        wl = [float(x) for x in w]
        best = max(sum(wi * vi for wi, vi in zip(wl, row)) for row in rows)
        best_utils.append(best)
    return sum(best_utils) / len(best_utils)


def gini_index(v) -> float:
    """Normalized mean absolute difference of the entries; 0 means equality.

    Computed through the sorted form ``sum_i (2i - 1 - d) v_(i) / (d sum(v))``,
    which equals the pairwise-difference definition and is exactly invariant
    to permuting the entries. Requires nonnegative entries; an all-zero
    vector scores 0 by convention.
    """
    v = np.asarray(v, dtype=float)
    if np.any(v < 0):
        raise ValueError("Gini index requires nonnegative entries")
    ranked = np.sort(v, kind="stable")
    total = ranked.sum()
    if total == 0:
        return 0.0
    d = v.size
    coeff = 2.0 * np.arange(1, d + 1) - 1.0 - d
    return float((coeff * ranked).sum() / (d * total))


def total_efficiency(v) -> float:
    """Sum of the vector's entries."""
    return float(np.asarray(v, dtype=float).sum())


def sen_welfare(v) -> float:
    """Total efficiency discounted by inequality: ``sum(v) * (1 - gini(v))``."""
    return total_efficiency(v) * (1.0 - gini_index(v))


def set_sen_welfare(front) -> float:
    """Best Sen welfare over the front's points."""
    pts = _as_point_matrix(front)
    if len(pts) == 0:
        raise ValueError("Sen welfare of an empty front is undefined")
    return max(sen_welfare(p) for p in pts)


def front_metrics(front, ref, n_weights: int, step: int = 0) -> MetricsRecord:
    """Score a front: hypervolume, expected utility, and welfare indicators.

    The Gini and total-efficiency entries describe the front point with the
    best Sen welfare; the mean over all front points is logged alongside.
    """
    pts = _as_point_matrix(front)
    if len(pts) == 0:
        raise ValueError("cannot score an empty front")
    if np.all(pts >= 0):
        welfare = np.asarray([sen_welfare(p) for p in pts])
        best = int(np.argmax(welfare))
        best_sw = float(welfare[best])
        best_gini = gini_index(pts[best])
        efficiency = total_efficiency(pts[best])
        mean_sw = float(welfare.mean())
    else:
        best_sw = best_gini = mean_sw = None
        efficiency = max(total_efficiency(p) for p in pts)
    return MetricsRecord(
        hypervolume=hypervolume(pts, ref),
        eum=eum(pts, n_weights),
        sen_welfare=best_sw,
        gini=best_gini,
        total_efficiency=efficiency,
        mean_sen_welfare=mean_sw,
        step=step,
    )
