"""Independent brute-force reference implementations used only by tests.

These deliberately avoid the library's vectorized code paths: dominance is
re-derived from the definitions with per-pair arithmetic, and fronts come
from a plain double loop.
"""

import numpy as np


def oracle_sorted(v):
    return sorted(float(x) for x in v)


def oracle_lorenz(v):
    out, acc = [], 0.0
    for x in oracle_sorted(v):
        acc += x
        out.append(acc)
    return out


def oracle_blend(v, lam):
    s = oracle_sorted(v)
    cum = oracle_lorenz(v)
    return [lam * si + (1.0 - lam) * ci for si, ci in zip(s, cum)]


def oracle_pareto_dominates(a, b):
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    return all(x >= y for x, y in zip(a, b)) and any(x != y for x, y in zip(a, b))


def oracle_dominates(a, b, relation, lam=None):
    if relation == "pareto":
        return oracle_pareto_dominates(a, b)
    if relation == "lorenz":
        return oracle_pareto_dominates(oracle_lorenz(a), oracle_lorenz(b))
    if relation == "lambda_lorenz":
        return oracle_pareto_dominates(oracle_blend(a, lam), oracle_blend(b, lam))
    raise ValueError(relation)


def oracle_front(points, relation, lam=None):
    """O(n^2) sweep keeping first representatives of duplicates."""
    pts = [tuple(float(x) for x in p) for p in points]
    kept = []
    for i, p in enumerate(pts):
        if p in pts[:i]:
            continue
        if any(q != p and oracle_dominates(q, p, relation, lam) for q in pts):
            continue
        kept.append(p)
    return kept


def oracle_hypervolume_mc(points, ref, n_samples, seed):
    """Monte-Carlo box-coverage estimate of the dominated volume."""
    pts = np.asarray(points, dtype=float)
    ref = np.asarray(ref, dtype=float)
    upper = pts.max(axis=0)
    box = np.prod(upper - ref)
    if box <= 0:
        return 0.0
    rng = np.random.default_rng(seed)
    samples = rng.uniform(ref, upper, size=(n_samples, ref.size))
    covered = np.zeros(n_samples, dtype=bool)
    for p in pts:
        covered |= np.all(samples <= p, axis=1)
    return float(box * covered.mean())


def oracle_eum(points, weights):
    best_values = []
    for w in weights:
        wl = [float(x) for x in w]
        best = max(sum(wi * vi for wi, vi in zip(wl, [float(x) for x in p]))
                   for p in points)
        best_values.append(best)
    return sum(best_values) / len(best_values)
