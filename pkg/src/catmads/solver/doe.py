from __future__ import annotations

import numpy as np

from ..domain import Domain, Point


def lhs_unit(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Latin hypercube in ``[0, 1)^d``: one sample per stratum per axis."""
    perms = np.argsort(rng.random((d, n)), axis=1).T
    return (perms + rng.random((n, d))) / n


def lhs_doe(domain: Domain, n: int, rng: np.random.Generator) -> list:
    """``n`` distinct-as-possible mixed points.

    Every axis (categorical ones included) is stratified: category ``k`` of a
    variable with ``K`` values receives ``n/K`` points up to rounding.
    Integers are stratified over ``ub - lb + 1`` values the same way.
    """
    d = domain.n_cat + domain.n_qnt
    u = lhs_unit(n, d, rng)
    cats = np.zeros((n, domain.n_cat), dtype=int)
    for i, K in enumerate(domain.n_categories):
        cats[:, i] = np.minimum((u[:, i] * K).astype(int), K - 1)
    lo, hi = domain.qnt_lower, domain.qnt_upper
    is_int = domain.is_integer_qnt
    uq = u[:, domain.n_cat:]
    qnt = lo + uq * (hi - lo)
    if is_int.any():
        width = hi[is_int] - lo[is_int] + 1
        qnt[:, is_int] = lo[is_int] + np.minimum(np.floor(uq[:, is_int] * width), width - 1)
    return [domain.point_from_qnt(tuple(int(c) for c in cats[k]), qnt[k]) for k in range(n)]


def random_points(domain: Domain, n: int, rng: np.random.Generator) -> list:
    cats = [rng.integers(0, K, size=n) for K in domain.n_categories]
    lo, hi = domain.qnt_lower, domain.qnt_upper
    qnt = lo + rng.random((n, domain.n_qnt)) * (hi - lo)
    is_int = domain.is_integer_qnt
    qnt[:, is_int] = np.round(qnt[:, is_int])
    return [domain.point_from_qnt(tuple(int(c[k]) for c in cats), qnt[k]) for k in range(n)]
