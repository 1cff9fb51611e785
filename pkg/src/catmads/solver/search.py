"""Surrogate search step: expected improvement times probability of feasibility."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy.special import ndtr

from ..domain import Domain, Point, points_to_arrays
from .doe import random_points
from .mesh import MeshState, snap_to_mesh


def expected_improvement(mean, var, f_best: float) -> np.ndarray:
    mean = np.asarray(mean, dtype=float)
    sd = np.sqrt(np.maximum(var, 0.0))
    out = np.zeros_like(mean)
    ok = sd > 1e-12
    z = (f_best - mean[ok]) / sd[ok]
    out[ok] = (f_best - mean[ok]) * ndtr(z) + sd[ok] * np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    return np.maximum(out, 0.0)


def probability_feasible(means, vars_) -> np.ndarray:
    """Product over constraints of ``P[g_j <= 0]``; a zero variance gives 0 or 1."""
    pof = None
    for mu, var in zip(means, vars_):
        sd = np.sqrt(np.maximum(var, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            pj = np.where(sd > 1e-12, ndtr(-mu / np.where(sd > 0, sd, 1.0)), (mu <= 0).astype(float))
        pof = pj if pof is None else pof * pj
    return pof


def search_candidates(domain: Domain, center: Point, mesh: MeshState, rng: np.random.Generator, n: int) -> list:
    """Half uniform over the domain, half within two frames of ``center``
    (mostly keeping its component); all snapped to the mesh at ``center``."""
    n_glob = n // 2
    n_loc = n - n_glob
    pts = random_points(domain, n_glob, rng)
    c = np.asarray(center.qnt, dtype=float)
    if domain.n_qnt:
        radius = 2.0 * mesh.Delta * mesh.scale
        loc = c + rng.uniform(-1.0, 1.0, (n_loc, domain.n_qnt)) * radius
    else:
        loc = np.zeros((n_loc, 0))
    glob_qnt = np.array([p.qnt for p in pts], dtype=float).reshape(n_glob, domain.n_qnt)
    qnt_all = np.vstack([glob_qnt, loc])
    if domain.n_qnt:
        qnt_all = snap_to_mesh(domain, mesh, c, qnt_all)
    cats = [p.cat for p in pts]
    for k in range(n_loc):
        if domain.n_cat and rng.random() < 0.25:
            cats.append(tuple(int(rng.integers(K)) for K in domain.n_categories))
        else:
            cats.append(tuple(center.cat))
    return [domain.point_from_qnt(cats[k], qnt_all[k]) for k in range(n)]


def score_candidates(domain: Domain, points, models, f_best: Optional[float], f_anchor: float):
    """Return sort keys (larger is better).

    With a feasible incumbent: EI(f_best) * PoF.  Without one, PoF comes
    first and EI anchored at the lowest observed objective breaks ties.
    """
    cat, qnt = points_to_arrays(domain, points)
    mean, var = models.objective.predict_arrays(cat, qnt)
    cons = [m.predict_arrays(cat, qnt) for m in models.constraints]
    pof = probability_feasible([c[0] for c in cons], [c[1] for c in cons]) if cons else np.ones(len(points))
    if f_best is not None and math.isfinite(f_best):
        return (expected_improvement(mean, var, f_best) * pof,)
    return (pof, expected_improvement(mean, var, f_anchor))


def search_step_bo(domain: Domain, center: Point, models, mesh: MeshState, rng: np.random.Generator,
                   f_best: Optional[float], f_anchor: float, seen, n_candidates: int = 200) -> Optional[Point]:
    """Best-scoring unevaluated candidate, or ``None``."""
    if models.objective is None or (models.n_constraints and len(models.constraints) != models.n_constraints):
        return None
    cands, keys = [], set()
    for p in search_candidates(domain, center, mesh, rng, n_candidates):
        k = p.key()
        if k not in seen and k not in keys:
            keys.add(k)
            cands.append(p)
    if not cands:
        return None
    score = score_candidates(domain, cands, models, f_best, f_anchor)
    order = np.lexsort(tuple(reversed([-s for s in score])))
    best = int(order[0])
    if score[0][best] <= 0.0 and (len(score) == 1 or score[1][best] <= 0.0):
        return None
    return cands[best]
