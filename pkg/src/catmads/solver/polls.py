"""Categorical and extended polls (the quantitative poll lives with the mesh)."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..distances import ConstraintMapConfig
from ..domain import Domain, Evaluation, Point
from ..neighborhood import Surrogates, build_neighborhood, hamming_neighborhood
from .mesh import MeshState, quant_poll


def cat_poll(incumbent: Point, m: int, models: Surrogates, cfg: ConstraintMapConfig = ConstraintMapConfig(),
             x_is_feasible: bool = True, candidates=None, domain: Optional[Domain] = None,
             objective_distance: str = "kernel", hamming: bool = False) -> list:
    """Points ``(v, incumbent.qnt)`` for the neighborhood of ``incumbent``
    minus its own component, in neighborhood order (at most ``m - 1``)."""
    if hamming or models.objective is None:
        if candidates is None:
            raise ValueError("a candidate list is required without an objective surrogate")
        comps = hamming_neighborhood(incumbent.cat, m, candidates)
    else:
        comps = build_neighborhood(incumbent, m, models, cfg, x_is_feasible=x_is_feasible,
                                   candidates=candidates, domain=domain, objective_distance=objective_distance)
    u = tuple(incumbent.cat)
    return [incumbent.with_cat(v) for v in comps if tuple(v) != u]


def select_near_misses(center: Evaluation, trials: Sequence, xi: float, feasible: bool = True,
                       h_max: float = np.inf, limit: Optional[int] = None) -> list:
    """Categorical-poll points worth an extended poll.

    ``trials`` holds ``(point, evaluation)`` pairs.  Around a feasible
    centre a feasible trial qualifies when ``f < f_c + xi max(1, |f_c|)``;
    around an infeasible centre a trial qualifies when its violation is
    admissible and within a factor ``1 + xi`` of the centre's.
    """
    out = []
    for x, ev in trials:
        if ev.failed:
            continue
        if feasible:
            if ev.feasible and ev.f < center.f + xi * max(1.0, abs(center.f)):
                out.append((ev.f, x, ev))
        elif 0.0 < ev.h <= h_max and ev.h < center.h * (1.0 + xi):
            out.append((ev.h, x, ev))
    out.sort(key=lambda t: t[0])
    return [(x, ev) for _, x, ev in out[:limit]]


def extended_poll(domain: Domain, near_misses: Sequence, mesh: MeshState, budget_left: int,
                  rng: np.random.Generator) -> list:
    """One quantitative poll around each near-miss, at most ``budget_left``
    trials overall."""
    out, seen = [], set()
    for y, _ in near_misses:
        for t in quant_poll(domain, y, mesh, rng):
            k = t.key()
            if k in seen:
                continue
            if len(out) >= budget_left:
                return out
            seen.add(k)
            out.append(t)
    return out
