"""Surrogate-based categorical neighborhoods.

Candidates are ranked at an incumbent ``u`` with a primary and a secondary
ranking function built from ``d_f`` and ``d_g``; which one is primary
depends on whether the incumbent is feasible.  The partial order induced by
dominance in the (primary, secondary) plane is made total in four tiers:

0. the incumbent itself;
1. components not dominated by any other candidate, by primary value;
2. dominated components with a zero primary value, by secondary value;
3. everything else, by primary value.

Remaining exact ties are broken by the component indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .distances import ConstraintMap, ConstraintMapConfig, d_f_many
from .domain import Domain, Point, enumerate_components, DEFAULT_ENUMERATION_CAP

TIER_INCUMBENT = "incumbent"
TIER_PARETO = "pareto"
TIER_ZERO = "zero_primary"
TIER_REST = "rest"
_TIER_RANK = {TIER_INCUMBENT: 0, TIER_PARETO: 1, TIER_ZERO: 2, TIER_REST: 3}


@dataclass
class Surrogates:
    """Objective GP (optional) and one GP per constraint."""

    objective: Optional[object] = None
    constraints: list = field(default_factory=list)
    n_constraints: int = 0

    @property
    def complete(self) -> bool:
        return self.objective is not None and len(self.constraints) == self.n_constraints


@dataclass(frozen=True)
class RankedComponent:
    component: tuple
    p: float
    s: float
    tier: str
    order_key: tuple


def dominates(a, b) -> bool:
    """Pareto dominance of ``a = (p, s)`` over ``b`` (minimisation)."""
    return a[0] <= b[0] and a[1] <= b[1] and (a[0] < b[0] or a[1] < b[1])


class RankingFunctions:
    """Primary and secondary ranking values of every candidate at ``u``."""

    def __init__(self, u, candidates, p_values, s_values, d_f_values, d_g_values, feasible: bool):
        self.u = tuple(u)
        self.candidates = [tuple(c) for c in candidates]
        self.index = {c: i for i, c in enumerate(self.candidates)}
        self.p = np.asarray(p_values, dtype=float)
        self.s = np.asarray(s_values, dtype=float)
        self.d_f = np.asarray(d_f_values, dtype=float)
        self.d_g = np.asarray(d_g_values, dtype=float)
        self.feasible = feasible

    def __call__(self, v):
        i = self.index[tuple(v)]
        return float(self.p[i]), float(self.s[i])


def ranking_functions(x: Point, x_is_feasible: bool, models: Surrogates, cfg: ConstraintMapConfig = ConstraintMapConfig(),
                      candidates: Optional[Sequence] = None, objective_distance: str = "kernel") -> RankingFunctions:
    """Build the ranking functions at ``x`` over ``candidates``.

    With a feasible incumbent the constraint pseudo-distance is primary and
    the objective distance secondary; the roles swap otherwise.  Without
    constraints the primary value is zero everywhere.
    """
    u = tuple(x.cat)
    if candidates is None:
        candidates = enumerate_components(models.objective.domain, DEFAULT_ENUMERATION_CAP, incumbent=u)
    candidates = [tuple(c) for c in candidates]
    if u not in candidates:
        candidates = [u] + candidates
    comps = np.array(candidates, dtype=np.int64).reshape(len(candidates), -1)
    obj = models.objective
    if obj is None:
        df = (comps != np.asarray(u)[None, :]).sum(axis=1).astype(float)
    elif objective_distance == "prediction":
        qnt = np.tile(np.asarray(x.qnt, dtype=float).reshape(1, -1), (len(candidates), 1))
        mean, _ = obj.predict_arrays(comps, qnt)
        df = np.abs(mean - mean[candidates.index(u)])
    else:
        df = d_f_many(u, comps, obj.hp.theta_cat)
    if models.n_constraints and models.constraints:
        cmap = ConstraintMap(candidates, x.qnt, models.constraints, cfg)
        dg = cmap.d_g_from(u)
    else:
        dg = np.zeros(len(candidates))
    feasible = bool(x_is_feasible) or models.n_constraints == 0
    if feasible:
        return RankingFunctions(u, candidates, dg, df, df, dg, True)
    return RankingFunctions(u, candidates, df, dg, df, dg, False)


def nondominated_mask(p: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Boolean mask of points not dominated by any other point."""
    p = np.asarray(p, dtype=float)
    s = np.asarray(s, dtype=float)
    n = p.size
    mask = np.ones(n, dtype=bool)
    if n == 0:
        return mask
    order = np.lexsort((s, p))
    best_s_before = math.inf  # min s among strictly smaller p
    i = 0
    while i < n:
        j = i
        while j < n and p[order[j]] == p[order[i]]:
            j += 1
        group = order[i:j]
        group_min = s[group].min()
        for k in group:
            if best_s_before <= s[k] or group_min < s[k]:
                mask[k] = False
        best_s_before = min(best_s_before, group_min)
        i = j
    return mask


def order_components(u, candidates, evaluator) -> list:
    """Totally order ``candidates`` around ``u`` (see module docstring)."""
    u = tuple(u)
    candidates = [tuple(c) for c in candidates]
    others = [c for c in candidates if c != u]
    values = np.array([evaluator(c) for c in others], dtype=float).reshape(len(others), 2)
    p, s = values[:, 0], values[:, 1]
    nd = nondominated_mask(p, s)
    out = []
    pu, su = evaluator(u) if u in candidates else (0.0, 0.0)
    out.append(RankedComponent(u, float(pu), float(su), TIER_INCUMBENT, (0, 0.0, 0.0, u)))
    ranked = []
    for k, comp in enumerate(others):
        if nd[k]:
            tier, key = TIER_PARETO, (1, p[k], s[k], comp)
        elif p[k] == 0.0:
            tier, key = TIER_ZERO, (2, s[k], 0.0, comp)
        else:
            tier, key = TIER_REST, (3, p[k], s[k], comp)
        ranked.append(RankedComponent(comp, float(p[k]), float(s[k]), tier, key))
    ranked.sort(key=lambda r: r.order_key)
    return out + ranked


def default_m(domain: Domain) -> int:
    """``max(3, ceil(sqrt(|X_cat|)))``, capped at the number of components."""
    if domain.n_cat < 1:
        raise ValueError("domain has no categorical variable")
    size = domain.cat_size
    r = math.isqrt(size)
    root = r if r * r == size else r + 1
    return min(size, max(3, root))


def rank_at(x: Point, x_is_feasible: bool, models: Surrogates, cfg: ConstraintMapConfig = ConstraintMapConfig(),
            candidates=None, domain: Optional[Domain] = None, cap: int = DEFAULT_ENUMERATION_CAP, rng=None,
            objective_distance: str = "kernel") -> list:
    if candidates is None:
        domain = domain or models.objective.domain
        candidates = enumerate_components(domain, cap, incumbent=x.cat, rng=rng)
    rf = ranking_functions(x, x_is_feasible, models, cfg, candidates, objective_distance)
    return order_components(x.cat, rf.candidates, rf)


def build_neighborhood(x: Point, m: int, models: Surrogates, cfg: ConstraintMapConfig = ConstraintMapConfig(),
                       x_is_feasible: bool = True, candidates=None, domain: Optional[Domain] = None,
                       cap: int = DEFAULT_ENUMERATION_CAP, rng=None, objective_distance: str = "kernel") -> list:
    """The ``m`` lowest-ordered components at ``x``, starting with ``x.cat``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    ranked = rank_at(x, x_is_feasible, models, cfg, candidates, domain, cap, rng, objective_distance)
    return [r.component for r in ranked[:m]]


def hamming_neighborhood(u, m: int, candidates) -> list:
    """Baseline: incumbent first, then candidates by Hamming distance and index."""
    u = tuple(u)
    others = sorted((c for c in map(tuple, candidates) if c != u),
                    key=lambda c: (sum(a != b for a, b in zip(c, u)), c))
    return ([u] + others)[:m]


def dump_ranking(ranked, domain: Optional[Domain] = None) -> str:
    """CSV text ``rank,component,labels,p,s,tier`` for plotting orderings."""
    lines = ["rank,component,labels,p,s,tier"]
    for i, r in enumerate(ranked):
        comp = " ".join(str(c) for c in r.component)
        labels = " ".join(domain.cat_label(r.component)) if domain is not None else comp
        lines.append(f"{i},{comp},{labels},{r.p:.17g},{r.s:.17g},{r.tier}")
    return "\n".join(lines) + "\n"
