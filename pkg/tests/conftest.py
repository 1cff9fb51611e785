"""Shared helpers: random mixed domains, points and fitted models."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from catmads.domain import Domain, VariableSpec
from catmads.solver.doe import random_points

settings.register_profile("catmads", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("catmads")


def random_domain(rng: np.random.Generator, max_cat: int = 3, max_int: int = 2, max_con: int = 3,
                  min_vars: int = 1) -> Domain:
    """A random mixed domain with at least ``min_vars`` variables."""
    while True:
        n_cat = int(rng.integers(0, max_cat + 1))
        n_int = int(rng.integers(0, max_int + 1))
        n_con = int(rng.integers(0, max_con + 1))
        if n_cat + n_int + n_con >= min_vars:
            break
    vs = [VariableSpec.categorical(int(rng.integers(2, 5))) for _ in range(n_cat)]
    for _ in range(n_int):
        lb = int(rng.integers(-5, 3))
        vs.append(VariableSpec.integer(lb, lb + int(rng.integers(2, 12))))
    for _ in range(n_con):
        lb = float(rng.uniform(-3, 1))
        vs.append(VariableSpec.continuous(lb, lb + float(rng.uniform(0.5, 6))))
    return Domain(tuple(vs))


def distinct_points(domain: Domain, n: int, rng: np.random.Generator) -> list:
    """Up to ``n`` pairwise distinct random points."""
    out, seen = [], set()
    for _ in range(20):
        for p in random_points(domain, n, rng):
            if p.key() not in seen and len(out) < n:
                seen.add(p.key())
                out.append(p)
        if len(out) == n:
            break
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def mixed_domain():
    return Domain((
        VariableSpec.categorical(3, ("a", "b", "c")),
        VariableSpec.categorical(2),
        VariableSpec.integer(0, 10),
        VariableSpec.continuous(-1.0, 1.0),
    ))


def smooth_targets(domain: Domain, points, rng: np.random.Generator) -> np.ndarray:
    """Values of a random smooth function (sinusoids plus categorical offsets)."""
    w = rng.normal(size=domain.n_qnt) * 3
    phase = rng.uniform(0, 6, domain.n_qnt)
    offsets = [rng.normal(size=s) for s in domain.n_categories]
    lb, ub = domain.qnt_lower, domain.qnt_upper
    span = np.where(ub > lb, ub - lb, 1.0)
    out = []
    for p in points:
        z = (np.array(p.qnt) - lb) / span
        out.append(5.0 * (np.sum(np.sin(w * z + phase)) + sum(o[c] for o, c in zip(offsets, p.cat))) + 2.0)
    return np.array(out)


def check_run_invariants(result, budget=None):
    """Progressive-barrier and cache invariants of one solver run.

    Returns a list of violated properties (empty when all hold)."""
    import math

    problems = []
    hist = result.history
    keys = [r.point.key() for r in hist]
    if len(set(keys)) != len(keys):
        problems.append("a point was evaluated twice")
    if [r.eval_index for r in hist] != list(range(1, len(hist) + 1)):
        problems.append("evaluation indices are not dense")
    if budget is not None and len(hist) > budget:
        problems.append("budget exceeded")
    hmax = [r.h_max for r in hist]
    if any(b > a for a, b in zip(hmax, hmax[1:])):
        problems.append("h_max increased")
    inc_f = [r.f for r in hist if r.incumbent == "feasible"]
    if any(b > a for a, b in zip(inc_f, inc_f[1:])):
        problems.append("feasible incumbent f increased")
    for r in hist:
        if r.incumbent == "infeasible" and not (0 < r.h <= r.h_max):
            problems.append("infeasible incumbent above h_max")
            break
        if r.incumbent == "feasible" and r.h != 0.0:
            problems.append("feasible incumbent with h > 0")
            break
    if result.best_feasible is not None and inc_f and result.best_feasible.f != inc_f[-1]:
        problems.append("best feasible record is not the last feasible incumbent")
    if result.best_feasible is not None:
        best_seen = min(r.f for r in hist if r.h == 0.0 and math.isfinite(r.f))
        if result.best_feasible.f != best_seen:
            problems.append("best feasible record is not the history minimum")
    return problems


# -- acceptance report -----------------------------------------------------------

ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
