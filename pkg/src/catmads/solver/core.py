"""The main loop: DoE, then search / poll / extended poll iterations."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from ..distances import ConstraintMapConfig
from ..domain import Domain, Evaluation, Point, enumerate_components
from ..neighborhood import Surrogates
from ..surrogate import GPFitError, HyperoptConfig, fit, optimize_hyperparams, prepare_data
from .barrier import DOMINATING, UNSUCCESSFUL, BarrierState, pb_update
from .config import SolverConfig
from .doe import lhs_doe, random_points
from .history import HistoryRecord
from .mesh import MeshState, quant_poll
from .polls import cat_poll, extended_poll, select_near_misses
from .search import search_step_bo

logger = logging.getLogger(__name__)


EXTENDED_DEPTH = 3


class BudgetExhausted(Exception):
    pass


@dataclass
class RunResult:
    best_feasible: Optional[HistoryRecord]
    history: List[HistoryRecord]
    barrier: BarrierState
    mesh: MeshState
    config: SolverConfig
    stop_reason: str = ""

    @property
    def n_evals(self) -> int:
        return len(self.history)

    def __iter__(self):
        # ``best, history = run(...)`` with ``best`` a (Point, Evaluation) pair or None
        yield self.barrier.feasible
        yield self.history


class _ModelBank:
    """Objective and constraint GPs with lazily re-optimised hyperparameters."""

    def __init__(self, domain: Domain, n_constraints: int, cfg: SolverConfig, rng: np.random.Generator):
        self.domain = domain
        self.nJ = n_constraints
        self.cfg = cfg
        self.rng = rng
        self.hp = [None] * (1 + n_constraints)
        self.n_at_opt = [0] * (1 + n_constraints)
        self.models = Surrogates(None, [], n_constraints)

    def _fit_one(self, j, points, targets):
        pts, y = prepare_data(points, targets)
        if len(pts) < 2:
            return None
        cfg = self.cfg
        try:
            if self.hp[j] is None or len(pts) >= (1.0 + cfg.reopt_growth) * self.n_at_opt[j]:
                first = self.hp[j] is None
                hcfg = HyperoptConfig(
                    n_starts=cfg.hyperopt_starts if first else cfg.refit_starts,
                    max_iters=cfg.hyperopt_iters if first else cfg.refit_iters,
                    seed=int(self.rng.integers(2 ** 31)),
                )
                self.hp[j] = optimize_hyperparams(self.domain, pts, y, hcfg, init=self.hp[j])
                self.n_at_opt[j] = len(pts)
            return fit(self.domain, pts, y, self.hp[j])
        except GPFitError as exc:
            logger.debug("GP %d not refitted: %s", j, exc)
            return None

    def refit(self, history: List[HistoryRecord]):
        points = [r.point for r in history]
        obj = self._fit_one(0, points, [r.f for r in history])
        cons = []
        for j in range(self.nJ):
            m = self._fit_one(j + 1, points, [r.g[j] if len(r.g) > j else math.inf for r in history])
            if m is None:
                cons = []
                break
            cons.append(m)
        self.models = Surrogates(obj, cons, self.nJ)


def fit_surrogates(domain: Domain, history: List[HistoryRecord], n_constraints: int,
                   config: SolverConfig = SolverConfig(), rng=None) -> Surrogates:
    """Fit the objective and constraint GPs on an evaluation history, the
    way the solver does after its DoE."""
    bank = _ModelBank(domain, n_constraints, config.resolved(domain), np.random.default_rng(rng))
    bank.refit(history)
    return bank.models


class Solver:
    def __init__(self, domain: Domain, blackbox: Callable[[Point], Evaluation], n_constraints: int = 0,
                 config: SolverConfig = SolverConfig()):
        self.domain = domain
        self.blackbox = blackbox
        self.nJ = n_constraints
        self.cfg = config.resolved(domain)
        self.rng = np.random.default_rng(self.cfg.seed)
        self.cache = {}
        self.history: List[HistoryRecord] = []
        self.barrier = BarrierState()
        self.mesh = MeshState.initial(domain, self.cfg.delta_0, self.cfg.frame_fraction)
        self.bank = _ModelBank(domain, n_constraints, self.cfg, self.rng)
        self.cmap_cfg = ConstraintMapConfig(lam=self.cfg.lam, p=self.cfg.p)
        self.candidates = None
        if domain.n_cat:
            self.candidates = enumerate_components(domain, self.cfg.enum_cap, rng=self.rng)

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, x: Point, step: str) -> Optional[str]:
        """Evaluate an unseen point and offer it to the barrier.

        Returns the barrier outcome, or ``None`` when ``x`` is cached.
        """
        k = x.key()
        if k in self.cache:
            return None
        if len(self.history) >= self.cfg.budget:
            raise BudgetExhausted
        try:
            ev = self.blackbox(x)
        except Exception as exc:  # a crashing blackbox is a hidden failure
            logger.warning("blackbox raised %r at %s", exc, k)
            ev = Evaluation.failure(self.nJ)
        if len(ev.g) != self.nJ:
            ev = Evaluation.failure(self.nJ)
        self.cache[k] = ev
        self.barrier, outcome = pb_update(self.barrier, x, ev)
        inc = ""
        if self.barrier.feasible is not None and self.barrier.feasible[0] is x:
            inc = "feasible"
        elif self.barrier.infeasible is not None and self.barrier.infeasible[0] is x:
            inc = "infeasible"
        self.history.append(HistoryRecord(len(self.history) + 1, x, ev.f, tuple(ev.g), ev.h, step, inc,
                                          self.barrier.h_max, self.mesh.Delta))
        return outcome

    def try_points(self, points, step: str, collect=None) -> str:
        """Opportunistic evaluation: stop at the first improving point."""
        for x in points:
            outcome = self.evaluate(x, step)
            if outcome is None:
                continue
            if collect is not None:
                collect.append(x)
            if outcome != UNSUCCESSFUL:
                return outcome
        return UNSUCCESSFUL

    # -- steps ----------------------------------------------------------------

    def cat_poll(self, center: Point, feasible: bool) -> list:
        if self.domain.n_cat == 0:
            return []
        return cat_poll(center, self.cfg.m, self.bank.models, self.cmap_cfg, x_is_feasible=feasible,
                        candidates=self.candidates, objective_distance=self.cfg.objective_distance,
                        hamming=self.cfg.neighborhood == "hamming")

    def poll(self, center: Point, feasible: bool, cat_trials: list) -> str:
        qp = quant_poll(self.domain, center, self.mesh, self.rng)
        cp = self.cat_poll(center, feasible)
        blocks = [(qp, "qpoll", None), (cp, "cpoll", cat_trials)]
        if self.cfg.poll_order == "cat-first":
            blocks.reverse()
        for pts, step, collect in blocks:
            outcome = self.try_points(pts, step, collect)
            if outcome != UNSUCCESSFUL:
                return outcome
        return UNSUCCESSFUL

    def extended(self, center_ev: Evaluation, feasible: bool, cat_trials: list) -> str:
        """Extended poll around near-misses; a near-miss that keeps
        improving is polled again from its best trial (a few levels deep)."""
        near = select_near_misses(center_ev, [(x, self.cache[x.key()]) for x in cat_trials], self.cfg.xi,
                                  feasible, self.barrier.h_max, self.cfg.max_extended)
        for _ in range(EXTENDED_DEPTH):
            if not near:
                break
            left = self.cfg.budget - len(self.history)
            tried = []
            outcome = self.try_points(extended_poll(self.domain, near, self.mesh, left, self.rng), "xpoll", tried)
            if outcome != UNSUCCESSFUL:
                return outcome
            # keep descending from trials that beat their own near-miss
            best_ref = min(ev.h if not feasible else ev.f for _, ev in near)
            nxt = [(t, self.cache[t.key()]) for t in tried]
            nxt = [(t, ev) for t, ev in nxt if not ev.failed and (
                (feasible and ev.feasible and ev.f < best_ref) or (not feasible and 0.0 < ev.h < best_ref))]
            nxt.sort(key=lambda te: (te[1].h, te[1].f))
            near = nxt[:1]
        return UNSUCCESSFUL

    def search(self) -> str:
        centers = self.barrier.centers()
        if not centers:
            return UNSUCCESSFUL
        f_best = self.barrier.f_feasible if self.barrier.feasible else None
        finite = [r.f for r in self.history if math.isfinite(r.f)]
        anchor = min(finite) if finite else 0.0
        y = search_step_bo(self.domain, centers[0][0], self.bank.models, self.mesh, self.rng, f_best, anchor,
                           self.cache, self.cfg.n_candidates)
        if y is None:
            return UNSUCCESSFUL
        return self.try_points([y], "search")

    def iterate(self) -> str:
        """One iteration; returns its outcome."""
        use_models = len(self.history) < self.cfg.surrogate_cutoff
        if not self.barrier.centers():
            # nothing evaluated successfully yet: sample at random
            return self.try_points(random_points(self.domain, 1, self.rng), "search")
        if self.cfg.use_search and use_models:
            outcome = self.search()
            if outcome != UNSUCCESSFUL:
                return outcome
        extended = []
        for center, ev in self.barrier.centers():
            feasible = ev.feasible
            cat_trials = []
            outcome = self.poll(center, feasible, cat_trials)
            if outcome != UNSUCCESSFUL:
                return outcome
            if self.cfg.extended_poll and cat_trials:
                extended.append((ev, feasible, cat_trials))
        for ev, feasible, cat_trials in extended:
            outcome = self.extended(ev, feasible, cat_trials)
            if outcome != UNSUCCESSFUL:
                return outcome
        return UNSUCCESSFUL

    def run(self) -> RunResult:
        reason = "budget"
        try:
            for x in lhs_doe(self.domain, self.cfg.doe_size, self.rng):
                self.evaluate(x, "doe")
            if len(self.history) < self.cfg.surrogate_cutoff:
                self.bank.refit(self.history)
            while len(self.history) < self.cfg.budget:
                if self.mesh.Delta < self.cfg.delta_min:
                    reason = "mesh"
                    break
                n_before = len(self.history)
                outcome = self.iterate()
                if outcome == DOMINATING:
                    self.mesh = self.mesh.enlarge()
                elif outcome == UNSUCCESSFUL:
                    self.mesh = self.mesh.refine()
                if n_before < self.cfg.surrogate_cutoff and len(self.history) > n_before:
                    self.bank.refit(self.history)
        except BudgetExhausted:
            reason = "budget"
        best = self.barrier.feasible
        best_rec = None
        if best is not None:
            key = best[0].key()
            best_rec = next(r for r in reversed(self.history) if r.point.key() == key)
        return RunResult(best_rec, self.history, self.barrier, self.mesh, self.cfg, reason)


def run(problem_or_domain, blackbox=None, n_constraints: Optional[int] = None,
        config: SolverConfig = SolverConfig()) -> RunResult:
    """Minimise a problem (or a ``domain``/``blackbox`` pair).

    ``result.best_feasible`` is the best feasible history record (or
    ``None``) and ``result.history`` the full evaluation log.
    """
    if blackbox is None:
        problem = problem_or_domain
        domain, blackbox, nJ = problem.domain, problem.evaluate, problem.n_constraints
    else:
        domain, nJ = problem_or_domain, (n_constraints or 0)
    return Solver(domain, blackbox, nJ, config).run()



