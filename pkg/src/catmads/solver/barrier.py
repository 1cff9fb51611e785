"""Progressive barrier: one feasible and one infeasible incumbent."""

from __future__ import annotations

import bisect
import dataclasses
import math
from dataclasses import dataclass
from typing import Optional, Tuple

from ..domain import Evaluation, Point, aggregate_violation

DOMINATING = "dominating"
IMPROVING = "improving"
UNSUCCESSFUL = "unsuccessful"

_RANK = {UNSUCCESSFUL: 0, IMPROVING: 1, DOMINATING: 2}

__all__ = ["BarrierState", "pb_update", "aggregate_violation", "best_outcome",
           "DOMINATING", "IMPROVING", "UNSUCCESSFUL"]


@dataclass(frozen=True)
class BarrierState:
    h_max: float = math.inf
    feasible: Optional[Tuple[Point, Evaluation]] = None
    infeasible: Optional[Tuple[Point, Evaluation]] = None
    filter_h: Tuple[float, ...] = ()   # sorted violations seen at or below h_max

    @property
    def f_feasible(self) -> float:
        return self.feasible[1].f if self.feasible else math.inf

    def centers(self):
        """Poll centres, feasible first."""
        return [c for c in (self.feasible, self.infeasible) if c is not None]


def pb_update(state: BarrierState, x: Point, ev: Evaluation) -> Tuple[BarrierState, str]:
    """Offer ``(x, ev)`` to the barrier; return the new state and the outcome.

    A feasible point with a strictly lower objective replaces the feasible
    incumbent.  An infeasible point with ``h <= h_max`` replaces the
    infeasible incumbent when it lowers ``h`` (improving) or does not worsen
    either ``h`` or ``f`` while bettering one of them (dominating).  When
    the replacement lowers ``h``, ``h_max`` drops to the largest violation
    seen so far that is strictly below the displaced incumbent's, so
    ``h_max`` never increases and always bounds the new incumbent.
    """
    if ev.failed or not math.isfinite(ev.h):
        return state, UNSUCCESSFUL
    if ev.h == 0.0:
        if state.feasible is None or ev.f < state.feasible[1].f:
            return dataclasses.replace(state, feasible=(x, ev)), DOMINATING
        return state, UNSUCCESSFUL
    if ev.h > state.h_max:
        return state, UNSUCCESSFUL
    filter_h = state.filter_h
    pos = bisect.bisect_left(filter_h, ev.h)
    if pos == len(filter_h) or filter_h[pos] != ev.h:
        filter_h = filter_h[:pos] + (ev.h,) + filter_h[pos:]
    if state.infeasible is None:
        return dataclasses.replace(state, infeasible=(x, ev), filter_h=filter_h), DOMINATING
    inc = state.infeasible[1]
    if ev.h <= inc.h and ev.f <= inc.f and (ev.h < inc.h or ev.f < inc.f):
        outcome = DOMINATING
    elif ev.h < inc.h:
        outcome = IMPROVING
    else:
        return dataclasses.replace(state, filter_h=filter_h), UNSUCCESSFUL
    h_max = state.h_max
    if ev.h < inc.h:
        h_max = filter_h[bisect.bisect_left(filter_h, inc.h) - 1]
        filter_h = filter_h[: bisect.bisect_right(filter_h, h_max)]
    return BarrierState(h_max, state.feasible, (x, ev), filter_h), outcome


def best_outcome(*outcomes: str) -> str:
    return max(outcomes, key=_RANK.__getitem__, default=UNSUCCESSFUL)
