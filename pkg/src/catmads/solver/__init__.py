"""Mixed-variable MADS with surrogate-based categorical neighborhoods."""

from .barrier import DOMINATING, IMPROVING, UNSUCCESSFUL, BarrierState, aggregate_violation, best_outcome, pb_update
from .config import SolverConfig
from .core import RunResult, Solver, fit_surrogates, run
from .doe import lhs_doe
from .history import HistoryRecord, best_feasible, read_history, write_history
from .mesh import MeshState, poll_displacements, quant_poll
from .polls import cat_poll, extended_poll, select_near_misses
from .search import expected_improvement, probability_feasible, search_step_bo

__all__ = [
    "SolverConfig", "Solver", "RunResult", "run", "fit_surrogates", "BarrierState", "pb_update", "aggregate_violation",
    "best_outcome", "DOMINATING", "IMPROVING", "UNSUCCESSFUL", "lhs_doe", "MeshState", "quant_poll",
    "poll_displacements", "cat_poll", "extended_poll", "select_near_misses",
    "HistoryRecord", "write_history", "read_history", "best_feasible", "search_step_bo",
    "expected_improvement", "probability_feasible",
]
