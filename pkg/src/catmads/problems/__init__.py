"""Built-in problems and the external-process adapter."""

from __future__ import annotations

import os

from .base import Problem
from .external import BlackboxStartError, ProcessBlackbox, external_blackbox, load_problem_file
from .mechanical import grid_census, mechanical_analog
from .suite import SPECS, suite_problem, synthetic_suite

__all__ = [
    "Problem", "ProcessBlackbox", "BlackboxStartError", "external_blackbox", "load_problem_file",
    "mechanical_analog", "grid_census", "synthetic_suite", "suite_problem", "resolve_problem", "SPECS",
    "UnknownProblem",
]


class UnknownProblem(KeyError):
    pass


def resolve_problem(ref: str, seed: int = 0) -> Problem:
    """Resolve ``mech-analog``, a suite problem name (optionally
    ``suite:<name>``) or the path of an external problem file."""
    if ref in ("mech-analog", "mechanical"):
        return mechanical_analog()
    name = ref[len("suite:"):] if ref.startswith("suite:") else ref
    try:
        return suite_problem(name, seed)
    except KeyError:
        pass
    if os.path.isfile(ref):
        return load_problem_file(ref)
    raise UnknownProblem(ref)
