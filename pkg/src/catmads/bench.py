"""Benchmark harness: instances, convergence tests and data profiles.

An instance is a problem paired with a seed.  Every solver run on an
instance leaves a :class:`RunLog`; profiles are computed from logs only, so
they can be rebuilt from history CSV files at any time.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-8
DEFAULT_TAUS = (1e-1, 1e-2, 1e-3)


def default_kappa_grid() -> np.ndarray:
    return np.arange(0.0, 300.0 + 0.25, 0.5)


@dataclass(frozen=True)
class Instance:
    problem_id: str
    seed: int
    n_p: int
    budget: int
    constrained: bool = False

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError("seed must be >= 0")

    @property
    def key(self) -> str:
        return f"{self.problem_id}#{self.seed}"


@dataclass(frozen=True)
class Record:
    eval_index: int
    f: float
    h: float
    step: str = ""


@dataclass
class RunLog:
    instance: Instance
    solver_id: str
    records: List[Record]

    def __post_init__(self):
        for i, r in enumerate(self.records, start=1):
            if r.eval_index != i:
                raise ValueError(f"eval_index must be dense from 1 (got {r.eval_index} at position {i})")

    def feasible(self, r: Record) -> bool:
        return r.h <= FEASIBILITY_TOL and math.isfinite(r.f)

    def first_feasible(self) -> Optional[Record]:
        return next((r for r in self.records if self.feasible(r)), None)

    def best_feasible_f(self) -> float:
        fs = [r.f for r in self.records if self.feasible(r)]
        return min(fs) if fs else math.inf

    @classmethod
    def from_history(cls, instance: Instance, solver_id: str, history) -> "RunLog":
        return cls(instance, solver_id, [Record(r.eval_index, r.f, r.h, r.step) for r in history])


class UnsolvableInstance(ValueError):
    """No solver found a feasible point on a constrained instance."""


def f0(instance: Instance, logs: Sequence[RunLog], constrained: Optional[bool] = None,
       doe_size: Optional[int] = None) -> float:
    """Reference starting value of an instance.

    Unconstrained: the lowest objective in the shared DoE (records tagged
    ``doe``, or the first ``doe_size`` records).  Constrained: the lowest
    objective among each solver's first feasible record.
    """
    if constrained is None:
        constrained = instance.constrained
    if constrained:
        firsts = [r.f for r in (log.first_feasible() for log in logs) if r is not None]
        if not firsts:
            raise UnsolvableInstance(instance.key)
        return min(firsts)
    vals = []
    for log in logs:
        doe = [r for r in log.records if r.step == "doe"]
        if not doe and doe_size is not None:
            doe = log.records[:doe_size]
        vals += [r.f for r in doe if math.isfinite(r.f)]
    if not vals:
        raise ValueError(f"{instance.key}: no DoE records to take f0 from")
    return min(vals)


def f_star(logs: Sequence[RunLog]) -> float:
    return min((log.best_feasible_f() for log in logs), default=math.inf)


def tau_solved(log: RunLog, f0_value: float, f_star_value: float, tau: float) -> Optional[int]:
    """First evaluation whose running-best feasible value passes the test
    ``f0 - f >= (1 - tau) (f0 - f_star)``; ``None`` if none does."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    target = (1.0 - tau) * (f0_value - f_star_value)
    best = math.inf
    for r in log.records:
        if log.feasible(r) and r.f < best:
            best = r.f
        if math.isfinite(best) and f0_value - best >= target:
            return r.eval_index
    return None


def solve_counts(logs: Sequence[RunLog], tau: float, doe_size: Optional[int] = None) -> Dict[str, Dict[str, float]]:
    """``{solver: {instance_key: k / (n_p + 1)}}`` with ``inf`` for unsolved
    instances.  Instances no solver made feasible are left out."""
    by_inst: Dict[Instance, List[RunLog]] = {}
    for log in logs:
        by_inst.setdefault(log.instance, []).append(log)
    solvers = sorted({log.solver_id for log in logs})
    out = {s: {} for s in solvers}
    for inst, inst_logs in by_inst.items():
        try:
            f0_value = f0(inst, inst_logs, doe_size=doe_size)
        except UnsolvableInstance:
            logger.warning("instance %s: no feasible point in any run; excluded", inst.key)
            continue
        fs = f_star(inst_logs)
        for log in inst_logs:
            k = tau_solved(log, f0_value, fs, tau)
            out[log.solver_id][inst.key] = math.inf if k is None else k / (inst.n_p + 1)
    return out


def data_profile_from_ratios(ratios: Mapping[str, Mapping[str, float]], kappa_grid) -> Dict[str, np.ndarray]:
    kappa = np.asarray(kappa_grid, dtype=float)
    curves = {}
    for solver, per_inst in ratios.items():
        r = np.array(list(per_inst.values()), dtype=float)
        if r.size == 0:
            curves[solver] = np.zeros_like(kappa)
            continue
        curves[solver] = (r[None, :] <= kappa[:, None]).sum(axis=1) / r.size
    return curves


def data_profile(logs: Sequence[RunLog], tau: float, kappa_grid=None, doe_size: Optional[int] = None) -> Dict[str, np.ndarray]:
    """Fraction of instances each solver tau-solves within ``kappa``
    simplex gradients, i.e. ``kappa * (n_p + 1)`` evaluations."""
    if kappa_grid is None:
        kappa_grid = default_kappa_grid()
    return data_profile_from_ratios(solve_counts(logs, tau, doe_size), kappa_grid)


# -- files ---------------------------------------------------------------------

def write_profile_csv(path, profiles: Mapping[float, Mapping[str, np.ndarray]], kappa_grid):
    """``profiles`` maps tau to per-solver curves."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["solver", "tau", "kappa", "fraction"])
        for tau, curves in profiles.items():
            for solver, curve in curves.items():
                for k, v in zip(kappa_grid, curve):
                    w.writerow([solver, format(tau, "g"), format(float(k), "g"), format(float(v), ".6g")])


def write_gnuplot(path, profiles: Mapping[float, Mapping[str, np.ndarray]], kappa_grid):
    """One whitespace table per tau (separated by two blank lines, so
    ``index i`` selects a tau), columns ``kappa`` then one per solver."""
    with open(path, "w") as fh:
        for i, (tau, curves) in enumerate(profiles.items()):
            if i:
                fh.write("\n\n")
            names = list(curves)
            fh.write(f"# tau={tau:g}\n# kappa " + " ".join(names) + "\n")
            for j, k in enumerate(kappa_grid):
                fh.write(f"{float(k):g} " + " ".join(f"{curves[n][j]:.6g}" for n in names) + "\n")


MANIFEST = "manifest.json"


def write_manifest(out_dir, entries: List[dict]):
    with open(Path(out_dir) / MANIFEST, "w") as fh:
        json.dump({"runs": entries}, fh, indent=1)


def load_logs(out_dir) -> List[RunLog]:
    """Rebuild run logs from a bench directory (manifest plus history CSVs)."""
    out_dir = Path(out_dir)
    with open(out_dir / MANIFEST) as fh:
        entries = json.load(fh)["runs"]
    logs = []
    for e in entries:
        inst = Instance(**e["instance"])
        logs.append(RunLog(inst, e["solver"], read_log_csv(out_dir / e["history"])))
    return logs


def read_log_csv(path) -> List[Record]:
    with open(path, newline="") as fh:
        rows = csv.DictReader(fh)
        return [Record(int(r["eval"]), float(r["f"]), float(r["h"]), r.get("step", "")) for r in rows]


# -- running -------------------------------------------------------------------

def run_benchmark(problems: Iterable, solvers: Mapping[str, object], seeds: Sequence[int], out_dir,
                  budget: Optional[int] = None, progress=None) -> List[RunLog]:
    """Run every solver configuration on every (problem, seed) instance.

    ``solvers`` maps names to :class:`~catmads.solver.SolverConfig`
    templates; seed and budget are overridden per instance.  Histories and a
    manifest are written under ``out_dir``.
    """
    import dataclasses

    from .solver import run, write_history

    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    entries, logs = [], []
    for problem in problems:
        n = problem.domain.n
        b = budget if budget is not None else 250 * n
        for seed in seeds:
            inst = Instance(problem.name, int(seed), n, b, problem.constrained)
            for name, template in solvers.items():
                cfg = dataclasses.replace(template, seed=int(seed), budget=b)
                try:
                    result = run(problem, config=cfg)
                except Exception:  # keep the campaign going
                    logger.exception("run %s / %s failed; skipped", inst.key, name)
                    continue
                fname = f"{problem.name}__s{seed}__{name}.csv"
                write_history(out_dir / fname, result.history, problem.n_constraints)
                entries.append({"instance": asdict(inst), "solver": name, "history": fname})
                log = RunLog.from_history(inst, name, result.history)
                logs.append(log)
                if progress:
                    progress(inst, name, log)
    write_manifest(out_dir, entries)
    return logs
