"""Command-line interface: ``catmads {solve,bench,profile,neighbors}``.

Output files go to ``--out`` or, when omitted, to the directory named by
``CATMADS_OUT`` (default: the current directory).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import bench as benchmod
from .distances import ConstraintMapConfig
from .domain import DomainError, decode_point, encode_point, enumerate_components, validate
from .neighborhood import default_m, dump_ranking, rank_at
from .problems import UnknownProblem, mechanical_analog, resolve_problem, synthetic_suite
from .problems.external import BlackboxStartError
from .solver import HistoryRecord, SolverConfig, fit_surrogates, run, write_history
from .solver.doe import lhs_doe

OUT_ENV = "CATMADS_OUT"
EXIT_USAGE = 2

logger = logging.getLogger("catmads")

SOLVER_VARIANTS = {
    "catmads_gp": {},
    "hamming": {"neighborhood": "hamming"},
    "no_search": {"use_search": False},
}


class CliError(Exception):
    pass


def _out_dir(arg) -> Path:
    return Path(arg or os.environ.get(OUT_ENV, "."))


def _parse_override(text: str):
    if "=" not in text:
        raise CliError(f"override {text!r} is not key=value")
    key, value = text.split("=", 1)
    return key.strip(), yaml.safe_load(value)


def _build_config(args) -> SolverConfig:
    data = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                data.update(yaml.safe_load(fh) or {})
        except OSError as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from exc
    for item in getattr(args, "set", None) or []:
        k, v = _parse_override(item)
        data[k] = v
    for key in ("seed", "budget", "m", "doe_size"):
        v = getattr(args, key, None)
        if v is not None:
            data[key] = v
    try:
        return SolverConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid configuration: {exc}") from exc


def _resolve(ref: str, suite_seed: int = 0):
    try:
        return resolve_problem(ref, suite_seed)
    except UnknownProblem:
        raise CliError(f"unknown problem reference: {ref!r}")
    except (BlackboxStartError, DomainError, ValueError, OSError) as exc:
        raise CliError(f"cannot load problem {ref!r}: {exc}") from exc


def _print_config(cfg: SolverConfig, extra: dict):
    block = dict(extra)
    block["solver"] = cfg.as_dict()
    print("# effective configuration")
    for line in yaml.safe_dump(block, sort_keys=False).splitlines():
        print("#   " + line)


def _fmt(v: float) -> str:
    return format(v, ".10g")


# -- subcommands ---------------------------------------------------------------

def cmd_solve(args) -> int:
    problem = _resolve(args.problem, args.suite_seed)
    try:
        cfg = _build_config(args).resolved(problem.domain)
        out = Path(args.output) if args.output else _out_dir(args.out) / f"{problem.name}_s{cfg.seed}.csv"
        _print_config(cfg, {"problem": problem.name, "n": problem.domain.n,
                            "n_constraints": problem.n_constraints, "history": str(out)})
        result = run(problem, config=cfg)
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    finally:
        problem.close()
    os.makedirs(out.parent, exist_ok=True)
    write_history(out, result.history, problem.n_constraints)
    best = result.best_feasible
    if best is None:
        inf = result.barrier.infeasible
        h = _fmt(inf[1].h) if inf else "inf"
        print(f"no feasible point found; best h={h} evals={result.n_evals} stop={result.stop_reason}")
    else:
        print(f"best f={_fmt(best.f)} h={_fmt(best.h)} evals={result.n_evals} "
              f"point={encode_point(best.point)} stop={result.stop_reason}")
    return 0


def _suite(ref: str, suite_seed: int):
    if ref in ("synthetic", "suite"):
        return synthetic_suite(suite_seed)
    if ref == "all":
        return synthetic_suite(suite_seed) + [mechanical_analog()]
    return [_resolve(r.strip(), suite_seed) for r in ref.split(",") if r.strip()]


def cmd_bench(args) -> int:
    problems = _suite(args.suite, args.suite_seed)
    seeds = args.seeds or [0, 1, 2]
    names = [s.strip() for s in args.solvers.split(",") if s.strip()]
    unknown = [n for n in names if n not in SOLVER_VARIANTS]
    if unknown:
        raise CliError(f"unknown solver variant(s): {unknown}; known: {sorted(SOLVER_VARIANTS)}")
    base = _build_config(args)
    solvers = {n: dataclasses.replace(base, **SOLVER_VARIANTS[n]) for n in names}
    out = _out_dir(args.out)
    _print_config(base, {"suite": [p.name for p in problems], "seeds": seeds, "solvers": names,
                         "budget": args.budget or "250 n", "out": str(out)})

    def progress(inst, name, log):
        best = log.best_feasible_f()
        print(f"{inst.key:28s} {name:12s} evals={len(log.records):5d} best={_fmt(best)}", flush=True)

    logs = benchmod.run_benchmark(problems, solvers, seeds, out, budget=args.budget, progress=progress)
    for p in problems:
        p.close()
    print(f"{len(logs)} runs written to {out}")
    return 0 if logs else 1


def cmd_profile(args) -> int:
    log_dir = Path(args.log_dir)
    if not (log_dir / benchmod.MANIFEST).is_file():
        raise CliError(f"no {benchmod.MANIFEST} in {log_dir}")
    logs = benchmod.load_logs(log_dir)
    taus = args.tau or list(benchmod.DEFAULT_TAUS)
    kappa = benchmod.default_kappa_grid() if args.kappa_max is None else np.arange(0.0, args.kappa_max + 1e-9, args.kappa_step)
    profiles = {}
    for tau in taus:
        curves = benchmod.data_profile(logs, tau, kappa)
        for name, c in curves.items():
            if np.any(np.diff(c) < 0) or c.min() < 0 or c.max() > 1:  # pragma: no cover - guarded by tests
                raise RuntimeError(f"non-monotone curve for {name} at tau={tau}")
        profiles[tau] = curves
    if args.output:
        out = Path(args.output)
    else:
        # next to the logs unless an output directory is given
        out = Path(args.out or os.environ.get(OUT_ENV) or log_dir) / "profile.csv"
    os.makedirs(out.parent, exist_ok=True)
    benchmod.write_profile_csv(out, profiles, kappa)
    benchmod.write_gnuplot(out.with_suffix(".dat"), profiles, kappa)
    for tau, curves in profiles.items():
        summary = "  ".join(f"{n}={c[-1]:.3f}" for n, c in curves.items())
        print(f"tau={tau:g} final fractions: {summary}")
    print(f"profile written to {out} and {out.with_suffix('.dat')}")
    return 0


def cmd_neighbors(args) -> int:
    problem = _resolve(args.problem, args.suite_seed)
    domain = problem.domain
    if domain.n_cat == 0:
        raise CliError(f"{problem.name} has no categorical variables")
    try:
        x = decode_point(domain, args.point)
    except (DomainError, ValueError) as exc:
        raise CliError(f"bad point {args.point!r}: {exc}") from exc
    if not validate(domain, x):
        raise CliError(f"point {args.point!r} lies outside the domain of {problem.name}")
    m = args.m or default_m(domain)
    cfg = SolverConfig(seed=args.seed).resolved(domain)
    rng = np.random.default_rng(args.seed)
    try:
        pts = lhs_doe(domain, args.doe, rng) + [x]
        history = []
        for i, p in enumerate(pts):
            ev = problem(p)
            history.append(HistoryRecord(i + 1, p, ev.f, tuple(ev.g), ev.h, "doe"))
    finally:
        problem.close()
    models = fit_surrogates(domain, history, problem.n_constraints, cfg, rng)
    x_ev = history[-1]
    feasible = x_ev.h == 0.0 and math.isfinite(x_ev.f)
    cands = enumerate_components(domain, cfg.enum_cap, incumbent=x.cat, rng=rng)
    if models.objective is None:
        raise CliError("not enough finite evaluations to fit a surrogate")
    ranked = rank_at(x, feasible, models, ConstraintMapConfig(cfg.lam, cfg.p), cands)
    print(f"# incumbent {encode_point(x)} f={_fmt(x_ev.f)} h={_fmt(x_ev.h)} feasible={feasible} m={m} doe={args.doe}")
    text = dump_ranking(ranked[: (None if args.all else m)], domain)
    sys.stdout.write(text)
    if args.output:
        Path(args.output).write_text(dump_ranking(ranked, domain))
    return 0


# -- parser --------------------------------------------------------------------

def _add_solver_opts(p):
    p.add_argument("--config", help="YAML file with solver settings")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one solver setting")
    p.add_argument("--budget", type=int)
    p.add_argument("--m", type=int, help="categorical neighborhood size")
    p.add_argument("--doe-size", dest="doe_size", type=int)
    p.add_argument("--suite-seed", type=int, default=0, help="seed of the synthetic problem parameters")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="catmads", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="minimise one problem")
    p.add_argument("problem", help="mech-analog, a suite problem name, or a problem YAML file")
    p.add_argument("--seed", type=int)
    p.add_argument("-o", "--output", help="history CSV path")
    _add_solver_opts(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a benchmark campaign")
    p.add_argument("suite", nargs="?", default="synthetic",
                   help="'synthetic', 'all', or a comma-separated list of problem references")
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--solvers", default="catmads_gp", help=f"comma-separated; known: {','.join(SOLVER_VARIANTS)}")
    _add_solver_opts(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("profile", help="data profiles from a bench directory")
    p.add_argument("log_dir")
    p.add_argument("--tau", type=float, nargs="*")
    p.add_argument("--kappa-max", type=float)
    p.add_argument("--kappa-step", type=float, default=0.5)
    p.add_argument("-o", "--output", help="profile CSV path (a .dat gnuplot table is written next to it)")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV}, else the log directory)")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("neighbors", help="rank categorical components at a point")
    p.add_argument("problem")
    p.add_argument("point", help="encoded point, e.g. '1 3 1 5.5 1'")
    p.add_argument("--m", type=int)
    p.add_argument("--doe", type=int, default=40, help="LHS size used to fit the surrogates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--suite-seed", type=int, default=0)
    p.add_argument("--all", action="store_true", help="print every component, not only the first m")
    p.add_argument("-o", "--output", help="write the full ranking CSV here")
    p.set_defaults(func=cmd_neighbors)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
