"""Evaluation history records and their CSV form."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

from ..domain import Point, decode_point, encode_point


@dataclass(frozen=True)
class HistoryRecord:
    eval_index: int             # 1-based, counts true evaluations only
    point: Point
    f: float
    g: Tuple[float, ...]
    h: float
    step: str                   # doe, search, qpoll, cpoll or xpoll
    incumbent: str = ""         # "feasible", "infeasible" or ""
    h_max: float = math.inf
    Delta: float = math.nan

    @property
    def feasible(self) -> bool:
        return self.h == 0.0 and math.isfinite(self.f)


def _fmt(v: float) -> str:
    return format(v, ".17g")


def write_history(path, records: List[HistoryRecord], n_constraints: int):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eval", "step", "point", "f"] + [f"g{j + 1}" for j in range(n_constraints)] + ["h", "incumbent"])
        for r in records:
            g = list(r.g) + [math.inf] * (n_constraints - len(r.g))
            w.writerow([r.eval_index, r.step, encode_point(r.point), _fmt(r.f)] + [_fmt(v) for v in g]
                       + [_fmt(r.h), r.incumbent])


def read_history(path, domain=None) -> List[HistoryRecord]:
    """Inverse of :func:`write_history`; ``domain`` is needed to split the
    point into its blocks (otherwise every token is kept as a real)."""
    out = []
    with open(path, newline="") as fh:
        rows = csv.reader(fh)
        header = next(rows)
        gcols = [i for i, name in enumerate(header) if name.startswith("g") and name[1:].isdigit()]
        for row in rows:
            if not row:
                continue
            if domain is not None:
                pt = decode_point(domain, row[2])
            else:
                pt = Point((), (), tuple(float(t) for t in row[2].split()))
            out.append(HistoryRecord(
                int(row[0]), pt, float(row[3]), tuple(float(row[i]) for i in gcols),
                float(row[header.index("h")]), row[1], row[header.index("incumbent")],
            ))
    return out


def best_feasible(records: List[HistoryRecord]) -> Optional[HistoryRecord]:
    best = None
    for r in records:
        if r.feasible and (best is None or r.f < best.f):
            best = r
    return best
