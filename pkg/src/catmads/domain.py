"""Mixed-variable domains, points and evaluations.

A point is split into a categorical component (category indices), an
integer component and a continuous component.  Integer and continuous
coordinates together form the quantitative component.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

CATEGORICAL = "categorical"
INTEGER = "integer"
CONTINUOUS = "continuous"

DEFAULT_ENUMERATION_CAP = 4096


class DomainError(ValueError):
    """Raised for malformed domains, points or definition files."""


@dataclass(frozen=True)
class VariableSpec:
    kind: str
    n_categories: int = 0
    lb: float = 0.0
    ub: float = 0.0
    labels: Optional[tuple] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.kind == CATEGORICAL:
            if self.n_categories < 2:
                raise DomainError("categorical variable needs at least 2 categories")
            if self.labels is not None:
                labels = tuple(str(s) for s in self.labels)
                if len(labels) != self.n_categories or len(set(labels)) != len(labels):
                    raise DomainError("labels must hold exactly n_categories distinct entries")
                object.__setattr__(self, "labels", labels)
        elif self.kind in (INTEGER, CONTINUOUS):
            if not (math.isfinite(self.lb) and math.isfinite(self.ub)):
                raise DomainError("bounds must be finite")
            if self.lb > self.ub:
                raise DomainError(f"lower bound {self.lb} exceeds upper bound {self.ub}")
            if self.kind == INTEGER and (self.lb != int(self.lb) or self.ub != int(self.ub)):
                raise DomainError("integer bounds must be integral")
        else:
            raise DomainError(f"unknown variable kind {self.kind!r}")

    @classmethod
    def categorical(cls, n_categories: int, labels=None, name=None) -> "VariableSpec":
        return cls(CATEGORICAL, n_categories=int(n_categories), labels=labels, name=name)

    @classmethod
    def integer(cls, lb: int, ub: int, name=None) -> "VariableSpec":
        return cls(INTEGER, lb=int(lb), ub=int(ub), name=name)

    @classmethod
    def continuous(cls, lb: float, ub: float, name=None) -> "VariableSpec":
        return cls(CONTINUOUS, lb=float(lb), ub=float(ub), name=name)


@dataclass(frozen=True)
class Point:
    cat: tuple = ()
    int: tuple = ()
    con: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "cat", tuple(int(c) for c in self.cat))
        object.__setattr__(self, "int", tuple(int(v) for v in self.int))
        object.__setattr__(self, "con", tuple(float(v) for v in self.con))

    @property
    def qnt(self) -> tuple:
        return tuple(float(v) for v in self.int) + self.con

    def with_cat(self, cat) -> "Point":
        return Point(tuple(cat), self.int, self.con)

    def key(self) -> str:
        return encode_point(self)


class Status(str, Enum):
    OK = "ok"
    HIDDEN_FAILURE = "hidden_failure"


def aggregate_violation(g) -> float:
    """Squared-hinge constraint violation ``sum(max(0, g_j)**2)``.

    Returns ``inf`` as soon as one constraint value is ``+inf`` or NaN.
    """
    h = 0.0
    for gj in g:
        gj = float(gj)
        if math.isnan(gj) or gj == math.inf:
            return math.inf
        if gj > 0.0:
            h += gj * gj
    return h


@dataclass(frozen=True)
class Evaluation:
    f: float
    g: tuple = ()
    h: float = 0.0
    status: Status = Status.OK

    @classmethod
    def from_values(cls, f, g=()) -> "Evaluation":
        f = float(f)
        g = tuple(float(v) for v in g)
        if math.isnan(f) or f == math.inf:
            return cls.failure(len(g), g)
        return cls(f, g, aggregate_violation(g), Status.OK)

    @classmethod
    def failure(cls, n_constraints: int, g=None) -> "Evaluation":
        if g is None or len(g) != n_constraints:
            g = (math.inf,) * n_constraints
        return cls(math.inf, tuple(g), math.inf, Status.HIDDEN_FAILURE)

    @property
    def feasible(self) -> bool:
        return self.status is Status.OK and self.h == 0.0

    @property
    def failed(self) -> bool:
        return self.status is Status.HIDDEN_FAILURE


@dataclass(frozen=True)
class Domain:
    variables: tuple
    name: Optional[str] = None
    _cat_idx: tuple = field(init=False, repr=False, compare=False)
    _int_idx: tuple = field(init=False, repr=False, compare=False)
    _con_idx: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        variables = tuple(self.variables)
        if not variables:
            raise DomainError("a domain needs at least one variable")
        object.__setattr__(self, "variables", variables)
        kinds = [v.kind for v in variables]
        object.__setattr__(self, "_cat_idx", tuple(i for i, k in enumerate(kinds) if k == CATEGORICAL))
        object.__setattr__(self, "_int_idx", tuple(i for i, k in enumerate(kinds) if k == INTEGER))
        object.__setattr__(self, "_con_idx", tuple(i for i, k in enumerate(kinds) if k == CONTINUOUS))

    @property
    def cat_vars(self):
        return [self.variables[i] for i in self._cat_idx]

    @property
    def int_vars(self):
        return [self.variables[i] for i in self._int_idx]

    @property
    def con_vars(self):
        return [self.variables[i] for i in self._con_idx]

    @property
    def qnt_vars(self):
        return self.int_vars + self.con_vars

    @property
    def n_cat(self) -> int:
        return len(self._cat_idx)

    @property
    def n_int(self) -> int:
        return len(self._int_idx)

    @property
    def n_con(self) -> int:
        return len(self._con_idx)

    @property
    def n_qnt(self) -> int:
        return self.n_int + self.n_con

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def n_categories(self) -> tuple:
        return tuple(v.n_categories for v in self.cat_vars)

    @property
    def cat_size(self) -> int:
        return math.prod(self.n_categories)

    @property
    def qnt_lower(self) -> np.ndarray:
        return np.array([v.lb for v in self.qnt_vars], dtype=float)

    @property
    def qnt_upper(self) -> np.ndarray:
        return np.array([v.ub for v in self.qnt_vars], dtype=float)

    @property
    def is_integer_qnt(self) -> np.ndarray:
        return np.array([v.kind == INTEGER for v in self.qnt_vars], dtype=bool)

    def point_from_qnt(self, cat, qnt) -> Point:
        qnt = list(qnt)
        return Point(tuple(cat), tuple(int(round(v)) for v in qnt[: self.n_int]), tuple(qnt[self.n_int:]))

    def point_from_flat(self, values: Sequence) -> Point:
        """Build a point from values listed in declaration order."""
        if len(values) != self.n:
            raise DomainError(f"expected {self.n} values, got {len(values)}")
        return Point(
            tuple(values[i] for i in self._cat_idx),
            tuple(values[i] for i in self._int_idx),
            tuple(values[i] for i in self._con_idx),
        )

    def cat_label(self, cat) -> tuple:
        out = []
        for v, c in zip(self.cat_vars, cat):
            out.append(v.labels[c] if v.labels else str(c))
        return tuple(out)


def validate(domain: Domain, point: Point) -> bool:
    """True iff ``point`` has the right shape and lies within ``domain``."""
    if len(point.cat) != domain.n_cat or len(point.int) != domain.n_int or len(point.con) != domain.n_con:
        return False
    for c, v in zip(point.cat, domain.cat_vars):
        if not 0 <= c < v.n_categories:
            return False
    for x, v in zip(point.int, domain.int_vars):
        if not v.lb <= x <= v.ub:
            return False
    for x, v in zip(point.con, domain.con_vars):
        if not (math.isfinite(x) and v.lb <= x <= v.ub):
            return False
    return True


def enumerate_components(domain: Domain, cap: int = DEFAULT_ENUMERATION_CAP, incumbent=None, rng=None) -> list:
    """List categorical components, fully when there are at most ``cap``.

    Above the cap the list starts with the incumbent, then every component
    at Hamming distance one from it, then distinct uniform draws until
    ``cap`` components are collected.
    """
    if domain.n_cat == 0:
        raise DomainError("domain has no categorical variable")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    sizes = domain.n_categories
    if domain.cat_size <= cap:
        return [tuple(c) for c in itertools.product(*(range(s) for s in sizes))]
    if incumbent is None:
        raise ValueError("an incumbent component is required above the enumeration cap")
    rng = np.random.default_rng(rng)
    incumbent = tuple(int(c) for c in incumbent)
    out = [incumbent]
    seen = {incumbent}
    for i, s in enumerate(sizes):
        for c in range(s):
            if c == incumbent[i]:
                continue
            comp = incumbent[:i] + (c,) + incumbent[i + 1:]
            if comp not in seen:
                seen.add(comp)
                out.append(comp)
    out = out[:cap]
    while len(out) < cap:
        comp = tuple(int(rng.integers(s)) for s in sizes)
        if comp not in seen:
            seen.add(comp)
            out.append(comp)
    return out


def hamming(u, v) -> int:
    return sum(a != b for a, b in zip(u, v))


# -- text encodings ---------------------------------------------------------

def _fmt_real(x: float) -> str:
    return format(float(x), ".17g")


def encode_point(point: Point) -> str:
    """One line: categorical indices, then integers, then reals (17 digits)."""
    fields = [str(c) for c in point.cat] + [str(v) for v in point.int] + [_fmt_real(v) for v in point.con]
    return " ".join(fields)


def decode_point(domain: Domain, text: str) -> Point:
    tokens = text.split()
    n_ci = domain.n_cat + domain.n_int
    if len(tokens) != domain.n:
        raise DomainError(f"expected {domain.n} fields, got {len(tokens)}")
    try:
        cat = tuple(int(t) for t in tokens[: domain.n_cat])
        ints = tuple(int(t) for t in tokens[domain.n_cat:n_ci])
        con = tuple(float(t) for t in tokens[n_ci:])
    except ValueError as exc:
        raise DomainError(f"malformed point {text!r}") from exc
    return Point(cat, ints, con)


def variable_from_dict(d: dict) -> VariableSpec:
    kind = d.get("kind") or d.get("type")
    name = d.get("name")
    if kind == CATEGORICAL:
        labels = d.get("labels")
        n = d.get("n_categories", d.get("categories", len(labels) if labels else 0))
        return VariableSpec.categorical(int(n), labels=labels, name=name)
    if kind == INTEGER:
        return VariableSpec.integer(d["lb"], d["ub"], name=name)
    if kind == CONTINUOUS:
        return VariableSpec.continuous(d["lb"], d["ub"], name=name)
    raise DomainError(f"unknown variable kind {kind!r}")


def variable_to_dict(v: VariableSpec) -> dict:
    d = {"kind": v.kind}
    if v.name is not None:
        d["name"] = v.name
    if v.kind == CATEGORICAL:
        d["n_categories"] = v.n_categories
        if v.labels:
            d["labels"] = list(v.labels)
    elif v.kind == INTEGER:
        d["lb"], d["ub"] = int(v.lb), int(v.ub)
    else:
        d["lb"], d["ub"] = float(v.lb), float(v.ub)
    return d


def domain_from_dict(d: dict) -> Domain:
    variables = d.get("variables")
    if not variables:
        raise DomainError("definition lists no variables")
    return Domain(tuple(variable_from_dict(v) for v in variables), name=d.get("name"))


def domain_to_dict(domain: Domain) -> dict:
    d = {"variables": [variable_to_dict(v) for v in domain.variables]}
    if domain.name:
        d["name"] = domain.name
    return d


def points_to_arrays(domain: Domain, points: Iterable[Point]):
    """Stack points into an (N, n_cat) int array and an (N, n_qnt) float array."""
    points = list(points)
    cat = np.array([p.cat for p in points], dtype=np.int64).reshape(len(points), domain.n_cat)
    qnt = np.array([p.qnt for p in points], dtype=float).reshape(len(points), domain.n_qnt)
    return cat, qnt
