"""Parametric synthetic test problems with enumerable reference optima.

Each categorical component selects an offset, a shift and a rotation of an
ellipsoid (or of a mild Rosenbrock valley).  Constrained members add linear
constraints whose offsets, hence whose active sets, change with the
component.  Reference optima are exact: every component (and every integer
value) is enumerated and the continuous restriction is solved in closed
form (active-set enumeration for the constrained convex quadratics).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ..domain import Domain, Evaluation, Point, VariableSpec
from .base import Problem

CON_LB, CON_UB = -5.0, 5.0
INT_LB, INT_UB = 0, 6


@dataclass(frozen=True)
class _Spec:
    name: str
    n_categories: tuple
    n_int: int
    n_con: int
    kind: str  # "ellipsoid" or "rosenbrock"
    n_constraints: int


SPECS = (
    _Spec("ell-c3-x2", (3,), 0, 2, "ellipsoid", 0),
    _Spec("ell-c2x3-x2", (2, 3), 0, 2, "ellipsoid", 0),
    _Spec("ell-c4-i1-x2", (4,), 1, 2, "ellipsoid", 0),
    _Spec("ros-c3-x2", (3,), 0, 2, "rosenbrock", 0),
    _Spec("ell-c3x3-x3", (3, 3), 0, 3, "ellipsoid", 0),
    _Spec("cell-c3-x2-g1", (3,), 0, 2, "ellipsoid", 1),
    _Spec("cell-c2x3-x2-g2", (2, 3), 0, 2, "ellipsoid", 2),
    _Spec("cell-c4-i1-x2-g1", (4,), 1, 2, "ellipsoid", 1),
    _Spec("cell-c3x3-x3-g3", (3, 3), 0, 3, "ellipsoid", 3),
    _Spec("cell-c5-x3-g2", (5,), 0, 3, "ellipsoid", 2),
)


def _rotation(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    return q * np.sign(np.diag(r))


class _SyntheticFunction:
    """Holds the random parameters of one problem and evaluates it."""

    def __init__(self, spec: _Spec, rng: np.random.Generator):
        self.spec = spec
        d = spec.n_int + spec.n_con
        self.d = d
        comps = list(itertools.product(*(range(s) for s in spec.n_categories)))
        self.comps = comps
        offsets = [rng.uniform(0.0, 3.0, s) for s in spec.n_categories]
        self.offset = {c: float(sum(offsets[i][ci] for i, ci in enumerate(c))) for c in comps}
        self.shift = {}
        self.metric = {}
        for c in comps:
            shift = rng.uniform(-3.0, 3.0, d)
            if spec.n_int:
                shift[: spec.n_int] = rng.uniform(INT_LB + 0.5, INT_UB - 0.5, spec.n_int)
            self.shift[c] = shift
            Q = _rotation(rng, d)
            w = rng.uniform(1.0, 5.0, d)
            self.metric[c] = (Q * w) @ Q.T
        self.normals = [v / np.linalg.norm(v) for v in rng.normal(size=(spec.n_constraints, d))]
        # constraint j: normal_j . (x - shift_c) + level_{j,c} <= 0
        self.levels = {}
        for k, c in enumerate(comps):
            lv = rng.uniform(-1.0, 1.5, spec.n_constraints)
            if k == 0:
                lv = -np.abs(lv) - 0.1  # at least one component keeps its free minimiser
            self.levels[c] = lv

    def values(self, cat, z):
        c = tuple(cat)
        dz = np.asarray(z, dtype=float) - self.shift[c]
        if self.spec.kind == "rosenbrock":
            y = dz / 2.0 + 1.0
            f = self.offset[c] + float(np.sum(10.0 * (y[1:] - y[:-1] ** 2) ** 2 + (1.0 - y[:-1]) ** 2))
        else:
            f = self.offset[c] + float(dz @ self.metric[c] @ dz)
        g = tuple(float(n @ dz + lv) for n, lv in zip(self.normals, self.levels[c]))
        return f, g

    # -- exact reference optimum ------------------------------------------

    def _qp_restriction(self, c, fixed_int):
        """Minimise the quadratic over the continuous box subject to the
        linear constraints, with the integer coordinates fixed.

        Enumerates active sets of {linear constraints, bounds}; returns the
        best KKT point (convex problem, so it is the global minimiser).
        """
        ni = self.spec.n_int
        H = self.metric[c]
        s = self.shift[c]
        zi = np.asarray(fixed_int, dtype=float)
        # f(z) = (z - s)^T H (z - s); split z = (zi, zc)
        Hcc = H[ni:, ni:]
        Hci = H[ni:, :ni]
        b = Hcc @ s[ni:] - Hci @ (zi - s[:ni])  # minimiser of unconstrained restriction solves Hcc zc = b
        nc = self.spec.n_con
        rows, rhs = [], []
        for n, lv in zip(self.normals, self.levels[c]):
            # n . (z - s) + lv <= 0  ->  n_c . zc <= n . s - lv - n_i . zi
            rows.append(n[ni:])
            rhs.append(float(n @ s - lv - n[:ni] @ zi))
        for k in range(nc):
            e = np.zeros(nc)
            e[k] = 1.0
            rows.append(e)
            rhs.append(CON_UB)
            rows.append(-e)
            rhs.append(-CON_LB)
        A = np.array(rows)
        r = np.array(rhs)
        best = None
        for size in range(0, nc + 1):
            for act in itertools.combinations(range(len(rows)), size):
                act = list(act)
                Aa = A[act]
                kkt = np.zeros((nc + size, nc + size))
                kkt[:nc, :nc] = 2.0 * Hcc
                kkt[:nc, nc:] = Aa.T
                kkt[nc:, :nc] = Aa
                rhs_k = np.concatenate([2.0 * b, r[act]])
                try:
                    sol = np.linalg.solve(kkt, rhs_k)
                except np.linalg.LinAlgError:
                    continue
                zc, mult = sol[:nc], sol[nc:]
                if np.any(mult < -1e-9) or np.any(A @ zc - r > 1e-9):
                    continue
                z = np.concatenate([zi, zc])
                f = float((z - s) @ H @ (z - s))
                if best is None or f < best[0]:
                    best = (f, z)
        return best

    def reference(self):
        spec = self.spec
        best = (math.inf, None, None)
        int_values = list(itertools.product(range(INT_LB, INT_UB + 1), repeat=spec.n_int))
        for c in self.comps:
            if spec.kind == "rosenbrock":
                z = self.shift[c]
                f = self.offset[c]
                if f < best[0]:
                    best = (f, c, z)
                continue
            for iv in int_values:
                res = self._qp_restriction(c, iv)
                if res is None:
                    continue
                f = res[0] + self.offset[c]
                if f < best[0]:
                    best = (f, c, res[1])
        return best


def _make_problem(spec: _Spec, seed: int, index: int) -> Problem:
    rng = np.random.default_rng([seed, index])
    fn = _SyntheticFunction(spec, rng)
    variables = [VariableSpec.categorical(s) for s in spec.n_categories]
    variables += [VariableSpec.integer(INT_LB, INT_UB) for _ in range(spec.n_int)]
    variables += [VariableSpec.continuous(CON_LB, CON_UB) for _ in range(spec.n_con)]
    domain = Domain(tuple(variables), name=spec.name)

    def evaluate(x: Point) -> Evaluation:
        f, g = fn.values(x.cat, x.qnt)
        return Evaluation.from_values(f, g)

    f_ref, c_ref, z_ref = fn.reference()
    ref_point = Point(c_ref, tuple(int(round(v)) for v in z_ref[: spec.n_int]), tuple(z_ref[spec.n_int:]))
    return Problem(spec.name, domain, spec.n_constraints, evaluate, known_best=f_ref, reference=ref_point,
                   meta={"kind": spec.kind, "function": fn})


def synthetic_suite(seed: int = 0) -> list:
    """The ten synthetic problems drawn with ``seed``."""
    return [_make_problem(spec, seed, i) for i, spec in enumerate(SPECS)]


def suite_problem(name: str, seed: int = 0) -> Problem:
    for i, spec in enumerate(SPECS):
        if spec.name == name:
            return _make_problem(spec, seed, i)
    raise KeyError(name)
