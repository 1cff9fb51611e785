"""Analytic stand-in for a mechanical-part design problem.

Variables: supplier {A, B}, material {ALUM, STEEL, COMP, WOOD}, shape
{SQUARE, CIRCLE, ELLIPSE}, length ``l`` in [5, 10] and recycled ratio ``r``
in [0, 1].  The objective is a strain-like quantity; the two constraints
stand for a budget and an ecological score.

With ``D = |l - 5.5| / 5`` and ``R = 1 - r`` both constraints grow away
from the sweet spot ``l = 5.5, r = 1``, where they equal the component's
offsets.  A component admits feasible points iff both offsets are negative,
which happens for exactly six of the 24 components:

    component                  feasible share   best objective
    (B, WOOD,  CIRCLE)         ~8 %             ~26
    (A, WOOD,  ELLIPSE)        ~8 %             ~21
    (A, COMP,  SQUARE)         ~0.4 %           ~8.4 (overall best)
    (B, STEEL, SQUARE)         ~0.3 %           ~9.6
    (A, ALUM,  CIRCLE)         ~0.3 %           ~18
    (B, ALUM,  SQUARE)         ~0.02 %          ~14

(shares on a 201 x 201 grid).  Offsets are additive over the three
categorical variables, then divided by a per-component sharpness; large
sharpness pulls the offsets toward zero and shrinks the feasible region
without changing which components can be feasible.
"""

from __future__ import annotations

import numpy as np

from ..domain import Domain, Evaluation, Point, VariableSpec
from .base import Problem

SUPPLIERS = ("A", "B")
MATERIALS = ("ALUM", "STEEL", "COMP", "WOOD")
SHAPES = ("SQUARE", "CIRCLE", "ELLIPSE")
SWEET_LENGTH = 5.5

# additive corner offsets: [supplier(2), material(4), shape(3)]
_BUDGET = np.array([1.0, 0.7, -0.45, -0.45, -1.0, -0.15, -0.4, -0.7, -1.0])
_ECO = np.array([-1.0, -0.7, 0.4, 0.7, 1.0, 0.1, -0.15, 0.45, 0.75])
# multiplicative objective scales, same layout
_STRAIN = np.array([3.4699, 3.2368, 1.9868, 1.4213, 1.1678, 3.4059, 2.1693, 2.6488, 1.9547])

# sharpness of the six feasible components; 1 elsewhere
_SHARPNESS = {
    (1, 3, 1): 0.8658,
    (0, 3, 2): 0.88757,
    (1, 1, 0): 5.30973,
    (0, 0, 1): 5.71429,
    (0, 2, 0): 5.82524,
    (1, 0, 0): 29.0,
}


def _sharpness_table() -> np.ndarray:
    t = np.ones((2, 4, 3))
    for (u, a, s), k in _SHARPNESS.items():
        t[u, a, s] = k
    return t


_SHARP_TABLE = _sharpness_table()


def _additive(table, u, a, s):
    return table[u] + table[2 + a] + table[6 + s]


def mechanical_values(u, a, s, l, r):
    """Objective and both constraints; all arguments broadcast as arrays."""
    u = np.asarray(u)
    a = np.asarray(a)
    s = np.asarray(s)
    L = (np.asarray(l, dtype=float) - 5.0) / 5.0
    D = np.abs(np.asarray(l, dtype=float) - SWEET_LENGTH) / 5.0
    R = 1.0 - np.asarray(r, dtype=float)
    k = _SHARP_TABLE[u, a, s]
    g1 = _additive(_BUDGET, u, a, s) / k + 0.6 * D + 0.3 * R
    g2 = _additive(_ECO, u, a, s) / k + 0.3 * D + 0.6 * R
    scale = np.exp(_additive(np.log(_STRAIN), u, a, s))
    f = scale * (1.0 - 0.25 * L - 0.1 * R + 0.1 * L * R)
    return f, g1, g2


def mechanical_domain() -> Domain:
    return Domain((
        VariableSpec.categorical(2, SUPPLIERS, name="supplier"),
        VariableSpec.categorical(4, MATERIALS, name="material"),
        VariableSpec.categorical(3, SHAPES, name="shape"),
        VariableSpec.continuous(5.0, 10.0, name="length"),
        VariableSpec.continuous(0.0, 1.0, name="recycled"),
    ), name="mech-analog")


def mechanical_analog() -> Problem:
    domain = mechanical_domain()

    def evaluate(x: Point) -> Evaluation:
        u, a, s = x.cat
        l, r = x.con
        f, g1, g2 = mechanical_values(u, a, s, l, r)
        return Evaluation.from_values(float(f), (float(g1), float(g2)))

    return Problem("mech-analog", domain, 2, evaluate,
                   meta={"feasible_components": sorted(_SHARPNESS)})


def grid_census(n: int = 201):
    """Feasible share and best feasible objective of every component on an
    ``n x n`` grid of (l, r)."""
    ls = np.linspace(5.0, 10.0, n)
    rs = np.linspace(0.0, 1.0, n)
    L, Rr = np.meshgrid(ls, rs, indexing="ij")
    out = {}
    for u in range(2):
        for a in range(4):
            for s in range(3):
                f, g1, g2 = mechanical_values(u, a, s, L, Rr)
                feas = (g1 <= 0) & (g2 <= 0)
                best = float(f[feas].min()) if feas.any() else float("inf")
                out[(u, a, s)] = (float(feas.mean()), best)
    return out
