import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate
from scipy.stats import norm

from catmads.distances import ConstraintMapConfig
from catmads.domain import Domain, Evaluation, Point, VariableSpec, enumerate_components
from catmads.kernels import KernelHyperparams
from catmads.neighborhood import Surrogates
from catmads.solver import (
    DOMINATING, IMPROVING, UNSUCCESSFUL, BarrierState, MeshState, SolverConfig, best_outcome, cat_poll,
    extended_poll, lhs_doe, pb_update, poll_displacements, quant_poll, read_history, run, select_near_misses,
    write_history,
)
from catmads.solver.doe import lhs_unit
from catmads.solver.mesh import EXPANSION_CAP, householder_basis, snap_to_mesh
from catmads.solver.search import expected_improvement, probability_feasible, search_candidates
from catmads.surrogate import fit
from conftest import check_run_invariants, distinct_points, random_domain


# -- DoE -----------------------------------------------------------------------

def test_lhs_unit_strata():
    rng = np.random.default_rng(0)
    u = lhs_unit(4, 3, rng)
    for j in range(3):
        assert sorted(np.floor(u[:, j] * 4).astype(int)) == [0, 1, 2, 3]


def test_lhs_categorical_and_integer_strata():
    d = Domain((VariableSpec.categorical(3), VariableSpec.integer(1, 6), VariableSpec.continuous(0, 1)))
    pts = lhs_doe(d, 6, np.random.default_rng(1))
    assert sorted(p.cat[0] for p in pts) == [0, 0, 1, 1, 2, 2]
    assert sorted(p.int[0] for p in pts) == [1, 2, 3, 4, 5, 6]
    assert sorted(math.floor(p.con[0] * 6) for p in pts) == [0, 1, 2, 3, 4, 5]


@given(st.integers(0, 2 ** 32 - 1))
def test_lhs_points_are_valid(seed):
    from catmads.domain import validate
    rng = np.random.default_rng(seed)
    d = random_domain(rng)
    assert all(validate(d, p) for p in lhs_doe(d, 9, rng))


# -- mesh and polls ------------------------------------------------------------

def _box(n_con=2, n_int=0):
    vs = [VariableSpec.integer(0, 40) for _ in range(n_int)] + [VariableSpec.continuous(-2, 3) for _ in range(n_con)]
    return Domain(tuple(vs))


def test_mesh_updates():
    m = MeshState.initial(_box(), 1.0)
    assert (m.Delta, m.delta) == (1.0, 1.0)
    m = m.refine().refine()
    assert (m.Delta, m.delta, m.ratio) == (0.25, 0.0625, 4)
    for _ in range(40):
        m = m.enlarge()
    assert m.Delta == EXPANSION_CAP and m.delta == m.Delta  # delta = min(Delta, Delta^2)
    assert MeshState.initial(_box(n_int=1), 1.0).scale.tolist() == [4.0, 0.5, 0.5]


def test_householder_is_orthogonal():
    H = householder_basis(np.random.default_rng(0), 5)
    assert np.allclose(H @ H.T, np.eye(5))


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4), st.integers(0, 8))
def test_poll_stays_in_frame_and_on_mesh(seed, n, k):
    rng = np.random.default_rng(seed)
    d = _box(n)
    m = MeshState.initial(d, 1.0)
    for _ in range(k):
        m = m.refine()
    D = poll_displacements(d, m, rng)
    assert D.shape == (2 * n, n)
    assert np.all(np.abs(D) <= m.Delta * m.scale * (1 + 1e-12))
    steps = D / (m.delta * m.scale)
    assert np.allclose(steps, np.round(steps))
    assert np.all(np.abs(D).max(axis=1) > 0)
    assert np.allclose(D[:n], -D[n:])


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4))
def test_fine_poll_is_positive_spanning(seed, n):
    rng = np.random.default_rng(seed)
    d = _box(n)
    m = MeshState.initial(d, 2.0 ** -6)
    D = poll_displacements(d, m, rng)
    # [B; -B] with B of full rank spans R^n positively
    assert np.linalg.matrix_rank(D[:n]) == n


def test_integer_poll_moves_whole_units():
    rng = np.random.default_rng(3)
    d = _box(n_con=0, n_int=3)
    m = MeshState.initial(d, 1.0)
    for _ in range(12):
        m = m.refine()
    D = poll_displacements(d, m, rng)
    assert np.all(D == np.round(D))
    # even on a fine mesh every direction moves by at least one unit
    assert np.all(np.abs(D).max(axis=1) >= 1)
    D = poll_displacements(_box(n_con=1, n_int=2), m, rng)
    assert np.all(D[:, :2] == np.round(D[:, :2]))
    assert np.all(np.abs(D).max(axis=1) > 0)


def test_quant_poll_excludes_incumbent_and_projects():
    d = _box(2)
    x = Point((), (), (3.0, -2.0))  # corner: projection makes duplicates
    trials = quant_poll(d, x, MeshState.initial(d, 1.0), np.random.default_rng(0))
    keys = [t.key() for t in trials]
    assert x.key() not in keys and len(set(keys)) == len(keys)
    assert all(-2 <= v <= 3 for t in trials for v in t.con)


def test_snap_to_mesh():
    d = _box(1)
    m = MeshState.initial(d, 0.5)  # delta 0.25, scale 0.5: step 0.125
    out = snap_to_mesh(d, m, np.array([0.0]), np.array([[0.3], [10.0]]))
    assert out[:, 0].tolist() == [0.25, 3.0]


# -- progressive barrier -------------------------------------------------------

P = Point((), (), (0.0,))


def ev(f, h):
    return Evaluation(f, (math.sqrt(h),), h)


def test_pb_feasible_updates():
    s, o = pb_update(BarrierState(), P, ev(3.0, 0.0))
    assert o == DOMINATING and s.f_feasible == 3.0
    s, o = pb_update(s, P, ev(2.5, 0.0))
    assert o == DOMINATING and s.f_feasible == 2.5
    s2, o = pb_update(s, P, ev(2.5, 0.0))
    assert o == UNSUCCESSFUL and s2 is s


def test_pb_infeasible_updates():
    s, o = pb_update(BarrierState(), P, ev(5.0, 4.0))
    assert o == DOMINATING and s.h_max == math.inf
    s, o = pb_update(s, P, ev(4.0, 3.0))  # better in h and f
    assert o == DOMINATING and s.h_max == 3.0
    s, o = pb_update(s, P, ev(9.0, 2.0))  # lower h, higher f
    assert o == IMPROVING and s.h_max == 2.0 and s.infeasible[1].f == 9.0
    s2, o = pb_update(s, P, ev(0.0, 2.5))  # above h_max
    assert o == UNSUCCESSFUL and s2.infeasible == s.infeasible
    s2, o = pb_update(s, P, ev(8.0, 2.0))  # same h, lower f
    assert o == DOMINATING and s2.h_max == 2.0
    s2, o = pb_update(s, P, Evaluation.failure(1))
    assert o == UNSUCCESSFUL and s2 is s


def test_pb_threshold_drops_to_largest_lower_violation():
    s = BarrierState()
    s, _ = pb_update(s, P, ev(1.0, 10.0))
    s, _ = pb_update(s, P, ev(5.0, 6.0))    # improving, h_max -> 6
    s, o = pb_update(s, P, ev(9.0, 5.0))    # worse f, h 5: improving
    assert o == IMPROVING and s.h_max == 5.0
    s, o = pb_update(s, P, ev(20.0, 4.0))
    assert s.h_max == 4.0 and s.infeasible[1].h == 4.0


@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(0, 10)), min_size=1, max_size=60))
def test_pb_h_max_never_increases(seq):
    s = BarrierState()
    prev = s.h_max
    for f, h in seq:
        s, _ = pb_update(s, P, ev(f, h))
        assert s.h_max <= prev
        prev = s.h_max
        if s.infeasible is not None:
            assert s.infeasible[1].h <= s.h_max


def test_best_outcome():
    assert best_outcome(UNSUCCESSFUL, IMPROVING) == IMPROVING
    assert best_outcome(DOMINATING, IMPROVING) == DOMINATING
    assert best_outcome() == UNSUCCESSFUL


# -- search --------------------------------------------------------------------

def test_expected_improvement():
    assert expected_improvement([1.0], [0.0], 2.0)[0] == 0.0
    assert expected_improvement([1.0], [1.0], 1.0)[0] == pytest.approx(1 / math.sqrt(2 * math.pi))
    for mu, var, fb in ((0.3, 0.5, 0.0), (-1.0, 2.0, 0.5), (2.0, 0.1, 1.0)):
        sd = math.sqrt(var)
        oracle = integrate.quad(lambda y: max(fb - y, 0.0) * norm.pdf(y, mu, sd), mu - 12 * sd, mu + 12 * sd,
                                points=[fb])[0]
        assert expected_improvement([mu], [var], fb)[0] == pytest.approx(oracle, rel=1e-7, abs=1e-12)


def test_probability_feasible():
    p = probability_feasible([np.array([0.0, -1.0]), np.array([0.0, 5.0])], [np.array([1.0, 0.0]), np.array([1.0, 0.0])])
    assert p.tolist() == [pytest.approx(0.25), 0.0]


def test_search_candidates_on_mesh():
    d = Domain((VariableSpec.categorical(3), VariableSpec.continuous(0, 1)))
    m = MeshState.initial(d, 0.5)
    c = Point((1,), (), (0.5,))
    cands = search_candidates(d, c, m, np.random.default_rng(0), 200)
    assert len(cands) == 200
    step = m.delta * m.scale[0]
    off = np.array([(p.con[0] - 0.5) / step for p in cands])
    inside = (np.array([p.con[0] for p in cands]) > 0) & (np.array([p.con[0] for p in cands]) < 1)
    assert np.allclose(off[inside], np.round(off[inside]))
    local = cands[100:]
    assert sum(p.cat == (1,) for p in local) >= 50


# -- categorical and extended polls --------------------------------------------

def _cat_models():
    d = Domain((VariableSpec.categorical(4), VariableSpec.continuous(0, 1)))
    rng = np.random.default_rng(0)
    pts = distinct_points(d, 20, rng)
    hp = KernelHyperparams(np.array([1.0]), (np.array([0.3, 0.6, 0.9, 1.2]),))
    return d, Surrogates(fit(d, pts, [p.cat[0] + p.con[0] for p in pts], hp), [], 0)


def test_cat_poll_sizes():
    d, models = _cat_models()
    x = Point((2,), (), (0.25,))
    comps = enumerate_components(d)
    assert cat_poll(x, 1, models, candidates=comps) == []
    trials = cat_poll(x, 3, models, candidates=comps)
    assert len(trials) == 2
    assert all(t.con == x.con and t.cat != x.cat for t in trials)
    # objective weights: d_f grows with theta[u] + theta[v], so 0 then 1 come first
    assert [t.cat for t in trials] == [(0,), (1,)]
    assert [t.cat for t in cat_poll(x, 3, models, candidates=comps, hamming=True)] == [(0,), (1,)]


def test_select_near_misses():
    c = Evaluation(10.0, (-1.0,), 0.0)
    pts = [Point((i,), (), ()) for i in range(4)]
    trials = [(pts[0], Evaluation(10.3, (-1,), 0.0)), (pts[1], Evaluation(10.6, (-1,), 0.0)),
              (pts[2], Evaluation(10.1, (1,), 1.0)), (pts[3], Evaluation.failure(1))]
    assert [x for x, _ in select_near_misses(c, trials, 0.05)] == [pts[0]]
    ci = Evaluation(3.0, (1.0,), 1.0)
    trials = [(pts[0], Evaluation(0, (1.02,), 1.04)), (pts[1], Evaluation(0, (1.03,), 1.06)),
              (pts[2], Evaluation(0, (-1,), 0.0)), (pts[3], Evaluation(0, (1.01,), 1.02))]
    got = select_near_misses(ci, trials, 0.05, feasible=False, h_max=1.5)
    assert [x for x, _ in got] == [pts[3], pts[0]]
    assert select_near_misses(ci, trials, 0.05, feasible=False, h_max=1.03) == [(pts[3], trials[3][1])]


def test_extended_poll_budget_and_distinctness():
    d = Domain((VariableSpec.categorical(2), VariableSpec.continuous(0, 1), VariableSpec.continuous(0, 1)))
    m = MeshState.initial(d, 0.5)
    near = [(Point((0,), (), (0.5, 0.5)), None), (Point((1,), (), (0.5, 0.5)), None)]
    out = extended_poll(d, near, m, 100, np.random.default_rng(0))
    assert len(out) == 8 and len({p.key() for p in out}) == 8
    assert all(p.key() not in {y.key() for y, _ in near} for p in out)
    assert len(extended_poll(d, near, m, 3, np.random.default_rng(0))) == 3


# -- configuration -------------------------------------------------------------

def test_config_resolution():
    d = Domain((VariableSpec.categorical(4), VariableSpec.categorical(6), VariableSpec.continuous(0, 1)))
    cfg = SolverConfig().resolved(d)
    assert cfg.budget == 750 and cfg.doe_size == 150 and cfg.surrogate_cutoff == 248 and cfg.m == 5
    assert SolverConfig(budget=4000).resolved(d).surrogate_cutoff == 500
    with pytest.raises(ValueError):
        SolverConfig(budget=4).resolved(d)
    with pytest.raises(ValueError):
        SolverConfig.from_dict({"budgett": 3})
    with pytest.raises(ValueError):
        SolverConfig(neighborhood="gower")
    assert SolverConfig.from_dict(SolverConfig(m=4).as_dict()) == SolverConfig(m=4)


def test_config_load(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(SolverConfig(budget=99, xi=0.1).dump())
    assert SolverConfig.load(p) == SolverConfig(budget=99, xi=0.1)


# -- full runs -----------------------------------------------------------------

def toy_problem():
    d = Domain((VariableSpec.categorical(3), VariableSpec.integer(0, 6), VariableSpec.continuous(0, 1)))
    calls = []

    def bb(x):
        calls.append(x.key())
        c, (i,), (z,) = x.cat[0], x.int, x.con
        f = (z - 0.3 * c) ** 2 + 0.1 * (i - 2) ** 2 + [0.5, 0.0, 0.8][c]
        return Evaluation.from_values(f, (0.4 - z - 0.1 * i,))
    return d, bb, calls


def test_run_invariants_and_cache():
    d, bb, calls = toy_problem()
    res = run(d, bb, 1, SolverConfig(budget=120, seed=4))
    assert check_run_invariants(res, 120) == []
    assert len(calls) == len(res.history) == len(set(calls))
    assert res.best_feasible is not None and res.best_feasible.h == 0.0
    steps = {r.step for r in res.history}
    assert {"doe", "qpoll"} <= steps and steps <= {"doe", "search", "qpoll", "cpoll", "xpoll"}
    assert sum(r.step == "doe" for r in res.history) == 24


def test_run_is_deterministic():
    d, bb, _ = toy_problem()
    a = run(d, bb, 1, SolverConfig(budget=80, seed=9))
    b = run(d, bb, 1, SolverConfig(budget=80, seed=9))
    assert [(r.point, r.f, r.step) for r in a.history] == [(r.point, r.f, r.step) for r in b.history]


def test_run_variants():
    d, bb, _ = toy_problem()
    for kw in ({"use_search": False}, {"neighborhood": "hamming"}, {"poll_order": "cat-first"},
               {"extended_poll": False}, {"objective_distance": "prediction"}):
        res = run(d, bb, 1, SolverConfig(budget=70, seed=1, **kw))
        assert check_run_invariants(res, 70) == [], kw


def test_run_survives_failures():
    d, bb, _ = toy_problem()

    def flaky(x):
        if x.con[0] > 0.7:
            raise RuntimeError("solver diverged")
        if x.int[0] == 5:
            return Evaluation.from_values(math.nan, (0.0,))
        if x.int[0] == 6:
            return Evaluation.from_values(1.0, ())  # wrong constraint count
        return bb(x)
    res = run(d, flaky, 1, SolverConfig(budget=90, seed=2))
    assert len(res.history) == 90
    assert any(math.isinf(r.f) for r in res.history)
    assert check_run_invariants(res, 90) == []
    assert res.best_feasible is not None


def test_unpack_result():
    d, bb, _ = toy_problem()
    best, history = run(d, bb, 1, SolverConfig(budget=40, seed=0))
    assert best is not None and len(history) == 40


def test_history_round_trip(tmp_path):
    d, bb, _ = toy_problem()
    res = run(d, bb, 1, SolverConfig(budget=40, seed=3))
    path = tmp_path / "h.csv"
    write_history(path, res.history, 1)
    back = read_history(path, d)
    assert [(r.eval_index, r.point, r.f, r.g, r.h, r.step, r.incumbent) for r in back] == \
           [(r.eval_index, r.point, r.f, r.g, r.h, r.step, r.incumbent) for r in res.history]
    assert path.read_text().splitlines()[0] == "eval,step,point,f,g1,h,incumbent"


def test_pure_categorical_run():
    d = Domain((VariableSpec.categorical(4), VariableSpec.categorical(5)))
    res = run(d, lambda x: Evaluation.from_values(abs(x.cat[0] - 2) + abs(x.cat[1] - 3)), 0,
              SolverConfig(budget=20, seed=0))
    assert res.best_feasible.f == 0.0
    assert check_run_invariants(res, 20) == []
