import math

import numpy as np
import mpmath as mp
import pytest
from hypothesis import given, strategies as st

from catmads.domain import Domain, Point, VariableSpec
from catmads.kernels import KernelHyperparams
from catmads.surrogate import (
    GPFitError, HyperoptConfig, fit, likelihood_function, log_marginal_likelihood,
    optimize_hyperparams, predict, prepare_data,
)
from conftest import distinct_points, random_domain, smooth_targets


def dense_lml_oracle(domain, points, targets, hp, jitter, digits=50):
    """Log evidence from an explicit inverse and determinant in 50-digit
    arithmetic, with the kernel built from explicit one-hot vectors."""
    mp.mp.dps = digits
    y = np.asarray(targets, dtype=float)
    std = y.std()
    ys = (y - y.mean()) / (std if std > 1e-12 * max(1, abs(y.mean())) else 1.0)
    lb, ub = domain.qnt_lower, domain.qnt_upper
    span = np.where(ub > lb, ub - lb, 1.0)
    n = len(points)
    K = mp.matrix(n, n)
    for i, a in enumerate(points):
        for j, b in enumerate(points):
            s = mp.mpf(0)
            for ai, bi, th in zip(a.cat, b.cat, hp.theta_cat):
                ea, eb = np.eye(len(th))[ai], np.eye(len(th))[bi]
                s += sum(mp.mpf(float(t)) * mp.mpf(float(e)) ** 2 for t, e in zip(th, ea - eb))
            qa = (np.array(a.qnt) - lb) / span
            qb = (np.array(b.qnt) - lb) / span
            s += sum(mp.mpf(float(t)) * (mp.mpf(float(u)) - mp.mpf(float(v))) ** 2
                     for t, u, v in zip(hp.theta_qnt, qa, qb))
            K[i, j] = mp.exp(-s) + (jitter if i == j else 0)
    yv = mp.matrix([mp.mpf(float(v)) for v in ys])
    quad = (yv.T * mp.inverse(K) * yv)[0, 0]
    return float(-quad / 2 - mp.log(mp.det(K)) / 2 - n * mp.log(2 * mp.pi) / 2)


def _line():
    return Domain((VariableSpec.continuous(-1.0, 1.0),))


def test_needs_two_points():
    d = _line()
    with pytest.raises(GPFitError):
        fit(d, [Point((), (), (0.0,))], [1.0])
    with pytest.raises(GPFitError):
        fit(d, [Point((), (), (0.0,)), Point((), (), (0.5,))], [1.0, math.nan])


def test_prepare_data_drops_failures_and_duplicates():
    p = Point((), (), (0.1,))
    q = Point((), (), (0.2,))
    pts, y = prepare_data([p, q, p, Point((), (), (0.3,))], [1.0, 2.0, 5.0, math.inf])
    assert pts == [p, q] and y.tolist() == [1.0, 2.0]


def test_independent_points_closed_form():
    # kernel ~ identity: LML = -n/2 (1 + log 2 pi) for standardised targets
    d = _line()
    pts = [Point((), (), (x,)) for x in (-1.0, 0.0, 1.0)]
    hp = KernelHyperparams(np.array([1e6]), ())
    model = fit(d, pts, [3.0, -1.0, 7.0], hp)
    assert log_marginal_likelihood(model) == pytest.approx(-1.5 * (1 + math.log(2 * math.pi)), abs=1e-8)
    # far from the data the prediction reverts to the prior
    mean, var = predict(model, Point((), (), (0.5,)))
    assert mean == pytest.approx(3.0)
    assert var == pytest.approx(np.var([3.0, -1.0, 7.0]))


@given(st.integers(0, 2 ** 32 - 1))
def test_lml_matches_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    d = random_domain(rng)
    pts = distinct_points(d, int(rng.integers(3, 9)), rng)
    if len(pts) < 2:
        return
    # targets from a smooth function; iid noise at near-duplicate inputs
    # drives the evidence to ~-1e5, where float64 cannot resolve 1e-8
    y = smooth_targets(d, pts, rng)
    hp = KernelHyperparams(np.exp(rng.uniform(-1, 2, d.n_qnt)), tuple(np.exp(rng.uniform(-1, 1, s)) for s in d.n_categories))
    model = fit(d, pts, y, hp)
    assert log_marginal_likelihood(model) == pytest.approx(dense_lml_oracle(d, pts, y, hp, model.jitter), abs=1e-8)


@given(st.integers(0, 2 ** 32 - 1))
def test_interpolates_training_data(seed):
    rng = np.random.default_rng(seed)
    d = random_domain(rng)
    pts = distinct_points(d, 10, rng)
    if len(pts) < 2:
        return
    y = smooth_targets(d, pts, rng)
    hp = KernelHyperparams(np.exp(rng.uniform(-1, 3, d.n_qnt)), tuple(np.exp(rng.uniform(-1, 1, s)) for s in d.n_categories))
    model = fit(d, pts, y, hp)
    mean, var = model.predict_many(pts)
    assert np.all(np.abs(mean - y) <= 1e-6 * np.maximum(1, np.abs(y)))
    assert np.all(var <= 1e-8 * model.target_std ** 2)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    d = Domain((VariableSpec.categorical(3), VariableSpec.integer(0, 5), VariableSpec.continuous(0, 2)))
    pts = distinct_points(d, 12, rng)
    y = np.array([p.qnt[1] ** 2 + p.cat[0] + 0.1 * p.qnt[0] for p in pts])
    nll = likelihood_function(d, pts, y)
    x = np.log([0.5, 1.5, 0.8, 2.0, 3.0])
    _, g = nll(x)
    h = 1e-6
    fd = np.array([(nll(x + h * e)[0] - nll(x - h * e)[0]) / (2 * h) for e in np.eye(x.size)])
    assert np.allclose(g, fd, rtol=1e-4, atol=1e-7)


def test_optimised_fit_predicts_parabola():
    d = _line()
    xs = np.linspace(-1, 1, 8)
    pts = [Point((), (), (x,)) for x in xs]
    hp = optimize_hyperparams(d, pts, xs ** 2, HyperoptConfig(n_starts=3, max_iters=100, seed=0))
    model = fit(d, pts, xs ** 2, hp)
    for x in (-0.55, 0.3, 0.9):
        assert predict(model, Point((), (), (x,)))[0] == pytest.approx(x * x, abs=0.05)


def test_optimisation_is_deterministic():
    rng = np.random.default_rng(3)
    d = Domain((VariableSpec.categorical(4), VariableSpec.continuous(0, 1)))
    pts = distinct_points(d, 15, rng)
    y = [p.cat[0] * p.con[0] for p in pts]
    cfg = HyperoptConfig(n_starts=3, max_iters=50, seed=11)
    assert optimize_hyperparams(d, pts, y, cfg) == optimize_hyperparams(d, pts, y, cfg)


def test_optimisation_does_not_lower_evidence():
    rng = np.random.default_rng(4)
    d = Domain((VariableSpec.categorical(3), VariableSpec.continuous(0, 1)))
    pts = distinct_points(d, 12, rng)
    y = [math.sin(4 * p.con[0]) + p.cat[0] for p in pts]
    ones = KernelHyperparams.ones(1, (3,))
    hp = optimize_hyperparams(d, pts, y, HyperoptConfig(n_starts=2, max_iters=100))
    assert log_marginal_likelihood(fit(d, pts, y, hp)) >= log_marginal_likelihood(fit(d, pts, y, ones)) - 1e-9


def test_constant_targets():
    d = _line()
    pts = [Point((), (), (x,)) for x in (-0.5, 0.0, 0.5)]
    model = fit(d, pts, [2.0, 2.0, 2.0])
    assert predict(model, Point((), (), (0.2,)))[0] == pytest.approx(2.0)
