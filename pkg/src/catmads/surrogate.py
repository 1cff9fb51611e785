"""Noiseless Gaussian-process regression on mixed-variable domains."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import mpmath as mp
import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from .domain import Domain, Point, points_to_arrays
from .kernels import (
    THETA_MAX,
    THETA_MIN,
    KernelHyperparams,
    cross_kernel,
)

logger = logging.getLogger(__name__)

JITTER_START = 1e-10
JITTER_MAX = 1e-4
LOG_2PI = math.log(2.0 * math.pi)


class GPFitError(RuntimeError):
    pass


@dataclass(frozen=True)
class HyperoptConfig:
    n_starts: int = 5
    max_iters: int = 200
    seed: int = 0


def _cholesky_with_jitter(K: np.ndarray, jitter: float = JITTER_START):
    n = K.shape[0]
    while jitter <= JITTER_MAX * (1 + 1e-9):
        try:
            L = cholesky(K + jitter * np.eye(n), lower=True, check_finite=False)
            return L, jitter
        except LinAlgError:
            jitter *= 10.0
    raise GPFitError("kernel matrix is not positive definite even with maximal jitter")


@dataclass(frozen=True, eq=False)
class GPModel:
    domain: Domain
    train_points: tuple
    train_cat: np.ndarray
    train_qnt: np.ndarray  # rescaled to the unit box
    train_targets: np.ndarray  # standardised
    target_mean: float
    target_std: float
    hp: KernelHyperparams
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float

    @property
    def n_train(self) -> int:
        return len(self.train_points)

    def predict(self, x: Point):
        return predict(self, x)

    def predict_arrays(self, cat: np.ndarray, qnt: np.ndarray):
        """Mean and variance at points given as raw index/real arrays."""
        qnt_u = _to_unit(self.domain, qnt)
        ks = cross_kernel(cat, qnt_u, self.train_cat, self.train_qnt, self.hp)
        mean = ks @ self.alpha
        v = solve_triangular(self.chol, ks.T, lower=True, check_finite=False)
        var = 1.0 - np.sum(v * v, axis=0)
        var = np.maximum(var, 0.0)
        return self.target_mean + self.target_std * mean, var * self.target_std ** 2

    def predict_many(self, points: Sequence[Point]):
        cat, qnt = points_to_arrays(self.domain, points)
        return self.predict_arrays(cat, qnt)


def _to_unit(domain: Domain, qnt: np.ndarray) -> np.ndarray:
    lb = domain.qnt_lower
    span = domain.qnt_upper - lb
    span = np.where(span > 0, span, 1.0)
    q = np.asarray(qnt, dtype=float)
    if q.ndim < 2:
        q = q.reshape(1, -1)
    return (q - lb) / span


def prepare_data(points, targets):
    """Drop non-finite targets and later duplicates of an already-seen point."""
    seen = set()
    keep_p, keep_t = [], []
    for p, t in zip(points, targets):
        t = float(t)
        if not math.isfinite(t):
            continue
        k = p.key()
        if k in seen:
            continue
        seen.add(k)
        keep_p.append(p)
        keep_t.append(t)
    return keep_p, np.array(keep_t, dtype=float)


def _standardise(y: np.ndarray):
    mean = float(np.mean(y))
    std = float(np.std(y))
    if not std > 1e-12 * max(1.0, abs(mean)):
        std = 1.0
    return (y - mean) / std, mean, std


def fit(domain: Domain, points, targets, hp: Optional[KernelHyperparams] = None) -> GPModel:
    """Condition a GP with fixed hyperparameters on the finite targets."""
    pts, y = prepare_data(points, targets)
    if len(pts) < 2:
        raise GPFitError("need at least two points with finite targets")
    if hp is None:
        hp = KernelHyperparams.ones(domain.n_qnt, domain.n_categories)
    cat, qnt = points_to_arrays(domain, pts)
    qnt_u = _to_unit(domain, qnt)
    ys, mean, std = _standardise(y)
    K = cross_kernel(cat, qnt_u, cat, qnt_u, hp)
    L, jitter = _cholesky_with_jitter(K)
    alpha = _refined_weights(K, L, ys)
    return GPModel(domain, tuple(pts), cat, qnt_u, ys, mean, std, hp, L, alpha, jitter)


def _refined_weights(K: np.ndarray, L: np.ndarray, y: np.ndarray, steps: int = 60) -> np.ndarray:
    """Solve ``K alpha = y`` by conjugate gradients preconditioned with the
    jittered factor.

    The jitter only stabilises the factorisation.  Plain refinement against
    the unjittered ``K`` contracts by ``j / (lambda_min + j)`` per step, which
    is close to 1 once the smallest eigenvalue drops below the jitter; the
    preconditioned spectrum ``lambda / (lambda + j)`` is mild enough for CG.
    The iterate with the smallest residual is kept.
    """
    alpha = cho_solve((L, True), y, check_finite=False)
    res = y - K @ alpha
    best, best_err = alpha, float(np.max(np.abs(res)))
    tol = 1e-14 * max(1.0, float(np.max(np.abs(y))))
    z = cho_solve((L, True), res, check_finite=False)
    d = z.copy()
    rz = float(res @ z)
    for _ in range(steps):
        if best_err <= tol or not rz > 0:
            break
        Kd = K @ d
        dKd = float(d @ Kd)
        if not dKd > 0:
            break
        step = rz / dKd
        alpha = alpha + step * d
        res = res - step * Kd
        true_res = y - K @ alpha
        err = float(np.max(np.abs(true_res)))
        if err < best_err:
            best, best_err = alpha, err
        z = cho_solve((L, True), res, check_finite=False)
        rz_new = float(res @ z)
        d = z + (rz_new / rz) * d
        rz = rz_new
    return best


def predict(model: GPModel, x: Point):
    mean, var = model.predict_many([x])
    return float(mean[0]), float(var[0])


# models up to this size get their evidence residuals in 34-digit arithmetic
EXACT_EVIDENCE_MAX = 120


def _mp_kernel(model: GPModel):
    """Kernel plus jitter as mpmath numbers, from the model's own arrays."""
    n = model.n_train
    th_c = [[mp.mpf(float(t)) for t in th] for th in model.hp.theta_cat]
    th_q = [mp.mpf(float(t)) for t in model.hp.theta_qnt]
    q = [[mp.mpf(float(v)) for v in row] for row in model.train_qnt]
    c = model.train_cat
    K = [[mp.mpf(0)] * n for _ in range(n)]
    for i in range(n):
        K[i][i] = 1 + mp.mpf(model.jitter)
        for j in range(i):
            s = mp.mpf(0)
            for v, th in enumerate(th_c):
                if c[i, v] != c[j, v]:
                    s += th[c[i, v]] + th[c[j, v]]
            for k, t in enumerate(th_q):
                s += t * (q[i][k] - q[j][k]) ** 2
            K[i][j] = K[j][i] = mp.exp(-s)
    return K


def _evidence_quadratic(model: GPModel) -> float:
    """``y^T (K + jitter I)^-1 y`` refined to near full double accuracy.

    A single solve with the float64 factor loses up to ~1e-7 absolute once
    the smallest eigenvalue nears the jitter, partly because the kernel
    entries are rounded.  Refinement steps reuse the factor; residuals come
    from an exact-ish kernel (mpmath for small models, ``np.longdouble``
    above ``EXACT_EVIDENCE_MAX`` points).
    """
    L = model.chol
    yf = model.train_targets
    first = cho_solve((L, True), yf, check_finite=False)
    if model.n_train <= EXACT_EVIDENCE_MAX:
        with mp.workdps(34):
            K = _mp_kernel(model)
            y = [mp.mpf(float(v)) for v in yf]
            alpha = [mp.mpf(float(v)) for v in first]
            quad = mp.fsum(a * b for a, b in zip(y, alpha))
            for _ in range(20):
                res = [y[i] - mp.fsum(K[i][j] * alpha[j] for j in range(len(y))) for i in range(len(y))]
                step = cho_solve((L, True), np.array([float(r) for r in res]), check_finite=False)
                alpha = [a + mp.mpf(float(s)) for a, s in zip(alpha, step)]
                new_quad = mp.fsum(a * b for a, b in zip(y, alpha))
                done = abs(new_quad - quad) <= mp.mpf(1e-20) * max(1, abs(quad))
                quad = new_quad
                if done:
                    break
            return float(quad)
    ld = np.longdouble
    K = cross_kernel(model.train_cat, model.train_qnt, model.train_cat, model.train_qnt, model.hp, dtype=ld)
    K[np.diag_indices_from(K)] += ld(model.jitter)
    y = yf.astype(ld)
    alpha = first.astype(ld)
    quad = y @ alpha
    for _ in range(20):
        alpha = alpha + cho_solve((L, True), (y - K @ alpha).astype(float), check_finite=False).astype(ld)
        new_quad = y @ alpha
        done = abs(new_quad - quad) <= 1e-17 * max(1.0, abs(quad))
        quad = new_quad
        if done:
            break
    return float(quad)


def log_marginal_likelihood(model: GPModel) -> float:
    """Log evidence of the standardised targets under ``K + jitter I``.

    The log-determinant takes the factor's diagonal plus the correction
    ``log det(I + L^-1 E L^-T)`` for its defect ``E = K - L L^T``, with ``K``
    in extended precision.  Not used inside the solver loop, so accuracy is
    preferred over speed.
    """
    ld = np.longdouble
    L = model.chol
    n = model.n_train
    K = cross_kernel(model.train_cat, model.train_qnt, model.train_cat, model.train_qnt, model.hp, dtype=ld)
    K[np.diag_indices_from(K)] += ld(model.jitter)
    E = (K - L.astype(ld) @ L.T.astype(ld)).astype(float)
    M = solve_triangular(L, solve_triangular(L, E, lower=True, check_finite=False).T, lower=True, check_finite=False)
    sign, corr = np.linalg.slogdet(np.eye(n) + M)
    logdet = 2.0 * np.sum(np.log(np.diag(L))) + (corr if sign > 0 else 0.0)
    return float(-0.5 * _evidence_quadratic(model) - 0.5 * logdet - 0.5 * n * LOG_2PI)


class _Likelihood:
    """Negative log marginal likelihood over log-hyperparameters, with gradient."""

    def __init__(self, domain: Domain, cat: np.ndarray, qnt_u: np.ndarray, y: np.ndarray):
        self.domain = domain
        self.y = y
        n = y.size
        blocks = []
        for i, s in enumerate(domain.n_categories):
            a = cat[:, i]
            differ = a[:, None] != a[None, :]
            for c in range(s):
                hit = (a == c).astype(float)
                blocks.append((hit[:, None] + hit[None, :]) * differ)
        for q in range(domain.n_qnt):
            blocks.append((qnt_u[:, q][:, None] - qnt_u[:, q][None, :]) ** 2)
        self.A = np.array(blocks).reshape(len(blocks), n, n)

    def __call__(self, log_theta: np.ndarray):
        theta = np.exp(log_theta)
        S = np.tensordot(theta, self.A, axes=1)
        K = np.exp(-S)
        try:
            L, _ = _cholesky_with_jitter(K)
        except GPFitError:
            return 1e25, np.zeros_like(log_theta)
        n = self.y.size
        alpha = cho_solve((L, True), self.y, check_finite=False)
        lml = -0.5 * self.y @ alpha - np.sum(np.log(np.diag(L))) - 0.5 * n * LOG_2PI
        Kinv = cho_solve((L, True), np.eye(n), check_finite=False)
        B = (np.outer(alpha, alpha) - Kinv) * K
        grad = -0.5 * theta * np.tensordot(self.A, B, axes=([1, 2], [0, 1]))
        return -float(lml), -grad

    def value(self, log_theta):
        return -self(log_theta)[0]

    def gradient(self, log_theta):
        return -self(log_theta)[1]


def likelihood_function(domain: Domain, points, targets) -> _Likelihood:
    """Log-likelihood evaluator (value and gradient in log-theta) for a data set."""
    pts, y = prepare_data(points, targets)
    cat, qnt = points_to_arrays(domain, pts)
    ys, _, _ = _standardise(y)
    return _Likelihood(domain, cat, _to_unit(domain, qnt), ys)


def optimize_hyperparams(
    domain: Domain,
    points,
    targets,
    config: HyperoptConfig = HyperoptConfig(),
    init: Optional[KernelHyperparams] = None,
) -> KernelHyperparams:
    """Multi-start L-BFGS-B maximisation of the marginal likelihood in log-theta.

    The first start is ``init`` (all ones by default); the others are drawn
    log-uniformly in ``[1e-2, 1e2]``.
    """
    pts, y = prepare_data(points, targets)
    if len(pts) < 2:
        raise GPFitError("need at least two points with finite targets")
    sizes = domain.n_categories
    dim = domain.n_qnt + sum(sizes)
    ones = KernelHyperparams.ones(domain.n_qnt, sizes)
    if dim == 0:
        return ones
    nll = likelihood_function(domain, pts, y)
    rng = np.random.default_rng(config.seed)
    start0 = np.log((init or ones).to_vector())
    starts = [start0] + [rng.uniform(math.log(1e-2), math.log(1e2), dim) for _ in range(max(0, config.n_starts - 1))]
    bounds = [(math.log(THETA_MIN), math.log(THETA_MAX))] * dim
    best_x, best_val = None, math.inf
    for x0 in starts:
        # The noiseless likelihood is steep near small theta; left unscaled, the
        # first Cauchy step overshoots onto the flat plateau at the upper bound.
        scale = max(1.0, float(np.max(np.abs(nll(x0)[1]))))

        def scaled(x, scale=scale):
            v, g = nll(x)
            return v / scale, g / scale

        try:
            res = minimize(scaled, x0, jac=True, method="L-BFGS-B", bounds=bounds,
                           options={"maxiter": config.max_iters, "gtol": 1e-5 / scale})
        except (ValueError, FloatingPointError, LinAlgError) as exc:  # pragma: no cover - defensive
            logger.debug("hyperparameter start failed: %s", exc)
            continue
        val = float(res.fun) * scale
        # a local search never ends worse than where it started
        f0 = nll(x0)[0]
        x = res.x if val <= f0 else x0
        val = min(val, f0)
        if math.isfinite(val) and val < 1e24 and val < best_val:
            best_x, best_val = x, val
    if best_x is None:
        logger.warning("every hyperparameter start failed; falling back to unit weights")
        return ones
    return KernelHyperparams.from_vector(np.exp(best_x), domain.n_qnt, sizes)


def fit_optimized(domain: Domain, points, targets, config: HyperoptConfig = HyperoptConfig(),
                  init: Optional[KernelHyperparams] = None) -> GPModel:
    hp = optimize_hyperparams(domain, points, targets, config, init=init)
    return fit(domain, points, targets, hp)
