"""Gaussian kernels for quantitative variables, one-hot Gaussian kernels for
categorical variables, and their product.

Every kernel here is normalised (value 1 on the diagonal).  Factors are
always combined in the same order, categorical variables first, so that
results are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

THETA_MIN = 1e-6
THETA_MAX = 1e6


def _clamp(a) -> np.ndarray:
    return np.clip(np.asarray(a, dtype=float), THETA_MIN, THETA_MAX)


@dataclass(frozen=True)
class KernelHyperparams:
    """Length-scale weights: one per quantitative variable, and one per
    category of every categorical variable."""

    theta_qnt: np.ndarray
    theta_cat: tuple

    def __post_init__(self):
        object.__setattr__(self, "theta_qnt", _clamp(np.atleast_1d(self.theta_qnt)).reshape(-1))
        object.__setattr__(self, "theta_cat", tuple(_clamp(np.atleast_1d(t)).reshape(-1) for t in self.theta_cat))

    @classmethod
    def ones(cls, n_qnt: int, n_categories) -> "KernelHyperparams":
        return cls(np.ones(n_qnt), tuple(np.ones(s) for s in n_categories))

    @classmethod
    def from_vector(cls, vec, n_qnt: int, n_categories) -> "KernelHyperparams":
        vec = np.asarray(vec, dtype=float)
        cats = []
        pos = 0
        for s in n_categories:
            cats.append(vec[pos:pos + s])
            pos += s
        return cls(vec[pos:pos + n_qnt], tuple(cats))

    def to_vector(self) -> np.ndarray:
        """Flatten as ``[theta_cat[0], ..., theta_cat[-1], theta_qnt]``."""
        return np.concatenate(list(self.theta_cat) + [self.theta_qnt]) if (self.theta_cat or self.theta_qnt.size) else np.zeros(0)

    @property
    def size(self) -> int:
        return self.theta_qnt.size + sum(t.size for t in self.theta_cat)

    def __eq__(self, other):
        if not isinstance(other, KernelHyperparams):
            return NotImplemented
        return np.array_equal(self.to_vector(), other.to_vector()) and self.theta_qnt.size == other.theta_qnt.size

    def __hash__(self):
        return hash(self.to_vector().tobytes())


def k_qnt(x, y, theta) -> float:
    """Product of one-dimensional Gaussian kernels ``exp(-theta_i (x_i - y_i)^2)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if not (x.shape == y.shape == theta.shape):
        raise ValueError(f"length mismatch: {x.shape}, {y.shape}, {theta.shape}")
    return float(np.exp(-np.sum(theta * (x - y) ** 2)))


def _cat_exponent(u, v, theta_cat) -> float:
    if len(u) != len(v) or len(u) != len(theta_cat):
        raise ValueError("categorical components and hyperparameters differ in length")
    s = 0.0
    for ui, vi, th in zip(u, v, theta_cat):
        if not (0 <= ui < len(th) and 0 <= vi < len(th)):
            raise IndexError(f"category index out of range for {len(th)} categories")
        if ui != vi:
            # exactly two one-hot coordinates differ
            s += th[ui] + th[vi]
    return s


def k_cat(u, v, theta_cat) -> float:
    """One-hot categorical kernel ``prod_i exp(-||E(u_i) - E(v_i)||^2_theta_i)``."""
    return float(np.exp(-_cat_exponent(u, v, theta_cat)))


def k_mixed(x, y, hp: KernelHyperparams) -> float:
    """Product of the categorical and quantitative kernels for two points."""
    return k_cat(x.cat, y.cat, hp.theta_cat) * k_qnt(x.qnt, y.qnt, hp.theta_qnt)


# -- vectorised forms --------------------------------------------------------

def cat_exponent_matrix(cat_a: np.ndarray, cat_b: np.ndarray, theta_cat, dtype=float) -> np.ndarray:
    """Pairwise weighted one-hot squared distances between two index arrays."""
    out = np.zeros((cat_a.shape[0], cat_b.shape[0]), dtype=dtype)
    for i, th in enumerate(theta_cat):
        a = cat_a[:, i]
        b = cat_b[:, i]
        th = np.asarray(th, dtype=dtype)
        diff = a[:, None] != b[None, :]
        out += np.where(diff, th[a][:, None] + th[b][None, :], dtype(0))
    return out


def qnt_exponent_matrix(qnt_a: np.ndarray, qnt_b: np.ndarray, theta_qnt, dtype=float) -> np.ndarray:
    out = np.zeros((qnt_a.shape[0], qnt_b.shape[0]), dtype=dtype)
    qa = np.asarray(qnt_a, dtype=dtype)
    qb = np.asarray(qnt_b, dtype=dtype)
    for i, th in enumerate(theta_qnt):
        out += dtype(th) * (qa[:, i][:, None] - qb[:, i][None, :]) ** 2
    return out


def cross_kernel(cat_a, qnt_a, cat_b, qnt_b, hp: KernelHyperparams, dtype=float) -> np.ndarray:
    """Kernel values between two stacks of points given as index/real arrays.

    ``dtype=np.longdouble`` evaluates the kernel in extended precision.
    """
    kc = np.exp(-cat_exponent_matrix(cat_a, cat_b, hp.theta_cat, dtype))
    kq = np.exp(-qnt_exponent_matrix(qnt_a, qnt_b, hp.theta_qnt, dtype))
    return kc * kq


def kernel_matrix(points, hp: KernelHyperparams) -> np.ndarray:
    """Symmetric matrix of ``k_mixed`` over all pairs of ``points``."""
    points = list(points)
    if not points:
        raise ValueError("need at least one point")
    cat = np.array([p.cat for p in points], dtype=np.int64).reshape(len(points), -1)
    qnt = np.array([p.qnt for p in points], dtype=float).reshape(len(points), -1)
    return cross_kernel(cat, qnt, cat, qnt, hp)


def cat_kernel_to_many(u, comps: np.ndarray, theta_cat) -> np.ndarray:
    """``k_cat(u, v)`` for every row ``v`` of ``comps``."""
    u = np.asarray(u, dtype=np.int64).reshape(1, -1)
    return np.exp(-cat_exponent_matrix(u, np.asarray(comps, dtype=np.int64), theta_cat))[0]
