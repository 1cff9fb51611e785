"""Categorical distances derived from the surrogates.

``d_f`` measures proximity with respect to the objective through the
categorical kernel of the objective GP.  ``d_g`` measures proximity with
respect to the constraints through relaxed, normalised constraint
predictions; it vanishes between components predicted to be feasible.
In the mixed setting the quantitative component is held fixed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .kernels import cat_kernel_to_many, k_cat


@dataclass(frozen=True)
class ConstraintMapConfig:
    lam: float = 1.0
    p: float = 2.0
    normalization: str = "minmax"

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.p < 1:
            raise ValueError("p must be >= 1")
        if self.normalization != "minmax":
            raise ValueError(f"unsupported normalization {self.normalization!r}")


def d_f(u, v, theta_cat) -> float:
    """Kernel-induced squared distance ``2 - 2 k_cat(u, v)``."""
    return max(0.0, 2.0 - 2.0 * k_cat(u, v, theta_cat))


def d_f_many(u, comps, theta_cat) -> np.ndarray:
    return np.maximum(0.0, 2.0 - 2.0 * cat_kernel_to_many(u, comps, theta_cat))


def d_f_fallback(u, v, mean_fn: Callable) -> float:
    """``|f(u) - f(v)|`` for a prediction function of the component."""
    return abs(float(mean_fn(u)) - float(mean_fn(v)))


def _stack(comps) -> np.ndarray:
    comps = [tuple(c) for c in comps]
    return np.array(comps, dtype=np.int64).reshape(len(comps), -1)


def relaxed_normalised(mean: np.ndarray, std: np.ndarray, lam: float) -> np.ndarray:
    """Apply the relaxation test and min-max normalisation column by column.

    ``mean`` and ``std`` are (n_candidates, n_constraints).  Entries whose
    relaxed prediction ``mean - lam * std`` is nonpositive map to 0; the
    others are min-max normalised over the entries that are positive for
    that constraint, and map to 1 when those all share one value.
    """
    mean = np.asarray(mean, dtype=float)
    out = np.zeros_like(mean)
    positive = (mean - lam * np.asarray(std, dtype=float)) > 0.0
    for j in range(mean.shape[1]):
        mask = positive[:, j]
        if not mask.any():
            continue
        vals = mean[mask, j]
        lo, hi = vals.min(), vals.max()
        if hi - lo > 0:
            out[mask, j] = (vals - lo) / (hi - lo)
        else:
            out[mask, j] = 1.0
    return np.clip(out, 0.0, 1.0)


class ConstraintMap:
    """Relaxed, normalised constraint predictions over a candidate set.

    Normalisation constants depend on the candidate set, so ``g_plus`` and
    ``d_g`` are only meaningful between members of the same map.
    """

    def __init__(self, candidates, x_qnt, constraint_models: Sequence, cfg: ConstraintMapConfig = ConstraintMapConfig()):
        self.candidates = [tuple(int(c) for c in comp) for comp in candidates]
        self.index = {c: i for i, c in enumerate(self.candidates)}
        self.cfg = cfg
        n, J = len(self.candidates), len(constraint_models)
        mean = np.zeros((n, J))
        std = np.zeros((n, J))
        if J:
            cat = _stack(self.candidates)
            qnt = np.tile(np.asarray(x_qnt, dtype=float).reshape(1, -1), (n, 1))
            for j, model in enumerate(constraint_models):
                m, v = model.predict_arrays(cat, qnt)
                mean[:, j] = m
                std[:, j] = np.sqrt(v)
        self.mean = mean
        self.std = std
        self.values = relaxed_normalised(mean, std, cfg.lam) if J else mean

    @classmethod
    def from_predictions(cls, candidates, mean, std, cfg: ConstraintMapConfig = ConstraintMapConfig()):
        obj = cls.__new__(cls)
        obj.candidates = [tuple(int(c) for c in comp) for comp in candidates]
        obj.index = {c: i for i, c in enumerate(obj.candidates)}
        obj.cfg = cfg
        obj.mean = np.asarray(mean, dtype=float).reshape(len(obj.candidates), -1)
        obj.std = np.asarray(std, dtype=float).reshape(len(obj.candidates), -1)
        obj.values = relaxed_normalised(obj.mean, obj.std, cfg.lam)
        return obj

    @property
    def n_constraints(self) -> int:
        return self.values.shape[1]

    def g_plus(self, u) -> np.ndarray:
        return self.values[self.index[tuple(u)]]

    def predicted_feasible(self, u) -> bool:
        i = self.index[tuple(u)]
        return bool(np.all(self.mean[i] - self.cfg.lam * self.std[i] <= 0.0))

    def d_g(self, u, v) -> float:
        return float(np.linalg.norm(self.g_plus(u) - self.g_plus(v), ord=self.cfg.p)) if self.n_constraints else 0.0

    def d_g_from(self, u) -> np.ndarray:
        """``d_g(u, v)`` for every candidate ``v`` in order."""
        if not self.n_constraints:
            return np.zeros(len(self.candidates))
        diff = np.abs(self.values - self.g_plus(u)[None, :])
        if np.isinf(self.cfg.p):
            return diff.max(axis=1)
        return np.sum(diff ** self.cfg.p, axis=1) ** (1.0 / self.cfg.p)


def g_plus(u, x_qnt, constraint_models, cfg: ConstraintMapConfig, candidates) -> np.ndarray:
    """Relaxed normalised constraint vector of ``u`` within ``candidates``."""
    return ConstraintMap(candidates, x_qnt, constraint_models, cfg).g_plus(u)


def d_g(u, v, cmap: ConstraintMap) -> float:
    return cmap.d_g(u, v)
