"""Mesh/frame bookkeeping and quantitative poll directions."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from ..domain import Domain, Point

EXPANSION_CAP = 2 ** 10


@dataclass(frozen=True)
class MeshState:
    Delta: float           # frame size
    delta: float           # mesh size, min(Delta, Delta**2)
    scale: np.ndarray      # per quantitative variable
    Delta_0: float = 1.0

    @classmethod
    def initial(cls, domain: Domain, Delta_0: float = 1.0, frame_fraction: float = 0.1) -> "MeshState":
        span = domain.qnt_upper - domain.qnt_lower
        scale = np.where(span > 0, span * frame_fraction, 1.0)
        scale = np.where(domain.is_integer_qnt, np.maximum(1.0, np.round(scale)), scale)
        return cls(Delta_0, min(Delta_0, Delta_0 ** 2), scale, Delta_0)

    def _with(self, Delta: float) -> "MeshState":
        return dataclasses.replace(self, Delta=Delta, delta=min(Delta, Delta ** 2))

    def enlarge(self) -> "MeshState":
        return self._with(min(2.0 * self.Delta, self.Delta_0 * EXPANSION_CAP))

    def refine(self) -> "MeshState":
        return self._with(self.Delta / 2.0)

    @property
    def ratio(self) -> int:
        """Number of mesh steps across half a frame."""
        return max(1, int(math.floor(self.Delta / self.delta + 1e-9)))


def householder_basis(rng: np.random.Generator, n: int) -> np.ndarray:
    """Orthogonal matrix ``I - 2 v v^T`` for a random unit vector ``v``."""
    v = rng.normal(size=n)
    v /= np.linalg.norm(v)
    return np.eye(n) - 2.0 * np.outer(v, v)


def poll_displacements(domain: Domain, mesh: MeshState, rng: np.random.Generator) -> np.ndarray:
    """``2 n_qnt`` mesh displacements in raw units, from a positive basis.

    Continuous coordinates move by integer multiples of ``delta * scale``
    and stay within ``Delta * scale``; integer coordinates move by whole
    numbers, at least one unit along the dominant coordinate.
    """
    nq = domain.n_qnt
    if nq == 0:
        return np.zeros((0, 0))
    H = householder_basis(rng, nq)
    dirs = np.vstack([H.T, -H.T])
    dirs = dirs / np.max(np.abs(dirs), axis=1, keepdims=True)
    is_int = domain.is_integer_qnt
    steps = np.round(dirs * mesh.ratio) * mesh.delta * mesh.scale
    int_reach = np.maximum(1.0, mesh.Delta * mesh.scale)
    int_steps = np.round(dirs * int_reach)
    return np.where(is_int[None, :], int_steps, steps)


def project(domain: Domain, qnt: np.ndarray) -> np.ndarray:
    q = np.clip(qnt, domain.qnt_lower, domain.qnt_upper)
    is_int = domain.is_integer_qnt
    q[..., is_int] = np.round(q[..., is_int])
    return q


def snap_to_mesh(domain: Domain, mesh: MeshState, center: np.ndarray, qnt: np.ndarray) -> np.ndarray:
    """Round ``qnt`` to the mesh anchored at ``center``, then project."""
    step = mesh.delta * mesh.scale
    snapped = center + np.round((qnt - center) / step) * step
    return project(domain, snapped)


def quant_poll(domain: Domain, incumbent: Point, mesh: MeshState, rng: np.random.Generator) -> list:
    """Trial points around ``incumbent`` with its categorical component fixed."""
    if domain.n_qnt == 0:
        return []
    x = np.asarray(incumbent.qnt, dtype=float)
    out, seen = [], {incumbent.key()}
    for d in poll_displacements(domain, mesh, rng):
        q = project(domain, x + d)
        pt = domain.point_from_qnt(incumbent.cat, q)
        k = pt.key()
        if k not in seen:
            seen.add(k)
            out.append(pt)
    return out
