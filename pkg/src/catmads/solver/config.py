from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from typing import Optional

import yaml

from ..domain import Domain
from ..neighborhood import default_m


@dataclass(frozen=True)
class SolverConfig:
    """Solver settings.  ``None`` fields are filled in by :meth:`resolved`."""

    budget: Optional[int] = None            # 250 * n
    doe_fraction: float = 0.20
    doe_size: Optional[int] = None          # overrides doe_fraction when set
    m: Optional[int] = None                 # max(3, ceil(sqrt(|X_cat|)))
    lam: float = 1.0
    p: float = 2.0
    xi: float = 0.05
    surrogate_cutoff: Optional[int] = None  # min(500, ceil(0.33 * budget))
    use_search: bool = True
    extended_poll: bool = True
    seed: int = 0
    delta_0: float = 1.0
    delta_min: float = 1e-6
    frame_fraction: float = 0.1             # initial frame as a share of each range
    poll_order: str = "qnt-first"           # or "cat-first"
    neighborhood: str = "surrogate"         # or "hamming"
    objective_distance: str = "kernel"      # or "prediction"
    n_candidates: int = 200
    enum_cap: int = 4096
    hyperopt_starts: int = 5
    hyperopt_iters: int = 200
    refit_starts: int = 1
    refit_iters: int = 50
    reopt_growth: float = 0.25              # re-optimise theta when the data grew by this share
    max_extended: int = 3                   # near-misses polled per iteration

    def __post_init__(self):
        if not 0.0 < self.doe_fraction < 1.0:
            raise ValueError("doe_fraction must lie in (0, 1)")
        if self.poll_order not in ("qnt-first", "cat-first"):
            raise ValueError(f"unknown poll_order {self.poll_order!r}")
        if self.neighborhood not in ("surrogate", "hamming"):
            raise ValueError(f"unknown neighborhood {self.neighborhood!r}")
        if self.objective_distance not in ("kernel", "prediction"):
            raise ValueError(f"unknown objective_distance {self.objective_distance!r}")
        if self.lam < 0 or self.p < 1 or self.xi < 0:
            raise ValueError("need lam >= 0, p >= 1 and xi >= 0")
        if self.delta_0 <= 0 or self.delta_min <= 0:
            raise ValueError("frame sizes must be positive")

    def resolved(self, domain: Domain) -> "SolverConfig":
        budget = self.budget if self.budget is not None else 250 * domain.n
        if budget < domain.n + 2:
            raise ValueError(f"budget must be at least n + 2 = {domain.n + 2}")
        m = self.m
        if m is None and domain.n_cat:
            m = default_m(domain)
        if m is not None and domain.n_cat:
            m = max(1, min(m, domain.cat_size))
        cutoff = self.surrogate_cutoff
        if cutoff is None:
            cutoff = min(500, math.ceil(0.33 * budget))
        doe = self.doe_size if self.doe_size is not None else max(2, int(math.floor(self.doe_fraction * budget)))
        doe = max(2, min(doe, budget))
        return dataclasses.replace(self, budget=budget, m=m, surrogate_cutoff=cutoff, doe_size=doe)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def dump(self) -> str:
        return yaml.safe_dump(self.as_dict(), sort_keys=False)

    @classmethod
    def from_dict(cls, data: dict) -> "SolverConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "SolverConfig":
        with open(path) as fh:
            return cls.from_dict(yaml.safe_load(fh) or {})
