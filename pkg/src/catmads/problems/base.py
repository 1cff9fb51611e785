from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from ..domain import Domain, Evaluation, Point


@dataclass
class Problem:
    """A blackbox ``Point -> Evaluation`` over a mixed domain."""

    name: str
    domain: Domain
    n_constraints: int
    evaluate: Callable[[Point], Evaluation]
    known_best: Optional[float] = None
    reference: Optional[Point] = None
    meta: dict = field(default_factory=dict)

    def __call__(self, point: Point) -> Evaluation:
        return self.evaluate(point)

    @property
    def constrained(self) -> bool:
        return self.n_constraints > 0

    def close(self):
        closer = self.meta.get("close")
        if closer is not None:
            closer()
