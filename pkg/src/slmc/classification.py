"""Martingale classification from the |xi|-weighted speed-measure tails.

``int_0^inf xi m(dxi)`` finite means +inf is an entrance boundary and the
process fails to be a martingale through its upper tail; the same for the
lower tail with ``int_{-inf}^0 |xi| m(dxi)``. Both tails infinite is the
true-martingale case.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .errors import InconclusiveError
from .models import DiffusionModel, speed_density
from .numerics.quadrature import (DEFAULT_TOL, QuadratureResult, Side, Verdict,
                                  default_schedule, integrate_improper)

# Used once when the default schedule ends inconclusive.
EXTENDED_SCHEDULE = default_schedule(3, 28)


class Label(str, enum.Enum):
    TRUE_MARTINGALE = "true_martingale"
    STRICT_CASE_I = "strict_case_i"
    STRICT_CASE_II = "strict_case_ii"
    STRICT_CASE_III = "strict_case_iii"


class BoundarySide(str, enum.Enum):
    PLUS_INF = "plus_inf"
    MINUS_INF = "minus_inf"


class BoundaryType(str, enum.Enum):
    NATURAL = "natural"
    ENTRANCE = "entrance"


_TABLE = {
    (True, False): Label.STRICT_CASE_I,
    (False, True): Label.STRICT_CASE_II,
    (True, True): Label.STRICT_CASE_III,
    (False, False): Label.TRUE_MARTINGALE,
}


@dataclass(frozen=True)
class MartingaleClass:
    label: Label
    right_integral: QuadratureResult
    left_integral: QuadratureResult

    def __post_init__(self):
        for q in (self.right_integral, self.left_integral):
            if q.verdict is Verdict.INCONCLUSIVE:
                raise InconclusiveError("classification inconclusive; enlarge cutoff schedule")
        expected = _TABLE[(self.right_integral.finite, self.left_integral.finite)]
        if self.label is not expected:
            raise ValueError(f"label {self.label.value} contradicts integral verdicts "
                             f"(expected {expected.value})")

    @property
    def is_strict(self) -> bool:
        return self.label is not Label.TRUE_MARTINGALE

    def strict_at(self, side: BoundarySide | str) -> bool:
        """Whether ``side`` is an entrance boundary (finite weighted tail)."""
        side = BoundarySide(side)
        q = self.right_integral if side is BoundarySide.PLUS_INF else self.left_integral
        return q.finite

    def boundary(self, side: BoundarySide | str) -> BoundaryType:
        return BoundaryType.ENTRANCE if self.strict_at(side) else BoundaryType.NATURAL

    def to_dict(self) -> dict:
        return {
            "label": self.label.value,
            "right_integral": self.right_integral.to_dict(),
            "left_integral": self.left_integral.to_dict(),
            "boundary_types": {
                "plus_inf": self.boundary(BoundarySide.PLUS_INF).value,
                "minus_inf": self.boundary(BoundarySide.MINUS_INF).value,
            },
        }


def _tail(model: DiffusionModel, side: Side, tol: float,
          schedule: Sequence[float] | None) -> QuadratureResult:
    m = speed_density(model)
    f = lambda xi: abs(xi) * m(xi)  # noqa: E731
    res = integrate_improper(f, side, 0.0, tol, schedule)
    if res.verdict is Verdict.INCONCLUSIVE and schedule is None:
        res = integrate_improper(f, side, 0.0, tol, EXTENDED_SCHEDULE)
    return res


def classify(model: DiffusionModel, tol: float = DEFAULT_TOL,
             cutoff_schedule: Sequence[float] | None = None) -> MartingaleClass:
    """Classify ``model`` from the finiteness of its two weighted speed tails.

    With the default schedule an inconclusive tail is retried once on
    ``2**k``, k = 3..28; an explicit schedule is used as given.

    Raises
    ------
    InconclusiveError
        If either tail is still undecided.
    """
    right = _tail(model, Side.TO_PLUS_INF, tol, cutoff_schedule)
    left = _tail(model, Side.TO_MINUS_INF, tol, cutoff_schedule)
    if Verdict.INCONCLUSIVE in (right.verdict, left.verdict):
        raise InconclusiveError("classification inconclusive; enlarge cutoff schedule")
    return MartingaleClass(_TABLE[(right.finite, left.finite)], right, left)


def boundary_type(model: DiffusionModel, side: BoundarySide | str,
                  klass: MartingaleClass | None = None) -> BoundaryType:
    """Entrance iff the side's |xi|-weighted speed integral is finite."""
    if klass is None:
        klass = classify(model)
    return klass.boundary(side)
