"""Adaptive Simpson quadrature and a cutoff-doubling test for improper
integrals of eventually monotone, nonnegative integrands."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

from ..errors import ConfigError, NumericalError

DEFAULT_TOL = 1e-10
# Relative floor keeps the recursion finite when |f| is large (e.g. e^{2x}).
_REL_FLOOR = 1e-13
_MAX_DEPTH = 48


class Verdict(str, enum.Enum):
    CONVERGENT = "convergent"
    DIVERGENT = "divergent"
    INCONCLUSIVE = "inconclusive"


class Side(str, enum.Enum):
    TO_PLUS_INF = "to_plus_inf"
    TO_MINUS_INF = "to_minus_inf"


@dataclass(frozen=True)
class QuadratureResult:
    """Outcome of a quadrature.

    When ``verdict`` is divergent, ``value`` is the last finite partial
    integral and must not be read as a limit.
    """

    value: float
    abs_error_estimate: float
    evaluations: int
    verdict: Verdict
    partials: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if not self.abs_error_estimate >= 0.0:
            raise ValueError("abs_error_estimate must be >= 0")

    @property
    def finite(self) -> bool:
        return self.verdict is Verdict.CONVERGENT

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "abs_error_estimate": self.abs_error_estimate,
            "evaluations": self.evaluations,
            "verdict": self.verdict.value,
        }


class _Counter:
    def __init__(self, f: Callable[[float], float]):
        self.f = f
        self.n = 0

    def __call__(self, x: float) -> float:
        self.n += 1
        y = float(self.f(x))
        if not math.isfinite(y):
            raise NumericalError(f"integrand not finite at ξ={x!r}")
        return y


def _adaptive(f, a, b, fa, fm, fb, whole, tol, depth, floor):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    delta = left + right - whole
    if depth <= 0 or abs(delta) <= 15.0 * max(tol, floor):
        return left + right + delta / 15.0, abs(delta) / 15.0
    lv, le = _adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, floor)
    rv, re = _adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, floor)
    return lv + rv, le + re


def _simpson(f: _Counter, a: float, b: float, tol: float) -> tuple[float, float]:
    # Seed with two panels so a midpoint zero cannot fake convergence.
    xs = [a + (b - a) * k / 4.0 for k in range(5)]
    fs = [f(x) for x in xs]
    floor = _REL_FLOOR * max(abs(v) for v in fs) * (b - a)
    value = err = 0.0
    for k in (0, 2):
        lo, hi = xs[k], xs[k + 2]
        sub = (hi - lo) / 6.0 * (fs[k] + 4.0 * fs[k + 1] + fs[k + 2])
        v, e = _adaptive(f, lo, hi, fs[k], fs[k + 1], fs[k + 2], sub,
                         0.5 * tol, _MAX_DEPTH, floor)
        value += v
        err += e
    return value, err


def integrate_adaptive(f: Callable[[float], float], a: float, b: float,
                       tol: float = DEFAULT_TOL) -> QuadratureResult:
    """Integrate ``f`` over ``[a, b]`` by adaptive Simpson with Richardson
    correction, to absolute tolerance ``tol``.

    Raises
    ------
    NumericalError
        If ``f`` returns a non-finite value at any sample point.
    """
    if not a < b:
        raise ConfigError(f"integrate_adaptive requires a < b, got [{a}, {b}]")
    if not tol > 0:
        raise ConfigError("tol must be positive")
    fc = _Counter(f)
    value, err = _simpson(fc, float(a), float(b), float(tol))
    return QuadratureResult(value, err, fc.n, Verdict.CONVERGENT)


def default_schedule(k_min: int = 3, k_max: int = 14) -> tuple[float, ...]:
    return tuple(float(2 ** k) for k in range(k_min, k_max + 1))


def integrate_improper(f: Callable[[float], float], side: Side | str,
                       origin: float = 0.0, tol: float = DEFAULT_TOL,
                       cutoff_schedule: Sequence[float] | None = None,
                       stall_count: int = 3) -> QuadratureResult:
    """Decide whether ``int_origin^{+-inf} f`` is finite, and estimate it.

    Partial integrals are accumulated over ``[origin, origin +- L_k]`` for the
    cutoffs ``L_k`` of ``cutoff_schedule`` (default ``2**k``, k = 3..14). The
    integral is declared

    * convergent once an increment between consecutive cutoffs is <= ``tol``;
    * divergent once the increment fails to shrink by a factor of two
      ``stall_count`` times in a row;
    * inconclusive if the schedule runs out first.

    ``f`` must be nonnegative and eventually monotone beyond some cutoff;
    otherwise the verdicts carry no guarantee.
    """
    side = Side(side)
    if cutoff_schedule is None:
        cutoff_schedule = default_schedule()
    sched = [float(L) for L in cutoff_schedule]
    if len(sched) == 0:
        raise ConfigError("cutoff schedule is empty")
    if len(sched) < 4:
        raise ConfigError("cutoff schedule needs at least 4 cutoffs")
    if any(b <= a for a, b in zip(sched, sched[1:])) or sched[0] <= 0:
        raise ConfigError("cutoff schedule must be positive and strictly increasing")

    sign = 1.0 if side is Side.TO_PLUS_INF else -1.0
    fc = _Counter(f)
    piece_tol = tol / len(sched)

    def piece(lo: float, hi: float) -> tuple[float, float]:
        # lo < hi as distances from the origin
        if sign > 0:
            return _simpson(fc, origin + lo, origin + hi, piece_tol)
        return _simpson(fc, origin - hi, origin - lo, piece_tol)

    total, err = piece(0.0, sched[0])
    partials = [(sched[0], total)]
    prev_inc = abs(total)
    stalls = 0
    for lo, hi in zip(sched, sched[1:]):
        inc, e = piece(lo, hi)
        total += inc
        err += e
        partials.append((hi, total))
        if abs(inc) <= tol:
            return QuadratureResult(total, err + abs(inc), fc.n, Verdict.CONVERGENT, tuple(partials))
        if abs(inc) > 0.5 * prev_inc:
            stalls += 1
            if stalls >= stall_count:
                return QuadratureResult(total, math.inf, fc.n, Verdict.DIVERGENT, tuple(partials))
        else:
            stalls = 0
        prev_inc = abs(inc)
    return QuadratureResult(total, max(err, prev_inc), fc.n, Verdict.INCONCLUSIVE, tuple(partials))
