r"""The Cauchy problem :math:`h_t = \tfrac12\sigma^2 h_{xx}`, :math:`h(0,\cdot) = H`,
on a truncated grid.

Transform mode selects the solution that is small relative to
:math:`\Phi_\lambda = \varphi_\uparrow + \varphi_\downarrow` at the boundaries. Writing
:math:`h = e^{\lambda t}\Phi g`, the scheme evolves :math:`h` with the operator

.. math:: (A h)_i = c_i\,\tfrac12\sigma_i^2\,(D_2 h)_i, \qquad
          c_i = \frac{\lambda \Phi_i}{\tfrac12\sigma_i^2 (D_2\Phi)_i},

so that :math:`A\Phi = \lambda\Phi` holds exactly on the grid. In the variable
:math:`g` this is the Doob-transformed generator with drift
:math:`\sigma^2\Phi'/\Phi`, row sums zero and positive off-diagonals, hence a
discrete maximum principle for :math:`g`. The factor :math:`e^{-\lambda t}` is
applied in closed form, which keeps the answer independent of
:math:`\lambda` up to the fitted coefficients :math:`c_i = 1 + O(h^2)`.

Boundary rows. At a natural side :math:`h` is held at the payoff value of
the edge node, i.e. :math:`g = e^{-\lambda t}H/\Phi`, which vanishes as the
truncation grows because :math:`\Phi` is super-linear there and :math:`H`
at most linear; this keeps constants and martingale cases exact. At an
entrance side the default is zero flux, :math:`h_0 = h_1`. The literal
surrogate :math:`g = 0` at both ends is available as
``strict_side_bc="dirichlet"``; it pins :math:`h` to 0 at an entrance-side
truncation point where the true solution tends to a nonzero constant.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .classification import BoundarySide, MartingaleClass, classify
from .errors import (ConfigError, NumericalError, OscillationError,
                     PreconditionError, TruncationError)
from .grid import Grid1D
from .models import DiffusionModel
from .numerics.tridiag import TridiagonalFactor
from .sturm_liouville import (SLSolution, UChoice, compute_basic_solutions,
                              curvature, enlarge)

log = logging.getLogger(__name__)

ADEQUACY_RTOL = 5e-4
# Slack on the maximum-principle assertion (beyond the exact discrete factor).
MAX_PRINCIPLE_RTOL = 1e-9


class Scheme(str, enum.Enum):
    CRANK_NICOLSON = "crank_nicolson"
    IMPLICIT_EULER = "implicit_euler"
    RANNACHER = "rannacher"


class BCMode(str, enum.Enum):
    TRANSFORM_ENTRANCE_FLUX = "transform_entrance_flux"
    TRANSFORM_DIRICHLET_ZERO = "transform_dirichlet_zero"
    RAW_DIRICHLET = "raw_dirichlet"


# -- payoffs ------------------------------------------------------------------

PAYOFF_KINDS = ("identity", "constant", "call", "abs", "tabulated")


@dataclass(frozen=True)
class PayoffSpec:
    """Terminal data ``H``; every kind grows at most linearly.

    ``tabulated`` interpolates ``nodes`` linearly and continues with the
    declared ``left_slope``/``right_slope`` beyond them.
    """

    kind: str
    c: float = 0.0
    strike: float = 0.0
    nodes: tuple[tuple[float, float], ...] = ()
    left_slope: float = 0.0
    right_slope: float = 0.0

    def __post_init__(self):
        if self.kind not in PAYOFF_KINDS:
            raise ConfigError(f"unknown payoff kind {self.kind!r}; expected one of {PAYOFF_KINDS}")
        if self.kind == "tabulated":
            arr = np.asarray(self.nodes, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
                raise ConfigError("tabulated payoff needs at least two [x, H] pairs")
            if np.any(np.diff(arr[:, 0]) <= 0):
                raise ConfigError("tabulated payoff nodes must be strictly increasing")
            if not (math.isfinite(self.left_slope) and math.isfinite(self.right_slope)):
                raise ConfigError("tabulated payoff tail slopes must be finite")
            object.__setattr__(self, "nodes", tuple((float(a), float(b)) for a, b in arr))

    @classmethod
    def identity(cls) -> "PayoffSpec":
        return cls("identity")

    @classmethod
    def constant(cls, c: float) -> "PayoffSpec":
        return cls("constant", c=float(c))

    @classmethod
    def call(cls, strike: float) -> "PayoffSpec":
        return cls("call", strike=float(strike))

    @classmethod
    def absolute(cls) -> "PayoffSpec":
        return cls("abs")

    @classmethod
    def tabulated(cls, nodes, left_slope: float = 0.0, right_slope: float = 0.0) -> "PayoffSpec":
        return cls("tabulated", nodes=tuple(map(tuple, nodes)),
                   left_slope=float(left_slope), right_slope=float(right_slope))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            out = x.copy()
        elif self.kind == "constant":
            out = np.full_like(x, self.c)
        elif self.kind == "call":
            out = np.maximum(x - self.strike, 0.0)
        elif self.kind == "abs":
            out = np.abs(x)
        else:
            xs = np.array([p[0] for p in self.nodes])
            ys = np.array([p[1] for p in self.nodes])
            out = np.interp(x, xs, ys)
            out = np.where(x < xs[0], ys[0] + self.left_slope * (x - xs[0]), out)
            out = np.where(x > xs[-1], ys[-1] + self.right_slope * (x - xs[-1]), out)
        return float(out) if out.ndim == 0 else out

    def to_config(self) -> dict:
        cfg: dict = {"kind": self.kind}
        if self.kind == "constant":
            cfg["c"] = self.c
        elif self.kind == "call":
            cfg["strike"] = self.strike
        elif self.kind == "tabulated":
            cfg.update(nodes=[list(p) for p in self.nodes],
                       left_slope=self.left_slope, right_slope=self.right_slope)
        return cfg

    def label(self) -> str:
        if self.kind == "constant":
            return f"constant({self.c:g})"
        if self.kind == "call":
            return f"call({self.strike:g})"
        return self.kind


def payoff_from_config(cfg) -> PayoffSpec:
    """Accepts a dict, or a short string such as ``"identity"``,
    ``"constant:2"``, ``"call:0.5"`` or ``"abs"``."""
    if isinstance(cfg, PayoffSpec):
        return cfg
    if isinstance(cfg, str):
        kind, _, arg = cfg.partition(":")
        kind = kind.strip()
        try:
            if kind == "constant":
                return PayoffSpec.constant(float(arg))
            if kind == "call":
                return PayoffSpec.call(float(arg or 0.0))
        except ValueError as exc:
            raise ConfigError(f"malformed payoff {cfg!r}") from exc
        if arg:
            raise ConfigError(f"payoff {kind!r} takes no argument")
        return PayoffSpec(kind)
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError("payoff config must be a string or an object with a 'kind' field")
    allowed = {"kind", "c", "strike", "nodes", "left_slope", "right_slope"}
    extra = set(cfg) - allowed
    if extra:
        raise ConfigError(f"unexpected payoff fields: {sorted(extra)}")
    try:
        if cfg["kind"] == "tabulated":
            return PayoffSpec.tabulated(cfg.get("nodes", ()), cfg.get("left_slope", 0.0),
                                        cfg.get("right_slope", 0.0))
        return PayoffSpec(cfg["kind"], c=float(cfg.get("c", 0.0)),
                          strike=float(cfg.get("strike", 0.0)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed payoff config: {exc}") from exc


# -- solution objects ---------------------------------------------------------

@dataclass(frozen=True)
class CauchySolution:
    """Surfaces ``h[k, i] = h(time_points[k], x_i)``.

    ``diagnostics`` holds the maximum-principle audit, the adequacy check
    and the SL truncation check (transform mode only).
    """

    model: DiffusionModel
    payoff: PayoffSpec
    lam: float | None
    grid: Grid1D
    time_points: np.ndarray
    surfaces: np.ndarray
    bc_mode: BCMode
    scheme: Scheme
    n_steps: int
    class_label: str | None = None
    boundary: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict, compare=False)
    log_Phi: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def T(self) -> float:
        return float(self.time_points[-1])

    def at(self, t: float) -> np.ndarray:
        """Surface at ``t``, linearly interpolated between stored times."""
        tp = self.time_points
        if not (tp[0] <= t <= tp[-1]):
            raise ConfigError(f"t={t} outside [{tp[0]}, {tp[-1]}]")
        k = int(np.searchsorted(tp, t))
        if k < tp.size and tp[k] == t:
            return self.surfaces[k]
        w = (t - tp[k - 1]) / (tp[k] - tp[k - 1])
        return (1.0 - w) * self.surfaces[k - 1] + w * self.surfaces[k]

    def value(self, t: float, x: float) -> float:
        """``h(t, x)`` by linear interpolation in ``x`` (and ``t``)."""
        return float(np.interp(x, self.x, self.at(t)))

    @property
    def g(self) -> np.ndarray:
        """Transformed surfaces ``e^{-lam t} h / Phi``."""
        if self.log_Phi is None:
            raise PreconditionError("g is only defined in transform mode")
        return self.surfaces * np.exp(-self.lam * self.time_points[:, None] - self.log_Phi[None, :])

    def manifest(self) -> dict:
        return {
            "model": self.model.to_config(),
            "payoff": self.payoff.to_config(),
            "lambda": self.lam,
            "T": self.T,
            "grid": self.grid.to_dict(),
            "n_steps": self.n_steps,
            "scheme": self.scheme.value,
            "bc_mode": self.bc_mode.value,
            "boundary": dict(self.boundary),
            "class_label": self.class_label,
            "diagnostics": self.diagnostics,
        }

    def to_csv_rows(self):
        """Long format ``t, x, h``."""
        nt, nx = self.surfaces.shape
        t = np.repeat(self.time_points, nx)
        x = np.tile(self.x, nt)
        return ["t", "x", "h"], np.column_stack([t, x, self.surfaces.ravel()])


@dataclass(frozen=True)
class DefectSurface:
    """``w(t, x) = e^{-lam t} E^x[phi(X_t)] / phi(x)`` for the basic solution
    ``phi`` decreasing toward ``side``."""

    model: DiffusionModel
    lam: float
    side: BoundarySide
    grid: Grid1D
    time_points: np.ndarray
    w: np.ndarray
    n_steps: int
    strict_side_bc: str = "dirichlet"
    class_label: str | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def manifest(self) -> dict:
        return {
            "model": self.model.to_config(), "lambda": self.lam, "side": self.side.value,
            "T": float(self.time_points[-1]), "grid": self.grid.to_dict(),
            "n_steps": self.n_steps, "scheme": Scheme.IMPLICIT_EULER.value,
            "strict_side_bc": self.strict_side_bc, "class_label": self.class_label,
            "diagnostics": self.diagnostics,
        }

    def to_csv_rows(self):
        nt, nx = self.w.shape
        t = np.repeat(self.time_points, nx)
        x = np.tile(self.x, nt)
        return ["t", "x", "w"], np.column_stack([t, x, self.w.ravel()])


# -- operators ----------------------------------------------------------------

def default_steps(T: float, grid: Grid1D) -> int:
    """``ceil(4 T N / (x_right - x_left))``, i.e. ``dt`` of the order of ``h``."""
    return max(1, math.ceil(4.0 * T * grid.n / (grid.x_right - grid.x_left)))


def _operator(x: np.ndarray, sig2: np.ndarray, coef: np.ndarray):
    """Off-diagonal interior bands of ``coef * 0.5 sigma^2 * D2`` (rows
    1..n-2); the diagonal is minus their sum."""
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    H = hm + hp
    s = coef * sig2[1:-1]
    return s / (hm * H), s / (hp * H)


class _Stepper:
    """Theta-scheme steps for ``u_t = A u`` with fixed boundary rows.

    ``lo, di, up`` are the interior rows of ``A``. Boundary kinds:
    ``("dirichlet", value_fn)`` or ``("flux", ratio)``, the latter meaning
    ``u_0 = ratio * u_1`` (resp. ``u_{n-1} = ratio * u_{n-2}``). Boundary
    unknowns are eliminated before the solve, so the interior matrix stays
    a diagonally dominant M-matrix and no sums of opposite sign arise.
    """

    def __init__(self, lo, up, left, right):
        self.lo, self.up = lo, up
        self.left, self.right = left, right
        self._factors: dict[float, TridiagonalFactor] = {}

    def _factor(self, theta_dt: float) -> TridiagonalFactor:
        f = self._factors.get(theta_dt)
        if f is None:
            lo, up = self.lo, self.up
            D = 1.0 + theta_dt * (lo + up)
            if self.left[0] == "flux":
                D[0] = 1.0 + theta_dt * (up[0] + lo[0] * (1.0 - self.left[1]))
            if self.right[0] == "flux":
                D[-1] = 1.0 + theta_dt * (lo[-1] + up[-1] * (1.0 - self.right[1]))
            f = TridiagonalFactor(-theta_dt * lo[1:], D, -theta_dt * up[:-1])
            self._factors[theta_dt] = f
        return f

    def apply_op(self, u: np.ndarray) -> np.ndarray:
        """Interior rows of ``A u``."""
        return self.lo * (u[:-2] - u[1:-1]) + self.up * (u[2:] - u[1:-1])

    def step(self, u: np.ndarray, t_new: float, dt: float, theta: float) -> np.ndarray:
        rhs = u[1:-1].copy()
        if theta < 1.0:
            rhs += (1.0 - theta) * dt * self.apply_op(u)
        if self.left[0] == "dirichlet":
            v_left = self.left[1](t_new)
            rhs[0] += theta * dt * self.lo[0] * v_left
        if self.right[0] == "dirichlet":
            v_right = self.right[1](t_new)
            rhs[-1] += theta * dt * self.up[-1] * v_right
        out = np.empty_like(u)
        out[1:-1] = self._factor(theta * dt).solve(rhs)
        out[0] = v_left if self.left[0] == "dirichlet" else self.left[1] * out[1]
        out[-1] = v_right if self.right[0] == "dirichlet" else self.right[1] * out[-2]
        return out


def _schedule(scheme: Scheme, n_steps: int, dt: float):
    """(dt, theta, record) substeps; Rannacher replaces the first
    Crank-Nicolson step by two implicit-Euler half-steps."""
    if scheme is Scheme.IMPLICIT_EULER:
        return [(dt, 1.0, True)] * n_steps
    if scheme is Scheme.CRANK_NICOLSON:
        return [(dt, 0.5, True)] * n_steps
    return [(0.5 * dt, 1.0, False), (0.5 * dt, 1.0, True)] + [(dt, 0.5, True)] * (n_steps - 1)


def _total_variation(u: np.ndarray) -> float:
    return float(np.sum(np.abs(np.diff(u))))


def _new_extremum(u: np.ndarray, ref: np.ndarray) -> int:
    """Index of the first interior local extremum of ``u`` absent in ``ref``
    (falls back to the largest change)."""
    def extrema(v):
        d = np.diff(v)
        return (d[1:] * d[:-1]) < 0

    hits = np.flatnonzero(extrema(u) & ~extrema(ref))
    return int(hits[0]) + 1 if hits.size else int(np.argmax(np.abs(u - ref)))


# -- transform mode -----------------------------------------------------------

def _fitted_coefficients(sl: SLSolution, u: UChoice) -> np.ndarray:
    x = sl.x
    q = 2.0 * sl.lam / np.asarray(sl.model.sigma2(x), dtype=float)
    c = q[1:-1] / curvature(sl, u)
    if not np.all(np.isfinite(c) & (c > 0)):
        i = int(np.flatnonzero(~(np.isfinite(c) & (c > 0)))[0]) + 1
        raise NumericalError(f"fitted coefficient not positive/finite at x={x[i]:g}")
    return c


def _evolve(stepper: _Stepper, u0: np.ndarray, scheme: Scheme, T: float, n_steps: int,
            output_times: Sequence[float] | None, x: np.ndarray, on_step=None):
    dt = T / n_steps
    step_times = T * np.arange(n_steps + 1) / n_steps
    keep = _keep_mask(step_times, output_times)
    times = [0.0]
    surfaces = [u0.copy()]
    u = u0.copy()
    t = 0.0
    k = 0
    for sub_dt, theta, record in _schedule(scheme, n_steps, dt):
        t += sub_dt
        u = stepper.step(u, t, sub_dt, theta)
        if not record:
            continue
        k += 1
        t = step_times[k]
        bad = ~np.isfinite(u)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise NumericalError(f"non-finite value at t={t:g}, x={x[i]:g}")
        if on_step is not None:
            on_step(k, t, u)
        if keep[k]:
            times.append(t)
            surfaces.append(u.copy())
    return np.array(times), np.array(surfaces)


def _keep_mask(step_times: np.ndarray, output_times) -> np.ndarray:
    keep = np.ones(step_times.size, dtype=bool)
    if output_times is None:
        return keep
    keep[:] = False
    keep[-1] = True
    for t in output_times:
        keep[int(np.argmin(np.abs(step_times - t)))] = True
    return keep


def _transform_run(model, payoff, T, lam, grid, n_steps, scheme, klass,
                   strict_side_bc, output_times, sl=None):
    if sl is None:
        sl = compute_basic_solutions(model, lam, grid, on_failure="record")
    elif not np.array_equal(sl.x, grid.nodes) or sl.lam != lam:
        raise ConfigError("SL solution must live on the solver grid with the same lambda")
    x = grid.nodes
    sig2 = np.asarray(model.sigma2(x), dtype=float)
    c = _fitted_coefficients(sl, UChoice.PHI)
    lo, up = _operator(x, sig2, c)

    H = np.asarray(payoff(x), dtype=float)
    boundary = {}
    rows = {}
    for side, key, edge in ((BoundarySide.MINUS_INF, "left", 0),
                            (BoundarySide.PLUS_INF, "right", -1)):
        if strict_side_bc == "dirichlet":
            rows[key] = ("dirichlet", lambda t: 0.0)
            boundary[side.value] = "dirichlet_zero"
        elif klass.strict_at(side):
            rows[key] = ("flux", 1.0)
            boundary[side.value] = "zero_flux"
        else:
            # g = e^{-lam t} H/Phi at the node, which tends to 0 with the truncation
            rows[key] = ("dirichlet", lambda t, v=float(H[edge]): v)
            boundary[side.value] = "frozen_payoff"
    log_Phi = sl.log_Phi
    g0 = np.abs(H) * np.exp(-log_Phi)
    gmax = float(np.max(g0))

    dt = T / n_steps
    stepper = _Stepper(lo, up, rows["left"], rows["right"])
    # Per-step growth of the discrete eigenpair A Phi = lam Phi.
    sched = _schedule(scheme, n_steps, dt)
    growth = [1.0]
    acc = 1.0
    for sub_dt, theta, record in sched:
        acc *= (1.0 + (1.0 - theta) * sub_dt * lam) / (1.0 - theta * sub_dt * lam)
        if record:
            growth.append(acc)
    growth = np.array(growth)
    audit = {"sup_ratio": 0.0, "worst": None, "prev": H}
    # The exact flow and every positive-coefficient implicit step are
    # total-variation diminishing; an increase right after t = 0 is the
    # Crank-Nicolson ringing on rough data.
    tv_slack = 1e-9 * max(_total_variation(H), 1e-300)

    def on_step(k, t, u):
        ratio = np.abs(u) * np.exp(-log_Phi) / growth[k]
        i = int(np.argmax(ratio))
        r = float(ratio[i]) / gmax if gmax > 0 else 0.0
        if r > audit["sup_ratio"]:
            audit["sup_ratio"] = r
            audit["worst"] = (float(t), float(x[i]))
        prev = audit["prev"]
        audit["prev"] = u
        if scheme is Scheme.CRANK_NICOLSON and k <= 5 and (
                r > 1.0 + MAX_PRINCIPLE_RTOL
                or _total_variation(u) > _total_variation(prev) + tv_slack):
            j = _new_extremum(u, prev)
            raise OscillationError(
                f"Crank-Nicolson oscillation near t=0 (t={t:g}, x={x[j]:g}); "
                f"use scheme='rannacher'")
        if r > 1.0 + MAX_PRINCIPLE_RTOL:
            raise NumericalError(
                f"discrete maximum principle violated at t={t:g}, x={x[i]:g} "
                f"(ratio {r:.6g})")

    times, surfaces = _evolve(stepper, H, scheme, T, n_steps, output_times, x, on_step)
    # Realized sup |h| / (e^{lam t} Phi), reported against max |H/Phi|.
    with np.errstate(over="ignore"):
        realized = float(np.max(np.abs(surfaces) * np.exp(-lam * times[:, None] - log_Phi)))
    diag = {
        "max_principle": {"sup_ratio_discrete": audit["sup_ratio"], "worst_at": audit["worst"],
                          "bound_sup_H_over_Phi": gmax,
                          "realized_sup_h_over_eLt_Phi": realized},
        "sl_adequacy": sl.adequacy,
    }
    return times, surfaces, boundary, diag, log_Phi


def _inner_change(small_x, small_h, big_x, big_h, mask) -> float:
    offset = int(np.flatnonzero(big_x == small_x[0])[0])
    b = big_h[offset:offset + small_x.size]
    scale = max(float(np.max(np.abs(small_h[mask]))), 1e-300)
    return float(np.max(np.abs(b[mask] - small_h[mask])) / scale)


def solve_transformed(model: DiffusionModel, H: PayoffSpec, T: float, lam: float,
                      grid: Grid1D, n_steps: int | None = None,
                      scheme: Scheme | str = Scheme.RANNACHER, *,
                      klass: MartingaleClass | None = None,
                      sl: SLSolution | None = None,
                      strict_side_bc: str = "flux",
                      check_adequacy: bool = True,
                      output_times: Sequence[float] | None = None) -> CauchySolution:
    """Solve the Cauchy problem with the boundary behaviour that selects the
    solution dominated by ``Phi`` (see module docstring).

    Parameters
    ----------
    n_steps
        Time steps; default ``ceil(4 T N / (x_right - x_left))``.
    strict_side_bc
        ``"flux"`` (zero slope of ``h`` at entrance sides, payoff value at
        natural sides) or ``"dirichlet"`` (``g = 0`` at both ends).
    check_adequacy
        Re-solve on the grid enlarged by 25% and require the inner half of
        ``h(T)`` to move by less than 5e-4 relative; one retry on the
        enlarged grid, whose solution is then returned.
    output_times
        Times to keep (snapped to the step grid); default every step.

    Raises
    ------
    OscillationError
        Crank-Nicolson oscillation or maximum-principle breach near t = 0.
    TruncationError
        Adequacy check failed after the retry.
    """
    scheme = Scheme(scheme)
    H = payoff_from_config(H)
    if strict_side_bc not in ("flux", "dirichlet"):
        raise ConfigError(f"strict_side_bc must be 'flux' or 'dirichlet', got {strict_side_bc!r}")
    if not lam > 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    if not T >= 0:
        raise ConfigError(f"T must be >= 0, got {T}")
    if klass is None:
        klass = classify(model)
    bc_mode = (BCMode.TRANSFORM_ENTRANCE_FLUX if strict_side_bc == "flux"
               else BCMode.TRANSFORM_DIRICHLET_ZERO)
    if T == 0:
        if sl is None:
            sl = compute_basic_solutions(model, lam, grid, on_failure="record")
        h0 = np.asarray(H(grid.nodes), dtype=float)
        return CauchySolution(model, H, float(lam), grid, np.array([0.0]), h0[None, :], bc_mode,
                              scheme, 0, klass.label.value, {}, {"sl_adequacy": sl.adequacy},
                              sl.log_Phi)
    n_steps = default_steps(T, grid) if n_steps is None else int(n_steps)
    if n_steps < 1:
        raise ConfigError("n_steps must be >= 1")

    def run(g, sl_=None):
        return _transform_run(model, H, T, lam, g, n_steps, scheme, klass,
                              strict_side_bc, output_times, sl_)

    times, surf, boundary, diag, log_Phi = run(grid, sl)
    used = grid
    if check_adequacy:
        mask = grid.inner_half()
        big = enlarge(grid)
        _, surf_b, _, _, _ = run(big)
        change = _inner_change(grid.nodes, surf[-1], big.nodes, surf_b[-1], mask)
        adequacy = {"inner_half_change": change, "tolerance": ADEQUACY_RTOL, "retried": False}
        if change >= ADEQUACY_RTOL:
            log.info("Cauchy truncation adequacy failed (%.2e); retrying", change)
            bigger = enlarge(big)
            _, surf_bb, _, _, _ = run(bigger)
            change2 = _inner_change(big.nodes, surf_b[-1], bigger.nodes, surf_bb[-1],
                                    big.inner_half())
            if change2 >= ADEQUACY_RTOL:
                raise TruncationError(
                    f"truncation too small; enlarge grid (inner-half change of h {change2:.2e} "
                    f"after one retry, tolerance {ADEQUACY_RTOL:g})")
            times, surf, boundary, diag, log_Phi = run(big)
            used = big
            adequacy = {"inner_half_change": change2, "tolerance": ADEQUACY_RTOL,
                        "retried": True, "first_change": change}
        adequacy["passed"] = True
        diag["adequacy"] = adequacy
    return CauchySolution(model, H, float(lam), used, times, surf, bc_mode, scheme, n_steps,
                          klass.label.value, boundary, diag, log_Phi)


# -- raw mode -----------------------------------------------------------------

def _as_bc(v) -> Callable[[float], float]:
    if callable(v):
        return v
    val = float(v)
    return lambda t: val


def solve_raw(model: DiffusionModel, H: PayoffSpec, T: float, grid: Grid1D,
              n_steps: int | None = None, left_bc=None, right_bc=None,
              scheme: Scheme | str = Scheme.RANNACHER, *,
              output_times: Sequence[float] | None = None) -> CauchySolution:
    """Evolve ``h`` with plain central differences and user Dirichlet data.

    ``left_bc``/``right_bc`` are callables of ``t`` or constants; by default
    the payoff's value at the truncation point. No uniqueness is implied:
    with ``H = identity`` and linear boundary data this returns ``h = x``
    exactly, which is a solution, but not the one selected by the
    transform.
    """
    scheme = Scheme(scheme)
    H = payoff_from_config(H)
    if not T >= 0:
        raise ConfigError(f"T must be >= 0, got {T}")
    x = grid.nodes
    h0 = np.asarray(H(x), dtype=float)
    left = _as_bc(h0[0] if left_bc is None else left_bc)
    right = _as_bc(h0[-1] if right_bc is None else right_bc)
    if T == 0:
        return CauchySolution(model, H, None, grid, np.array([0.0]), h0[None, :],
                              BCMode.RAW_DIRICHLET, scheme, 0)
    n_steps = default_steps(T, grid) if n_steps is None else int(n_steps)
    if n_steps < 1:
        raise ConfigError("n_steps must be >= 1")
    sig2 = np.asarray(model.sigma2(x), dtype=float)
    lo, up = _operator(x, sig2, np.ones(x.size - 2))
    stepper = _Stepper(lo, up, ("dirichlet", left), ("dirichlet", right))
    times, surf = _evolve(stepper, h0, scheme, T, n_steps, output_times, x)
    surf[1:, 0] = [left(t) for t in times[1:]]
    surf[1:, -1] = [right(t) for t in times[1:]]
    return CauchySolution(model, H, None, grid, times, surf, BCMode.RAW_DIRICHLET, scheme,
                          n_steps, boundary={"left": "dirichlet", "right": "dirichlet"})


# -- martingale defect ----------------------------------------------------------

def defect_surface(model: DiffusionModel, lam: float, side: BoundarySide | str, T: float,
                   grid: Grid1D, n_steps: int | None = None, *,
                   klass: MartingaleClass | None = None,
                   sl: SLSolution | None = None,
                   strict_side_bc: str = "dirichlet",
                   output_times: Sequence[float] | None = None) -> DefectSurface:
    """Martingale defect of ``e^{-lam t} phi(X_t)``, ``phi`` the basic
    solution decreasing toward ``side`` (``phi_down`` for ``minus_inf``).

    Solves ``w_t = 0.5 sigma^2 w_xx + sigma^2 (phi'/phi) w_x`` with
    ``w(0) = 1``, ``w = 0`` at the strict side (or zero flux of ``phi w``
    with ``strict_side_bc="flux"``) and ``w_x = 0`` at the opposite end.
    The operator is fitted so that constants are exact steady states, and
    implicit Euler then keeps ``0 <= w <= 1`` and ``w`` non-increasing in
    ``t`` exactly.

    Raises
    ------
    PreconditionError
        If ``side`` is not an entrance boundary of ``model``.
    """
    side = BoundarySide(side)
    if klass is None:
        klass = classify(model)
    if not klass.strict_at(side):
        raise PreconditionError(
            f"side {side.value} is not a strict-local (entrance) side for class "
            f"{klass.label.value}; no martingale defect to compute")
    if strict_side_bc not in ("flux", "dirichlet"):
        raise ConfigError(f"strict_side_bc must be 'flux' or 'dirichlet', got {strict_side_bc!r}")
    if not lam > 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    if not T >= 0:
        raise ConfigError(f"T must be >= 0, got {T}")
    if sl is None:
        sl = compute_basic_solutions(model, lam, grid, on_failure="record")
    x = grid.nodes
    ones = np.ones(x.size)
    if T == 0:
        return DefectSurface(model, float(lam), side, grid, np.array([0.0]), ones[None, :], 0,
                             strict_side_bc, klass.label.value, {"sl_adequacy": sl.adequacy})
    n_steps = default_steps(T, grid) if n_steps is None else int(n_steps)
    u = UChoice.PHI_DOWN if side is BoundarySide.MINUS_INF else UChoice.PHI_UP
    lu = sl.log_u(u)
    sig2 = np.asarray(model.sigma2(x), dtype=float)
    c = _fitted_coefficients(sl, u)
    lo, up = _operator(x, sig2, c)
    # conjugate by phi: off-diagonals scale by phi_j/phi_i, row sums zero
    lo = lo * np.exp(lu[:-2] - lu[1:-1])
    up = up * np.exp(lu[2:] - lu[1:-1])
    if strict_side_bc == "flux":
        # zero flux of phi w: w_0 = (phi_1/phi_0) w_1 (resp. at the right end)
        j, k = (1, 0) if side is BoundarySide.MINUS_INF else (-2, -1)
        strict_row = ("flux", math.exp(lu[j] - lu[k]))
        u0 = ones
    else:
        # Evolve 1 - w, which is 0 initially and 1 at the strict side. With
        # nonnegative data every LU operation sums nonnegative terms, so
        # 1 - w >= 0 (w <= 1) holds in floating point, not just up to rounding.
        strict_row = ("dirichlet", lambda t: 1.0)
        u0 = np.zeros(x.size)
    neumann = ("flux", 1.0)
    if side is BoundarySide.MINUS_INF:
        stepper = _Stepper(lo, up, strict_row, neumann)
    else:
        stepper = _Stepper(lo, up, neumann, strict_row)
    times, surf = _evolve(stepper, u0, Scheme.IMPLICIT_EULER, T, n_steps, output_times, x)
    if strict_side_bc == "dirichlet":
        surf = 1.0 - surf
    increase = float(np.max(np.diff(surf, axis=0))) if surf.shape[0] > 1 else 0.0
    diag = {"sl_adequacy": sl.adequacy, "max_increase_in_t": increase,
            "min_w": float(surf.min()), "max_w": float(surf.max())}
    return DefectSurface(model, float(lam), side, grid, times, surf, n_steps, strict_side_bc,
                         klass.label.value, diag)


# -- diagnostics ----------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryLayerReport:
    times: tuple[float, ...]
    edge_x: tuple[float, float]
    edge_ratio: tuple[tuple[float, float], ...]
    decade_table: tuple[tuple[float, float, float], ...]
    probes: tuple[tuple[float, float, float], ...]

    def to_dict(self) -> dict:
        return {
            "times": list(self.times),
            "edge_x": list(self.edge_x),
            "edge_ratio": [{"t": t, "left": a, "right": b}
                           for t, (a, b) in zip(self.times, self.edge_ratio)],
            "probes": [{"t": t, "x": x, "ratio": r} for t, x, r in self.probes],
        }

    def to_csv_rows(self):
        return ["t", "x", "ratio"], np.array(self.decade_table, dtype=float).reshape(-1, 3)


def boundary_layer_report(sol: CauchySolution, times: Sequence[float],
                          probe_x: Sequence[float] = ()) -> BoundaryLayerReport:
    """Tabulate ``h(t, x)/x`` over the outermost tenth of each half-grid.

    Two iterated limits are visible: at a fixed ``x`` the ratio tends to 1
    as ``t`` decreases to 0 (``probe_x`` adds interior points), while at a
    fixed ``t > 0`` the ratio at the edge tends to 0 on strict sides.
    Times between stored surfaces are interpolated linearly.
    """
    if sol.payoff.kind != "identity":
        raise PreconditionError("boundary-layer report needs H = identity")
    if sol.bc_mode is BCMode.RAW_DIRICHLET:
        raise PreconditionError("boundary-layer report needs a transform-mode solution")
    x = sol.x
    outer = (x <= 0.9 * x[0]) | (x >= 0.9 * x[-1])
    table, edges, probes = [], [], []
    for t in times:
        h = sol.at(float(t))
        for xi, hi in zip(x[outer], h[outer]):
            table.append((float(t), float(xi), float(hi / xi)))
        edges.append((float(h[0] / x[0]), float(h[-1] / x[-1])))
        for xp in probe_x:
            probes.append((float(t), float(xp), float(np.interp(xp, x, h) / xp)))
    return BoundaryLayerReport(tuple(float(t) for t in times), (float(x[0]), float(x[-1])),
                               tuple(edges), tuple(table), tuple(probes))
