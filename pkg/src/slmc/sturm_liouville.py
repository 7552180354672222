r"""Basic solutions of :math:`\lambda\varphi = \tfrac12\sigma^2\varphi''` on a
truncated grid.

The increasing solution is the two-point problem with zero slope at
``x_left`` and value 1 at the origin, continued to ``x_right`` along the
growing direction; the decreasing one is its mirror image. Both are solved by
the forward sweep of tridiagonal elimination, carried in ratio form
(:math:`\varphi_{i+1}/\varphi_i`) so that :math:`\log\varphi` is available
even where :math:`\varphi` itself would overflow.

Discretization. Where the grid resolves the local decay length
(:math:`h\sqrt{q} \le 1/4`, :math:`q = 2\lambda/\sigma^2`), rows use a compact
three-point stencil exact on quartics (Numerov on uniform spacing, the
non-uniform generalization at the spacing jump through 0). Elsewhere rows
switch to a stencil fitted to the Liouville-Green pair
:math:`q^{-1/4}\exp(\pm\int\sqrt q)`, which is accurate exactly where
:math:`q` is large and keeps every ratio positive however coarse the grid.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .classification import BoundarySide, MartingaleClass
from .errors import ConfigError, TruncationError
from .grid import Grid1D
from .models import DiffusionModel

log = logging.getLogger(__name__)

RESOLVED_KH = 0.25
ADEQUACY_RTOL = 1e-6
CONVEXITY_RTOL = 1e-8


class UChoice(str, enum.Enum):
    PHI = "Phi"
    PHI_UP = "phi_up"
    PHI_DOWN = "phi_down"


# -- stencils -------------------------------------------------------------

def _interval_phase(h: np.ndarray, q_lo: np.ndarray, q_hi: np.ndarray) -> np.ndarray:
    """``int sqrt(q)`` over an interval of length ``h``, with ``sqrt(q)``
    interpolated exponentially between the end values."""
    k0, k1 = np.sqrt(q_lo), np.sqrt(q_hi)
    d = 0.5 * np.log(q_hi / q_lo)
    small = np.abs(d) < 1e-6
    with np.errstate(divide="ignore", invalid="ignore"):
        s = h * (k1 - k0) / np.where(small, 1.0, d)
    return np.where(small, h * np.sqrt(k0 * k1) * (1.0 + d * d / 24.0), s)


def _log_sinh_ratio(s_num, s_den):
    """``log(sinh(s_num)/sinh(s_den))`` for positive arguments."""
    return (s_num - s_den + np.log(-np.expm1(-2.0 * s_num))
            - np.log(-np.expm1(-2.0 * s_den)))


def _rows(h_minus, h_plus, q_minus, q0, q_plus):
    """Rows ``a phi[i-1] - phi[i] + c phi[i+1] = 0`` with ``a, c > 0``.

    Returns ``log a``, ``log c`` and the resolution mask.
    """
    H = h_minus + h_plus
    resolved = (np.sqrt(np.maximum(np.maximum(q_minus, q0), q_plus))
                * np.maximum(h_minus, h_plus) <= RESOLVED_KH)

    # compact quartic-exact stencil, scaled by h_- h_+
    am = 2.0 / (h_minus * H)
    ap = 2.0 / (h_plus * H)
    bm = (h_minus ** 2 + h_minus * h_plus - h_plus ** 2) / (6.0 * H * h_minus)
    bp = (h_plus ** 2 + h_minus * h_plus - h_minus ** 2) / (6.0 * H * h_plus)
    b0 = 1.0 - bm - bp
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        centre = (am + ap + b0 * q0)
        a_c = (am - bm * q_minus) / centre
        c_c = (ap - bp * q_plus) / centre

        # Liouville-Green fitted stencil, exact for q^(-1/4) exp(+-int sqrt(q)):
        # a = sinh(S+) / (A- sinh(S+ + S-)), c = sinh(S-) / (A+ sinh(S+ + S-))
        s_m = _interval_phase(h_minus, q_minus, q0)
        s_p = _interval_phase(h_plus, q0, q_plus)
        log_am = -0.25 * np.log(q_minus / q0)
        log_ap = -0.25 * np.log(q_plus / q0)
        log_a_f = _log_sinh_ratio(s_p, s_p + s_m) - log_am
        log_c_f = _log_sinh_ratio(s_m, s_p + s_m) - log_ap
        log_a = np.where(resolved, np.log(np.where(resolved, a_c, 1.0)), log_a_f)
        log_c = np.where(resolved, np.log(np.where(resolved, c_c, 1.0)), log_c_f)
    if np.any(resolved & ~((a_c > 0) & (c_c > 0))):  # pragma: no cover - excluded by RESOLVED_KH
        raise TruncationError("compact stencil lost positivity")
    return log_a, log_c, resolved


def _sweep(x: np.ndarray, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Log of the solution with zero slope at ``x[0]``, up to a constant, and
    the resolution mask.

    This is the forward elimination of the tridiagonal system written for the
    ratios ``r_i = phi[i+1]/phi[i]``; the first row is reflected through
    ``x[0]`` (``phi[-1] = phi[1]``) to impose the zero slope.
    """
    n = x.size
    h = np.diff(x)
    hm = np.concatenate([[h[0]], h[:-1]])
    qm = np.concatenate([[q[1]], q[:-2]])
    log_a, log_c, resolved = _rows(hm, h, qm, q[:-1], q[1:])
    logr = np.empty(n - 1)
    # reflected first row: (a + c) phi[1] = phi[0]
    logr[0] = -np.logaddexp(log_a[0], log_c[0])
    lr = logr[0]
    for i in range(1, n - 1):
        val = -np.expm1(log_a[i] - lr)
        if not val > 0:
            raise TruncationError(
                f"positivity lost at x={x[i]:g}; truncation too small; enlarge grid")
        lr = np.log(val) - log_c[i]
        logr[i] = lr
    logphi = np.concatenate([[0.0], np.cumsum(logr)])
    res = np.concatenate([resolved, [resolved[-1]]])
    return logphi, res


def _compact_derivative_weights(offsets: np.ndarray) -> np.ndarray:
    """Weights ``(w_j, v_j)`` with ``phi'(x_i) ~ sum w_j phi_j + v_j phi''_j``,
    exact for polynomials of degree <= 4. ``offsets`` has shape (m, 3) and
    contains the centre (offset 0); its ``v`` is fixed at zero, since a
    sixth condition would make the system singular on symmetric stencils."""
    scale = np.max(np.abs(offsets), axis=1, keepdims=True)
    o = offsets / scale
    m = o.shape[0]
    centre = np.argmin(np.abs(o), axis=1)
    others = np.array([[j for j in range(3) if j != c] for c in centre])
    oo = np.take_along_axis(o, others, axis=1)
    A = np.zeros((m, 5, 5))
    rhs = np.zeros((m, 5))
    for p in range(5):
        A[:, p, :3] = o ** p
        if p >= 2:
            A[:, p, 3:] = p * (p - 1) * oo ** (p - 2)
        rhs[:, p] = 1.0 if p == 1 else 0.0
    sol = np.linalg.solve(A, rhs[..., None])[..., 0]
    w = sol[:, :3] / scale
    v = np.zeros_like(w)
    np.put_along_axis(v, others, sol[:, 3:] * scale, axis=1)
    return np.concatenate([w, v], axis=1)


def _log_derivative(x: np.ndarray, q: np.ndarray, logphi: np.ndarray,
                    resolved: np.ndarray) -> np.ndarray:
    """``phi'/phi`` at every node."""
    n = x.size
    idx = np.empty((n, 3), dtype=int)
    idx[1:-1] = np.arange(n - 2)[:, None] + np.arange(3)
    idx[0] = (0, 1, 2)
    idx[-1] = (n - 3, n - 2, n - 1)
    centre = np.arange(n)
    offsets = x[idx] - x[centre][:, None]
    weights = _compact_derivative_weights(offsets)
    rel = np.exp(np.clip(logphi[idx] - logphi[centre][:, None], -700.0, 700.0))
    y = np.sum(weights[:, :3] * rel, axis=1) + np.sum(weights[:, 3:] * q[idx] * rel, axis=1)

    bad = ~resolved
    if np.any(bad):
        i = np.flatnonzero(bad)
        # Liouville-Green pair at node i: log-slope -mu +- k with mu = (log q)'/4
        k = np.sqrt(q[i])
        lq = np.log(q)
        mu = 0.25 * np.gradient(lq, x)[i]
        yf = np.zeros(i.size)
        cnt = np.zeros(i.size)
        has_r = i < n - 1
        ir = i[has_r]
        s_p = _interval_phase(x[ir + 1] - x[ir], q[ir], q[ir + 1])
        yf[has_r] += _fitted_slope(k[has_r], s_p, logphi[ir + 1] - logphi[ir]
                                   + 0.25 * (lq[ir + 1] - lq[ir]))
        cnt[has_r] += 1
        has_l = i > 0
        il = i[has_l]
        s_m = _interval_phase(x[il] - x[il - 1], q[il - 1], q[il])
        yf[has_l] -= _fitted_slope(k[has_l], s_m, logphi[il - 1] - logphi[il]
                                   + 0.25 * (lq[il - 1] - lq[il]))
        cnt[has_l] += 1
        y[i] = yf / cnt - mu
    return y


def _fitted_slope(k, s, dlog):
    """``k (rho - cosh s)/sinh s`` with ``rho = exp(dlog)``: the log-slope
    coefficient of ``alpha e^{s} + (1 - alpha) e^{-s}`` matching ``rho``."""
    k = np.asarray(k, float)
    s = np.asarray(s, float)
    dlog = np.asarray(dlog, float)
    with np.errstate(over="ignore"):
        big = s > 30.0
        safe = np.where(big, 1.0, s)
        val = k * (np.exp(np.where(big, 0.0, dlog)) - np.cosh(safe)) / np.sinh(safe)
        # exp(dlog - s) form avoids overflow when s is large
        val_big = k * (2.0 * np.exp(np.minimum(dlog - s, 700.0)) - 1.0)
    return np.where(big, val_big, val)


# -- solution object --------------------------------------------------------

@dataclass(frozen=True)
class SLSolution:
    """Basic solutions sampled on ``grid``, normalized to 1 at the origin.

    Everything is stored in log form; ``phi_up`` etc. are exponentiated on
    access and may overflow to ``inf`` on extreme grids.
    """

    model: DiffusionModel
    lam: float
    grid: Grid1D
    log_phi_up: np.ndarray
    log_phi_down: np.ndarray
    dlog_phi_up: np.ndarray
    dlog_phi_down: np.ndarray
    resolved: np.ndarray = field(repr=False)
    adequacy: dict = field(default_factory=dict, compare=False)

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def phi_up(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_phi_up)

    @property
    def phi_down(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_phi_down)

    @property
    def phi_up_prime(self) -> np.ndarray:
        return self.dlog_phi_up * self.phi_up

    @property
    def phi_down_prime(self) -> np.ndarray:
        return self.dlog_phi_down * self.phi_down

    @property
    def log_Phi(self) -> np.ndarray:
        return np.logaddexp(self.log_phi_up, self.log_phi_down)

    @property
    def Phi(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_Phi)

    @property
    def dlog_Phi(self) -> np.ndarray:
        """``Phi'/Phi`` as a weighted mean of the two log-derivatives."""
        lP = self.log_Phi
        return (np.exp(self.log_phi_up - lP) * self.dlog_phi_up
                + np.exp(self.log_phi_down - lP) * self.dlog_phi_down)

    def log_u(self, u: UChoice | str) -> np.ndarray:
        u = UChoice(u)
        return {UChoice.PHI: self.log_Phi, UChoice.PHI_UP: self.log_phi_up,
                UChoice.PHI_DOWN: self.log_phi_down}[u]

    def dlog_u(self, u: UChoice | str) -> np.ndarray:
        u = UChoice(u)
        return {UChoice.PHI: self.dlog_Phi, UChoice.PHI_UP: self.dlog_phi_up,
                UChoice.PHI_DOWN: self.dlog_phi_down}[u]


def _solve(model: DiffusionModel, lam: float, grid: Grid1D) -> SLSolution:
    x = grid.nodes
    sig2 = np.asarray(model.sigma2(x), dtype=float)
    q = 2.0 * lam / sig2
    if not np.all(np.isfinite(q)):
        raise ConfigError("sigma vanishes or overflows on the grid")
    z = grid.zero_index
    lu, res_u = _sweep(x, q)
    ld_rev, res_d_rev = _sweep(-x[::-1], q[::-1])
    ld = ld_rev[::-1]
    res_d = res_d_rev[::-1]
    lu = lu - lu[z]
    ld = ld - ld[z]
    resolved = res_u & res_d
    yu = _log_derivative(x, q, lu, resolved)
    yd = _log_derivative(x, q, ld, resolved)
    sol = SLSolution(model, float(lam), grid, lu, ld, yu, yd, resolved)
    _check_shape(sol)
    return sol


def _check_shape(sol: SLSolution) -> None:
    """Monotone/positive/convex invariants; raises on violation."""
    x = sol.x
    # roundoff: increments can be below double resolution far from the origin
    slack = 1e-13
    du = np.diff(sol.log_phi_up)
    dd = np.diff(sol.log_phi_down)
    if np.any(du < -slack):
        i = int(np.argmin(du))
        raise TruncationError(f"phi_up decreases at x={x[i]:g}; truncation too small; enlarge grid")
    if np.any(dd > slack):
        i = int(np.argmax(dd))
        raise TruncationError(f"phi_down increases at x={x[i]:g}; truncation too small; enlarge grid")
    for name, lp in (("phi_up", sol.log_phi_up), ("phi_down", sol.log_phi_down)):
        rel = second_difference_ratio(x, lp)
        if np.any(rel < -CONVEXITY_RTOL):
            i = int(np.argmin(rel)) + 1
            raise TruncationError(
                f"{name} not convex at x={x[i]:g}; truncation too small; enlarge grid")


def second_difference_ratio(x: np.ndarray, logphi: np.ndarray) -> np.ndarray:
    """``h_- h_+ D2(phi) / phi`` at interior nodes, from log values (a
    dimensionless convexity measure)."""
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    with np.errstate(over="ignore"):
        rp = np.expm1(logphi[2:] - logphi[1:-1])
        rm = np.expm1(logphi[:-2] - logphi[1:-1])
    return 2.0 * (hm * rp + hp * rm) / (hm + hp)


def _inner_change(small: SLSolution, big: SLSolution) -> float:
    offset = int(np.flatnonzero(big.x == small.x[0])[0])
    sl = slice(offset, offset + small.x.size)
    mask = small.grid.inner_half()
    diffs = []
    for a, b in ((small.log_phi_up, big.log_phi_up[sl]),
                 (small.log_phi_down, big.log_phi_down[sl])):
        diffs.append(np.max(np.abs(np.expm1(b[mask] - a[mask]))))
    return float(max(diffs))


def compute_basic_solutions(model: DiffusionModel, lam: float, grid: Grid1D,
                            check_adequacy: bool = True,
                            on_failure: str = "raise") -> SLSolution:
    """Increasing and decreasing basic solutions for ``lam`` on ``grid``.

    With ``check_adequacy`` the solve is repeated on the grid enlarged by 25%
    (same nodes plus extensions at the edge spacing); the solution is
    accepted if the inner half moves by less than 1e-6 relative. On failure
    the enlarged solution is checked once more against a further
    enlargement and returned if that passes; otherwise ``TruncationError``.
    With ``on_failure="record"`` the solution always stays on ``grid`` (as a
    solver sharing the grid needs) and a failed check is only recorded in
    ``adequacy``.

    Near an entrance boundary the zero-slope truncation converges only
    algebraically (about ``1/L^2`` for quadratic volatility), so such models
    need wide grids to pass.
    """
    if not lam > 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    if on_failure not in ("raise", "record"):
        raise ConfigError(f"on_failure must be 'raise' or 'record', got {on_failure!r}")
    sol = _solve(model, lam, grid)
    if not check_adequacy:
        return sol
    bigger = _solve(model, lam, enlarge(grid))
    change = _inner_change(sol, bigger)
    if change < ADEQUACY_RTOL:
        return _with_adequacy(sol, change, retried=False)
    if on_failure == "record":
        return _with_adequacy(sol, change, retried=False, passed=False)
    log.info("SL truncation adequacy failed (%.2e); retrying on enlarged grid", change)
    biggest = _solve(model, lam, enlarge(bigger.grid))
    change2 = _inner_change(bigger, biggest)
    if change2 < ADEQUACY_RTOL:
        return _with_adequacy(bigger, change2, retried=True)
    raise TruncationError(
        f"truncation too small; enlarge grid (inner-half change {change2:.2e} "
        f"after one retry, tolerance {ADEQUACY_RTOL:g})")


def _with_adequacy(sol: SLSolution, change: float, retried: bool,
                   passed: bool = True) -> SLSolution:
    info = {"inner_half_change": change, "tolerance": ADEQUACY_RTOL,
            "passed": passed, "retried": retried}
    object.__setattr__(sol, "adequacy", info)
    return sol


def enlarge(grid: Grid1D, factor: float = 1.25) -> Grid1D:
    """The grid with extra nodes appended at each edge's spacing until each
    side is ``factor`` times as long; original nodes are kept."""
    x = grid.nodes
    hl = x[1] - x[0]
    hr = x[-1] - x[-2]
    nl = int(np.ceil((factor - 1.0) * (-x[0]) / hl))
    nr = int(np.ceil((factor - 1.0) * x[-1] / hr))
    left = x[0] - hl * np.arange(nl, 0, -1)
    right = x[-1] + hr * np.arange(1, nr + 1)
    return Grid1D.from_nodes(np.concatenate([left, x, right]))


# -- diagnostics --------------------------------------------------------------

def wronskian(sol: SLSolution) -> np.ndarray:
    """``phi_down phi_up' - phi_down' phi_up`` at every node (constant in x
    for a driftless equation)."""
    with np.errstate(over="ignore"):
        return np.exp(sol.log_phi_up + sol.log_phi_down) * (sol.dlog_phi_up - sol.dlog_phi_down)


@dataclass(frozen=True)
class GrowthReport:
    up_linear: bool
    down_linear: bool
    up_slope: float
    down_slope: float
    up_slope_change: float
    down_slope_change: float
    consistent: bool
    warnings: tuple[str, ...]

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__} | {
            "warnings": list(self.warnings)}


def _edge_slope(x, logphi, dlog, side: str, tol: float):
    if side == "right":
        sel = x >= 0.9 * x[-1]
    else:
        sel = x <= 0.9 * x[0]
    idx = np.flatnonzero(sel)
    if idx.size < 2:
        idx = np.array([x.size - 2, x.size - 1]) if side == "right" else np.array([1, 0])
    i1, i2 = (idx[0], idx[-1]) if side == "right" else (idx[-1], idx[0])
    with np.errstate(over="ignore"):
        s1 = dlog[i1] * np.exp(logphi[i1])
        s2 = dlog[i2] * np.exp(logphi[i2])
    if not (np.isfinite(s1) and np.isfinite(s2)) or s1 == 0:
        return False, float("inf"), float("inf")
    change = abs(s2 / s1 - 1.0)
    # first-order Richardson in 1/x for the limiting slope
    x1, x2 = x[i1], x[i2]
    slope = (x2 * s2 - x1 * s1) / (x2 - x1)
    return bool(change <= tol), float(slope), float(change)


def growth_report(sol: SLSolution, klass: MartingaleClass | None = None,
                  tol: float = 0.05) -> GrowthReport:
    """Linear vs super-linear growth of the basic solutions at the grid edges.

    The slope ``phi'`` is compared across the outermost tenth of each
    half-grid; a relative change within ``tol`` reads as linear growth, and
    the limiting slope is extrapolated linearly in ``1/x``. With ``klass``
    the flags are cross-checked against the speed-integral verdicts
    (linear growth at +inf iff the right integral is finite); a mismatch is
    reported as a warning, not raised.
    """
    x = sol.x
    up_lin, up_slope, up_ch = _edge_slope(x, sol.log_phi_up, sol.dlog_phi_up, "right", tol)
    dn_lin, dn_slope, dn_ch = _edge_slope(x, sol.log_phi_down, sol.dlog_phi_down, "left", tol)
    warnings = []
    if klass is not None:
        if up_lin != klass.strict_at(BoundarySide.PLUS_INF):
            warnings.append(
                f"phi_up growth at +inf reads {'linear' if up_lin else 'super-linear'} but the "
                f"right speed integral is {klass.right_integral.verdict.value}")
        if dn_lin != klass.strict_at(BoundarySide.MINUS_INF):
            warnings.append(
                f"phi_down growth at -inf reads {'linear' if dn_lin else 'super-linear'} but the "
                f"left speed integral is {klass.left_integral.verdict.value}")
    for w in warnings:
        log.warning("growth/class consistency: %s", w)
    return GrowthReport(up_lin, dn_lin, up_slope, dn_slope, up_ch, dn_ch,
                        not warnings, tuple(warnings))


def transform_coefficients(sol: SLSolution, u_choice: UChoice | str = UChoice.PHI):
    """Drift ``sigma^2 u'/u`` and scale ``s_u(z) = int_0^z u^-2`` (trapezoid,
    ``s_u(0) = 0``) of the diffusion after the Doob transform by ``u``."""
    x = sol.x
    sig2 = np.asarray(sol.model.sigma2(x), dtype=float)
    drift = sig2 * sol.dlog_u(u_choice)
    inv2 = np.exp(-2.0 * sol.log_u(u_choice))
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (inv2[1:] + inv2[:-1]) * np.diff(x))])
    scale = cum - cum[sol.grid.zero_index]
    return drift, scale


def curvature(sol: SLSolution, u_choice: UChoice | str = UChoice.PHI) -> np.ndarray:
    """``(D2 u)/u`` at interior nodes, with ``D2`` the plain three-point
    second difference on the (possibly non-uniform) grid.

    Where the compact stencil was used the value comes from the discrete
    equation itself (``D2 u = sum beta_j q_j u_j``), which avoids the
    cancellation of a direct second difference where ``u`` is nearly
    linear; the result is positive by construction. A ``Phi`` curvature is
    the weighted mean of the two basic-solution curvatures.
    """
    u_choice = UChoice(u_choice)
    if u_choice is UChoice.PHI:
        lP = sol.log_Phi[1:-1]
        wu = np.exp(sol.log_phi_up[1:-1] - lP)
        return (wu * curvature(sol, UChoice.PHI_UP)
                + (1.0 - wu) * curvature(sol, UChoice.PHI_DOWN))
    x = sol.x
    q = 2.0 * sol.lam / np.asarray(sol.model.sigma2(x), dtype=float)
    lu = sol.log_u(u_choice)
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    H = hm + hp
    dm = lu[:-2] - lu[1:-1]
    dp = lu[2:] - lu[1:-1]
    _, _, resolved = _rows(hm, hp, q[:-2], q[1:-1], q[2:])
    bm = (hm ** 2 + hm * hp - hp ** 2) / (6.0 * H * hm)
    bp = (hp ** 2 + hm * hp - hm ** 2) / (6.0 * H * hp)
    b0 = 1.0 - bm - bp
    with np.errstate(over="ignore"):
        compact = bm * q[:-2] * np.exp(dm) + b0 * q[1:-1] + bp * q[2:] * np.exp(dp)
        direct = 2.0 / H * (np.expm1(dp) / hp + np.expm1(dm) / hm)
    return np.where(resolved, compact, direct)


def residual(sol: SLSolution, which: str = "up") -> np.ndarray:
    """``(0.5 sigma^2 D2 phi - lam phi)/phi`` at interior nodes with the plain
    central second difference."""
    x = sol.x
    lp = sol.log_phi_up if which == "up" else sol.log_phi_down
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    d2_over_phi = second_difference_ratio(x, lp) / (hm * hp)
    sig2 = np.asarray(sol.model.sigma2(x[1:-1]), dtype=float)
    return 0.5 * sig2 * d2_over_phi - sol.lam


def to_csv_rows(sol: SLSolution):
    drift, scale = transform_coefficients(sol, UChoice.PHI)
    header = ["x", "phi_up", "phi_down", "Phi", "phi_up_prime", "phi_down_prime",
              "drift_Phi", "scale_Phi"]
    cols = [sol.x, sol.phi_up, sol.phi_down, sol.Phi, sol.phi_up_prime,
            sol.phi_down_prime, drift, scale]
    return header, np.column_stack(cols)
