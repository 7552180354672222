"""Driftless diffusions ``dX = sigma(X) dB`` on the real line.

Built-in volatilities:

* ``inverse_bessel_2d``: ``sigma(x) = exp(-x)``; ``exp(X)`` is a planar
  Bessel process.
* ``qnv_no_root(a, b)``: ``sigma(x) = b (1 + ((x - a)/b)^2)``, the quadratic
  normal volatility with no real root.
* ``constant_vol(c)``: Brownian motion with volatility ``c``.
* ``tabulated``: monotone cubic (PCHIP) interpolation of user nodes with an
  explicit tail policy.

Every model carries an overall ``scale`` multiplying sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError, DomainError, InvalidModelError
from .grid import Grid1D

KINDS = ("inverse_bessel_2d", "qnv_no_root", "constant_vol", "tabulated")
EXTENSIONS = ("error", "constant", "exponential-fit")


@dataclass(frozen=True)
class DiffusionModel:
    kind: str
    a: float = 0.0
    b: float = 1.0
    c: float = 1.0
    nodes: tuple[tuple[float, float], ...] = ()
    extension: str = "error"
    scale: float = 1.0
    description: str = ""
    _interp: Callable | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise InvalidModelError(f"scale must be positive, got {self.scale}")
        if self.kind == "qnv_no_root" and not self.b > 0:
            raise InvalidModelError(
                f"qnv_no_root needs b > 0 (no real root), got b={self.b}")
        if self.kind == "constant_vol" and not self.c > 0:
            raise InvalidModelError(f"constant_vol needs c > 0, got c={self.c}")
        if self.kind == "tabulated":
            self._init_tabulated()
        if not self.description:
            object.__setattr__(self, "description", self._describe())

    def _init_tabulated(self):
        ext = self.extension.replace("_", "-")
        if ext == "exponential":
            ext = "exponential-fit"
        if ext not in EXTENSIONS:
            raise ConfigError(f"unknown extension {self.extension!r}; expected one of {EXTENSIONS}")
        object.__setattr__(self, "extension", ext)
        arr = np.asarray(self.nodes, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
            raise ConfigError("tabulated nodes must be a list of at least two [xi, sigma] pairs")
        xs, sig = arr[:, 0], arr[:, 1]
        if np.any(np.diff(xs) <= 0):
            raise InvalidModelError("tabulated nodes must be strictly increasing in xi")
        bad = xs[~(sig > 0)]
        if bad.size:
            raise InvalidModelError(f"sigma <= 0 at xi = {bad.tolist()}")
        object.__setattr__(self, "nodes", tuple((float(x), float(s)) for x, s in arr))
        object.__setattr__(self, "_interp", PchipInterpolator(xs, sig, extrapolate=False))

    def _describe(self) -> str:
        base = {
            "inverse_bessel_2d": "inverse 2D Bessel, sigma(x) = exp(-x)",
            "qnv_no_root": f"QNV no-root, sigma(x) = {self.b:g}(1 + ((x - {self.a:g})/{self.b:g})^2)",
            "constant_vol": f"constant volatility {self.c:g}",
            "tabulated": f"tabulated sigma on {len(self.nodes)} nodes, tails: {self.extension}",
        }[self.kind]
        return base if self.scale == 1.0 else f"{self.scale:g} x ({base})"

    # -- evaluation -----------------------------------------------------

    def _tabulated_sigma(self, x: np.ndarray) -> np.ndarray:
        xs = np.array([p[0] for p in self.nodes])
        sig = np.array([p[1] for p in self.nodes])
        out = np.asarray(self._interp(x), dtype=float)
        lo, hi = x < xs[0], x > xs[-1]
        if np.any(lo | hi):
            if self.extension == "error":
                offending = x[lo | hi]
                raise DomainError(
                    f"xi = {offending.min() if lo.any() else offending.max()!r} outside "
                    f"tabulated range [{xs[0]}, {xs[-1]}] with extension='error'")
            if self.extension == "constant":
                out = np.where(lo, sig[0], np.where(hi, sig[-1], out))
            else:
                k_lo = math.log(sig[1] / sig[0]) / (xs[1] - xs[0])
                k_hi = math.log(sig[-1] / sig[-2]) / (xs[-1] - xs[-2])
                out = np.where(lo, sig[0] * np.exp(k_lo * (x - xs[0])), out)
                out = np.where(hi, sig[-1] * np.exp(k_hi * (x - xs[-1])), out)
        return out

    def sigma(self, xi):
        """Volatility at ``xi`` (scalar or array)."""
        x = np.asarray(xi, dtype=float)
        if self.kind == "inverse_bessel_2d":
            out = np.exp(-x)
        elif self.kind == "qnv_no_root":
            u = (x - self.a) / self.b
            out = self.b * (1.0 + u * u)
        elif self.kind == "constant_vol":
            out = np.full_like(x, self.c)
        else:
            out = self._tabulated_sigma(np.atleast_1d(x)).reshape(x.shape)
        if self.scale != 1.0:
            out = self.scale * out
        return float(out) if np.ndim(out) == 0 else out

    def sigma2(self, xi):
        s = self.sigma(xi)
        return s * s

    def scaled(self, factor: float) -> "DiffusionModel":
        """The model with sigma replaced by ``factor * sigma``."""
        cfg = self.to_config()
        cfg["scale"] = self.scale * factor
        cfg.pop("description", None)
        return model_from_config(cfg)

    def to_config(self) -> dict:
        cfg: dict = {"kind": self.kind}
        if self.kind == "qnv_no_root":
            cfg.update(a=self.a, b=self.b)
        elif self.kind == "constant_vol":
            cfg["c"] = self.c
        elif self.kind == "tabulated":
            cfg["nodes"] = [list(p) for p in self.nodes]
            cfg["extension"] = self.extension
        if self.scale != 1.0:
            cfg["scale"] = self.scale
        return cfg


def inverse_bessel_2d() -> DiffusionModel:
    return DiffusionModel("inverse_bessel_2d")


def qnv_no_root(a: float = 0.0, b: float = 1.0) -> DiffusionModel:
    return DiffusionModel("qnv_no_root", a=float(a), b=float(b))


def qnv_from_coefficients(alpha0: float, alpha1: float, alpha2: float) -> DiffusionModel:
    """``sigma(x) = alpha0 + alpha1 x + alpha2 x^2``; only the no-real-root,
    positive case is a diffusion on the whole line, anything else is rejected."""
    disc = alpha1 * alpha1 - 4.0 * alpha0 * alpha2
    if alpha2 <= 0 or disc >= 0:
        raise InvalidModelError(
            "quadratic volatility has a real root or is not positive; the process "
            "would live on a half-line or interval")
    a = -alpha1 / (2.0 * alpha2)
    b = math.sqrt(-disc) / (2.0 * alpha2)
    # alpha2 (x - a)^2 + alpha2 b^2 = (alpha2 b) * b (1 + ((x - a)/b)^2)
    return DiffusionModel("qnv_no_root", a=a, b=b, scale=alpha2 * b)


def constant_vol(c: float = 1.0) -> DiffusionModel:
    return DiffusionModel("constant_vol", c=float(c))


def tabulated(nodes, extension: str = "error") -> DiffusionModel:
    return DiffusionModel("tabulated", nodes=tuple(map(tuple, nodes)), extension=extension)


def model_from_config(cfg: dict) -> DiffusionModel:
    """Build a model from its JSON form, e.g. ``{"kind": "qnv_no_root",
    "a": 0.0, "b": 1.0}``."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError("model config must be an object with a 'kind' field")
    kind = cfg["kind"]
    allowed = {
        "inverse_bessel_2d": set(),
        "qnv_no_root": {"a", "b"},
        "constant_vol": {"c"},
        "tabulated": {"nodes", "extension"},
        "qnv": {"alpha"},
    }
    if kind not in allowed:
        raise ConfigError(f"unknown model kind {kind!r}")
    extra = set(cfg) - allowed[kind] - {"kind", "scale", "description"}
    if extra:
        raise ConfigError(f"unexpected fields for {kind}: {sorted(extra)}")
    try:
        scale = float(cfg.get("scale", 1.0))
        if kind == "qnv":
            m = qnv_from_coefficients(*map(float, cfg["alpha"]))
            return m.scaled(scale) if scale != 1.0 else m
        if kind == "tabulated":
            if "nodes" not in cfg:
                raise ConfigError("tabulated model needs 'nodes'")
            return DiffusionModel("tabulated", nodes=tuple(map(tuple, cfg["nodes"])),
                                  extension=cfg.get("extension", "error"), scale=scale)
        params = {k: float(v) for k, v in cfg.items() if k in allowed[kind]}
        return DiffusionModel(kind, scale=scale, **params)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed {kind} config: {exc}") from exc


def speed_density(model: DiffusionModel) -> Callable:
    """Density ``xi -> 2 / sigma(xi)^2`` of the speed measure."""
    def m_prime(xi):
        s = model.sigma(xi)
        return 2.0 / (s * s)

    return m_prime


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    min_sigma: float
    argmin: float
    kinks: tuple[float, ...]
    n_probe: int

    def to_dict(self) -> dict:
        return {"valid": self.valid, "min_sigma": self.min_sigma, "argmin": self.argmin,
                "kinks": list(self.kinks), "n_probe": self.n_probe}


def validate(model: DiffusionModel, probe_grid: Grid1D | np.ndarray,
             kink_threshold: float = 10.0) -> ValidationReport:
    """Sample sigma on a probe grid and check positivity.

    Only gross regularity defects can be seen from samples: for tabulated
    models, nodes where the slope of ``log sigma`` jumps by more than
    ``kink_threshold`` are flagged (not rejected).
    """
    xs = probe_grid.nodes if isinstance(probe_grid, Grid1D) else np.asarray(probe_grid, float)
    if xs.size == 0:
        raise ConfigError("probe grid is empty")
    sig = np.atleast_1d(model.sigma(xs))
    bad = xs[~(np.isfinite(sig) & (sig > 0))]
    if bad.size:
        shown = ", ".join(f"{v:g}" for v in bad[:10])
        raise InvalidModelError(f"sigma <= 0 or non-finite at xi = {shown}"
                                + (" ..." if bad.size > 10 else ""))
    kinks: tuple[float, ...] = ()
    if model.kind == "tabulated":
        nx = np.array([p[0] for p in model.nodes])
        ns = np.log([p[1] for p in model.nodes])
        slopes = np.diff(ns) / np.diff(nx)
        jumps = np.abs(np.diff(slopes))
        kinks = tuple(float(v) for v in nx[1:-1][jumps > kink_threshold])
    i = int(np.argmin(sig))
    return ValidationReport(True, float(sig[i]), float(xs[i]), kinks, int(xs.size))
