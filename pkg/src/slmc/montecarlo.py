"""Monte Carlo estimates of ``E^x[H(X_t)]`` as an independent check on the
PDE solver.

RNG contract. Paths are processed in blocks of ``block_size``; block ``b``
draws from ``Philox`` seeded by ``SeedSequence(seed, spawn_key=(b,))``, so
path ``i`` always lives in block ``i // block_size`` and sees the same
normals whatever the execution order or total path count (a short final
block still draws a full block of normals and uses a prefix). Normals come from numpy's
``standard_normal`` (ziggurat). With ``antithetic=True`` each block uses
``block_size // 2`` draws per step and pairs every path with its mirror.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cauchy import PayoffSpec, payoff_from_config
from .errors import ConfigError, NumericalError
from .models import DiffusionModel

log = logging.getLogger(__name__)

DEFAULT_BLOCK = 16384
MAX_FLAGGED_FRACTION = 1e-3
ESTIMATORS = ("euler", "exact_bessel2d")


def block_generator(seed: int, block: int) -> np.random.Generator:
    """The generator owning paths ``[block * B, (block + 1) * B)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(block,))))


def _blocks(n_paths: int, block_size: int, antithetic: bool):
    if antithetic and block_size % 2:
        raise ConfigError("antithetic sampling needs an even block size")
    start = 0
    b = 0
    while start < n_paths:
        size = min(block_size, n_paths - start)
        if antithetic and size % 2:
            raise ConfigError("antithetic sampling needs an even number of paths")
        yield b, start, size
        start += size
        b += 1


@dataclass(frozen=True)
class MCSample:
    """Terminal values ``X_t`` (one row per starting point) with the run
    configuration. Non-finite paths are kept as NaN and counted in
    ``n_flagged``."""

    values: np.ndarray
    x0: tuple[float, ...]
    t: float
    seed: int
    estimator: str
    n_steps: int | None
    antithetic: bool
    block_size: int
    n_flagged: tuple[int, ...]
    model: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {self.estimator!r}")

    @property
    def n_paths(self) -> int:
        return int(self.values.shape[-1])

    def row(self, k: int = 0) -> "MCSample":
        """Single-starting-point view."""
        return MCSample(self.values[k:k + 1], (self.x0[k],), self.t, self.seed, self.estimator,
                        self.n_steps, self.antithetic, self.block_size, (self.n_flagged[k],),
                        self.model)


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n_paths: int
    seed: int
    estimator: str
    x0: float | None = None
    t: float | None = None
    payoff: str = ""
    n_flagged: int = 0

    def __post_init__(self):
        if not self.std_error >= 0:
            raise ValueError("std_error must be >= 0")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _check_common(t: float, n_paths: int, block_size: int):
    if not t > 0:
        raise ConfigError(f"t must be positive, got {t}")
    if int(n_paths) != n_paths or n_paths < 1:
        raise ConfigError(f"n_paths must be >= 1, got {n_paths}")
    if block_size < 2:
        raise ConfigError("block_size must be >= 2")


def _flag(values: np.ndarray, x0: Sequence[float],
          max_fraction: float = MAX_FLAGGED_FRACTION) -> tuple[int, ...]:
    bad = ~np.isfinite(values)
    counts = tuple(int(c) for c in bad.sum(axis=1))
    n = values.shape[1]
    for x, c in zip(x0, counts):
        if c > max_fraction * n:
            raise NumericalError(
                f"{c} of {n} Euler paths from x0={x:g} became non-finite "
                f"(> {max_fraction:.1%}); refine n_steps")
        if c:
            log.warning("%d non-finite Euler paths from x0=%g flagged and excluded", c, x)
    values[bad] = np.nan
    return counts


def simulate_euler(model: DiffusionModel, x0: float | Sequence[float], t: float, n_steps: int,
                   n_paths: int, seed: int, *, antithetic: bool = False,
                   block_size: int = DEFAULT_BLOCK,
                   max_flagged_fraction: float = MAX_FLAGGED_FRACTION) -> MCSample:
    """Euler-Maruyama ``X_{k+1} = X_k + sigma(X_k) sqrt(dt) Z_k``.

    ``x0`` may be a sequence of starting points; they share the normals
    (common random numbers) and each gets its own row of terminal values.
    Paths are never clamped; values that turn non-finite are flagged and
    excluded, and more than 0.1% flagged is an error.

    Raises
    ------
    NumericalError
        Too many non-finite paths.
    """
    _check_common(t, n_paths, block_size)
    if int(n_steps) != n_steps or n_steps < 1:
        raise ConfigError(f"n_steps must be >= 1, got {n_steps}")
    starts = tuple(float(v) for v in np.atleast_1d(x0))
    sq = math.sqrt(t / n_steps)
    out = np.empty((len(starts), int(n_paths)))
    for b, start, size in _blocks(int(n_paths), block_size, antithetic):
        rng = block_generator(seed, b)
        # a short final block still draws a full block per step, so path i
        # sees the same normals whatever n_paths is
        full = block_size // 2 if antithetic else block_size
        draws = size // 2 if antithetic else size
        zfull = np.empty(full)
        z = zfull[:draws]
        dw = np.empty(size)
        x = np.repeat(np.array(starts)[:, None], size, axis=1)
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(int(n_steps)):
                rng.standard_normal(out=zfull)
                if antithetic:
                    dw[0::2] = z
                    dw[1::2] = -z
                else:
                    dw[:] = z
                dw *= sq
                x += model.sigma(x) * dw
        out[:, start:start + size] = x
    flagged = _flag(out, starts, max_flagged_fraction)
    return MCSample(out, starts, float(t), int(seed), "euler", int(n_steps), antithetic,
                    block_size, flagged, model.to_config())


def simulate_exact_bessel2d(x0: float | Sequence[float], t: float, n_paths: int, seed: int, *,
                            antithetic: bool = False,
                            block_size: int = DEFAULT_BLOCK) -> MCSample:
    """Exact terminal law for the inverse 2D Bessel model: ``X_t = log|W_t|``
    with ``W_t = (e^{x0} + sqrt(t) Z_1, sqrt(t) Z_2)``."""
    _check_common(t, n_paths, block_size)
    starts = tuple(float(v) for v in np.atleast_1d(x0))
    s = math.sqrt(t)
    out = np.empty((len(starts), int(n_paths)))
    for b, start, size in _blocks(int(n_paths), block_size, antithetic):
        rng = block_generator(seed, b)
        draws = size // 2 if antithetic else size
        full = block_size // 2 if antithetic else block_size
        z = rng.standard_normal((2, full))[:, :draws]
        if antithetic:
            zz = np.empty((2, size))
            zz[:, 0::2] = z
            zz[:, 1::2] = -z
            z = zz
        for k, x in enumerate(starts):
            w1 = math.exp(x) + s * z[0]
            w2 = s * z[1]
            out[k, start:start + size] = 0.5 * np.log(w1 * w1 + w2 * w2)
    flagged = _flag(out, starts)
    return MCSample(out, starts, float(t), int(seed), "exact_bessel2d", None, antithetic,
                    block_size, flagged, {"kind": "inverse_bessel_2d"})


def estimate_expectation(sample: MCSample, H: PayoffSpec | str | dict,
                         row: int = 0) -> MCEstimate:
    """Mean of ``H(X_t)`` and its standard error ``sd / sqrt(n)``.

    Flagged paths are excluded. For antithetic samples the standard error
    is computed from the pair means, which are the independent draws.
    """
    H = payoff_from_config(H)
    vals = sample.values[row]
    if vals.size == 0:
        raise ConfigError("empty sample")
    y = np.asarray(H(vals), dtype=float)
    if sample.antithetic:
        y = 0.5 * (y[0::2] + y[1::2])
    y = y[np.isfinite(y)]
    if y.size == 0:
        raise NumericalError("no finite paths in sample")
    if np.all(y == y[0]):
        mean, se = float(y[0]), 0.0
    else:
        mean = float(np.mean(y))
        se = float(np.std(y, ddof=1) / math.sqrt(y.size)) if y.size > 1 else math.inf
    return MCEstimate(mean, se, sample.n_paths, sample.seed, sample.estimator,
                      sample.x0[row], sample.t, H.label(), sample.n_flagged[row])


def to_csv_rows(estimates: Sequence[MCEstimate], model_label: str):
    header = ["model", "x0", "t", "H", "n_paths", "seed", "mean", "std_error"]
    rows = [[model_label, e.x0, e.t, e.payoff, e.n_paths, e.seed, e.mean, e.std_error]
            for e in estimates]
    return header, rows
