"""Tridiagonal linear systems.

The solves go through LAPACK's ``?gtsv``/``?gttrf`` (partial pivoting), so a
system that would hit a zero pivot in plain Thomas elimination but is
nonsingular still solves; only genuinely singular systems are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from ..errors import ConfigError, SingularSystemError


@dataclass(frozen=True)
class TridiagonalSystem:
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        n = len(self.diag)
        if n < 1:
            raise ConfigError("tridiagonal system needs n >= 1")
        if len(self.lower) != n - 1 or len(self.upper) != n - 1 or len(self.rhs) != n:
            raise ConfigError(
                f"inconsistent lengths: lower={len(self.lower)}, diag={n}, "
                f"upper={len(self.upper)}, rhs={len(self.rhs)}")

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return tridiag_matvec(self.lower, self.diag, self.upper, x)


def tridiag_matvec(lower, diag, upper, x):
    x = np.asarray(x, dtype=float)
    y = diag * x
    y[1:] += lower * x[:-1]
    y[:-1] += upper * x[1:]
    return y


def solve_tridiagonal(system: TridiagonalSystem) -> np.ndarray:
    """Solve ``A x = rhs`` for the tridiagonal matrix ``A`` of ``system``.

    Raises
    ------
    SingularSystemError
        If the matrix is exactly singular.
    """
    dl = np.array(system.lower, dtype=float)
    d = np.array(system.diag, dtype=float)
    du = np.array(system.upper, dtype=float)
    b = np.array(system.rhs, dtype=float)
    if len(d) == 1:
        if d[0] == 0.0:
            raise SingularSystemError("zero pivot at row 0")
        return b / d
    *_, x, info = lapack.dgtsv(dl, d, du, b)
    if info > 0:
        raise SingularSystemError(f"zero pivot at row {info - 1}")
    if info < 0:  # pragma: no cover
        raise ConfigError(f"dgtsv: illegal argument {-info}")
    return x


class TridiagonalFactor:
    """LU factorization of a fixed tridiagonal matrix, reused across many
    right-hand sides (one per time step)."""

    def __init__(self, lower, diag, upper):
        self._lu = None
        if len(diag) <= 2:
            # scipy's dgttrf wrapper mis-sizes its workspace for n <= 2
            self._small = (np.array(lower, dtype=float), np.array(diag, dtype=float),
                           np.array(upper, dtype=float))
            solve_tridiagonal(TridiagonalSystem(*self._small, np.zeros(len(diag))))
            return
        dl, d, du, du2, ipiv, info = lapack.dgttrf(
            np.array(lower, dtype=float), np.array(diag, dtype=float),
            np.array(upper, dtype=float))
        if info > 0:
            raise SingularSystemError(f"zero pivot at row {info - 1}")
        self._lu = (dl, d, du, du2, ipiv)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._lu is None:
            return solve_tridiagonal(TridiagonalSystem(*self._small, np.asarray(rhs, dtype=float)))
        x, info = lapack.dgttrs(*self._lu, np.asarray(rhs, dtype=float))
        if info != 0:  # pragma: no cover
            raise ConfigError(f"dgttrs: illegal argument {-info}")
        return x
