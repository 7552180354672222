"""Shared fixtures and independent oracles.

Closed forms for the inverse 2D Bessel model are evaluated with
``scipy.special``, which is independent of the in-package special functions.
"""

import math

import numpy as np
import pytest
from scipy import special as sps

from slmc.grid import Grid1D
from slmc.models import constant_vol, inverse_bessel_2d, qnv_no_root

EULER_GAMMA = 0.5772156649015329


def bessel_h(t, x):
    """``x + E1(e^{2x} / (2t)) / 2``: the Cauchy solution for identity data."""
    x = np.asarray(x, dtype=float)
    return x + 0.5 * sps.exp1(np.exp(2.0 * x) / (2.0 * t))


def bessel_phi_up(x, lam=0.5):
    k = math.sqrt(2.0 * lam)
    return sps.i0(k * np.exp(x)) / sps.i0(k)


def bessel_phi_down(x, lam=0.5):
    k = math.sqrt(2.0 * lam)
    return sps.k0(k * np.exp(x)) / sps.k0(k)


def finite_limit(t):
    """Limit of ``h(t, x)`` as ``x -> -inf`` for the inverse 2D Bessel model."""
    return 0.5 * (math.log(2.0) + math.log(t) - EULER_GAMMA)


@pytest.fixture(scope="session")
def bessel():
    return inverse_bessel_2d()


@pytest.fixture(scope="session")
def qnv():
    return qnv_no_root(0.0, 1.0)


@pytest.fixture(scope="session")
def bm():
    return constant_vol(1.0)


@pytest.fixture(scope="session")
def bessel_grid():
    return Grid1D(-12.0, 6.0, 2001)


# -- acceptance summary ----------------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
