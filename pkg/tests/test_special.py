import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special as sps

from slmc.errors import DomainError
from slmc.numerics.special import EULER_GAMMA, bessel_i0, bessel_k0, exp_integral_e1


def i0_series(z, terms=200):
    s, term = 1.0, 1.0
    for k in range(1, terms):
        term *= (z * z / 4.0) / (k * k)
        s += term
    return s


def e1_series(z, terms=40):
    return -EULER_GAMMA - math.log(z) + sum((-1) ** (k + 1) * z ** k / (k * math.factorial(k))
                                            for k in range(1, terms + 1))


def test_i0_at_zero_is_one():
    assert bessel_i0(0.0) == 1.0


def test_reference_values():
    assert bessel_i0(1.0) == pytest.approx(1.2660658777520082, rel=1e-12)
    assert bessel_k0(1.0) == pytest.approx(0.42102443824070834, rel=1e-12)
    assert exp_integral_e1(0.5) == pytest.approx(0.5597735947761608, rel=1e-12)


def test_i0_matches_power_series():
    for z in (1e-6, 0.3, 1.0, 5.0, 12.0, 19.9):
        assert bessel_i0(z) == pytest.approx(i0_series(z), rel=1e-12)


@pytest.mark.parametrize("fn,ref", [(bessel_i0, sps.i0), (bessel_k0, sps.k0),
                                    (exp_integral_e1, sps.exp1)])
def test_relative_error_on_range(fn, ref):
    z = np.geomspace(1e-6, 30.0, 400)
    got = fn(z)
    want = ref(z)
    assert np.max(np.abs(got / want - 1.0)) <= 1e-9


def test_vectorized_shape_preserved():
    z = np.array([[0.5, 1.0], [2.0, 3.0]])
    assert bessel_k0(z).shape == (2, 2)
    assert isinstance(bessel_k0(1.0), float)


def test_e1_series_identity():
    for z in np.linspace(0.1, 5.0, 50):
        assert abs(exp_integral_e1(z) - e1_series(z)) <= 1e-9


def test_bessel_wronskian_by_finite_differences():
    for z in np.linspace(0.5, 10.0, 20):
        d = 1e-5 * z
        di = (bessel_i0(z + d) - bessel_i0(z - d)) / (2 * d)
        dk = (bessel_k0(z + d) - bessel_k0(z - d)) / (2 * d)
        w = di * bessel_k0(z) - dk * bessel_i0(z)
        assert w == pytest.approx(1.0 / z, rel=1e-6)


@pytest.mark.parametrize("fn,bad", [(bessel_i0, -1.0), (bessel_k0, 0.0), (bessel_k0, -2.0),
                                    (exp_integral_e1, 0.0), (exp_integral_e1, math.nan)])
def test_domain_errors(fn, bad):
    with pytest.raises(DomainError):
        fn(bad)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=0.05, max_value=25.0))
def test_e1_recurrence_bound(z):
    # e^{-z}/(z+1) < E1(z) < e^{-z} ln(1 + 1/z)
    e1 = exp_integral_e1(z)
    assert math.exp(-z) / (z + 1.0) < e1 < math.exp(-z) * math.log1p(1.0 / z) * (1 + 1e-12)
