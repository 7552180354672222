import pytest

from slmc.classification import (BoundarySide, BoundaryType, Label, MartingaleClass,
                                 boundary_type, classify)
from slmc.errors import InconclusiveError
from slmc.models import constant_vol, inverse_bessel_2d, qnv_no_root, tabulated
from slmc.numerics.quadrature import Verdict


def test_bessel_case_ii():
    k = classify(inverse_bessel_2d())
    assert k.label is Label.STRICT_CASE_II
    assert k.left_integral.value == pytest.approx(0.5, abs=1e-6)
    assert k.right_integral.verdict is Verdict.DIVERGENT
    assert boundary_type(inverse_bessel_2d(), "minus_inf", k) is BoundaryType.ENTRANCE
    assert boundary_type(inverse_bessel_2d(), BoundarySide.PLUS_INF, k) is BoundaryType.NATURAL


def test_qnv_case_iii():
    k = classify(qnv_no_root(0, 1))
    assert k.label is Label.STRICT_CASE_III
    assert k.left_integral.value == pytest.approx(1.0, abs=1e-6)
    assert k.right_integral.value == pytest.approx(1.0, abs=1e-6)
    assert k.boundary("plus_inf") is k.boundary("minus_inf") is BoundaryType.ENTRANCE


def test_mirror_is_case_i():
    # sigma(x) = e^{x} is the reflection of the inverse Bessel model
    nodes = [[x / 4.0, 2.718281828459045 ** (x / 4.0)] for x in range(-8, 9)]
    m = tabulated(nodes, "exponential-fit")
    assert classify(m).label is Label.STRICT_CASE_I


@pytest.mark.parametrize("c", [0.1, 1.0, 10.0])
def test_constant_vol_true_martingale(c):
    assert classify(constant_vol(c)).label is Label.TRUE_MARTINGALE


@pytest.mark.parametrize("factor", [0.5, 2.0])
@pytest.mark.parametrize("model", [inverse_bessel_2d(), qnv_no_root(0, 1), constant_vol(1)])
def test_scaling_invariance(model, factor):
    assert classify(model.scaled(factor)).label is classify(model).label


def test_label_must_match_verdicts():
    k = classify(inverse_bessel_2d())
    with pytest.raises(ValueError):
        MartingaleClass(Label.TRUE_MARTINGALE, k.right_integral, k.left_integral)


def test_explicit_short_schedule_is_inconclusive():
    with pytest.raises(InconclusiveError, match="enlarge cutoff schedule"):
        classify(qnv_no_root(0, 1), cutoff_schedule=[8, 16, 32, 64])


def test_to_dict():
    d = classify(inverse_bessel_2d()).to_dict()
    assert d["label"] == "strict_case_ii"
    assert d["boundary_types"] == {"plus_inf": "natural", "minus_inf": "entrance"}
