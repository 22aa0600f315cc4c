import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfps.errors import DegenerateThresholdError, NonPhysicalError, ValidationError
from tfps.squarewell import (
    DEGENERATE,
    MIXED_FAVORED,
    SEPARATED_FAVORED,
    WellProblem,
    alpha_bounds,
    mixed_grand_energy,
    mixed_internal_energy,
    separated_grand_energy,
    separated_grand_minimum,
    separated_internal_optimum,
    threshold_verdict,
)


def test_mixed_internal_energy():
    assert mixed_internal_energy(WellProblem(1, 1.5, 1, 1)) == 2.5
    assert mixed_internal_energy(WellProblem(2, 0.0, 1, 3)) == (1 + 9) / 4
    assert mixed_internal_energy(WellProblem(2, 0.7, 3, 0)) == 9 / 4


def test_separated_internal_optimum():
    e, s1, (c, d) = separated_internal_optimum(WellProblem(3, 2.0, 2, 1))
    assert (e, s1, c, d) == (1.5, 2.0, 2.0, 1.0)
    e, s1, _ = separated_internal_optimum(WellProblem(4, 2.0, 1.5, 1.5))
    assert s1 == 2.0 and e == 2 * 1.5**2 / 4
    e, s1, _ = separated_internal_optimum(WellProblem(4, 2.0, 1.5, 0))
    assert s1 == 4.0 and e == 1.5**2 / 8


def test_threshold_verdict():
    assert threshold_verdict(WellProblem(1, 1.5, 1, 1)) == SEPARATED_FAVORED
    assert threshold_verdict(WellProblem(1, 0.5, 1, 1)) == MIXED_FAVORED
    w = WellProblem(1, 1.0, 1, 1)
    assert threshold_verdict(w) == DEGENERATE
    assert mixed_internal_energy(w) - separated_internal_optimum(w)[0] == 0.0


def test_alpha_bounds():
    assert alpha_bounds(1, 2) == (0.5, 2.0)
    assert alpha_bounds(1.3, 1.3) == (1.0, 1.0)
    lo, hi = alpha_bounds(3, 1)
    assert lo == pytest.approx(1 / 3) and hi == 3.0


def test_mixed_grand_energy():
    assert mixed_grand_energy(WellProblem(1, 3.0, mu1=1, mu2=2)) == -0.4375
    assert mixed_grand_energy(WellProblem(1, 3.0, mu1=1, mu2=1)) == -0.25
    assert mixed_grand_energy(WellProblem(1, 0.0, mu1=1, mu2=2)) == -2.5
    with pytest.raises(NonPhysicalError):
        mixed_grand_energy(WellProblem(1, 1.5, mu1=1, mu2=2))
    with pytest.raises(DegenerateThresholdError):
        mixed_grand_energy(WellProblem(1, 1.0, mu1=1, mu2=2))


def test_separated_grand():
    assert separated_grand_minimum(WellProblem(1, 3.0, mu1=1, mu2=2)) == (-2.0, 0.0)
    w = WellProblem(1, 3.0, mu1=1, mu2=1)
    for s in (0.0, 0.3, 1.0):
        assert separated_grand_energy(w, s) == -0.5
    assert separated_grand_minimum(w) == (-0.5, None)
    w = WellProblem(2, 3.0, mu1=1.5, mu2=1)
    assert separated_grand_energy(w, 2.0) == -2 * 1.5**2 / 2
    with pytest.raises(ValidationError):
        separated_grand_energy(w, 3.0)


def test_validation():
    with pytest.raises(ValidationError):
        WellProblem(0, 1.0, 1, 1)
    with pytest.raises(ValidationError):
        WellProblem(1, 1.0, 1, 1, mu1=1, mu2=1)
    with pytest.raises(ValidationError):
        WellProblem(1, 1.0, mu1=-1, mu2=1)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 5), st.floats(0.0, 0.999), st.floats(0.01, 5), st.floats(0.01, 5))
def test_mixed_beats_separated_below_threshold(L, alpha, n1, n2):
    w = WellProblem(L, alpha, n1, n2)
    assert mixed_internal_energy(w) < separated_internal_optimum(w)[0]


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 5), st.floats(0.0, 3.0), st.floats(0.1, 3))
def test_equal_mu_mixed_energy_increases(L, alpha, mu):
    e0 = mixed_grand_energy(WellProblem(L, alpha, mu1=mu, mu2=mu))
    e1 = mixed_grand_energy(WellProblem(L, alpha + 0.01, mu1=mu, mu2=mu))
    assert e0 < e1 < 0
