import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfps.errors import ValidationError
from tfps.potential import DoubleWell, Harmonic
from tfps.scaling import (
    FIXED_MU,
    FIXED_N,
    RawParams,
    Solution,
    from_reduced,
    reduce_solution,
    to_reduced,
)


def _sol(prov, **kw):
    base = dict(x=np.array([0.3, 0.7]), rho1=np.array([1.0, 1.0]), rho2=np.array([0.0, 2.0]),
                mu1=1.0, mu2=2.0, N1=1.0, N2=1.0, walls=(0.3, 0.7), provenance=prov)
    base.update(kw)
    return Solution(**base)


def test_identity_scaling():
    raw = RawParams(1, 1, 1, Harmonic(1), Harmonic(1), N1=2, N2=3)
    red = to_reduced(raw)
    assert red.alpha == 1.0
    assert red.N1 == 2 and red.N2 == 3
    assert red.V1.scalar(0.7) == raw.V1.scalar(0.7)
    out = from_reduced(_sol(red.provenance), raw)
    assert np.array_equal(out.rho1, [1.0, 1.0]) and out.mu2 == 2.0


def test_unequal_self_interactions():
    raw = RawParams(4, 1, 1, Harmonic(1), Harmonic(1), N1=1.0, N2=1.0, proportional=True)
    red = to_reduced(raw, ratio=1.0, window=(-2, 2))
    assert red.alpha == 0.5
    assert red.beta == 2.0
    # densities scale with sqrt(U11), potentials with 1/sqrt(U11)
    assert red.N1 == 2.0
    assert red.V1.scalar(1.0) == 0.5
    out = from_reduced(_sol(red.provenance, rho1=np.array([1.0, 1.0])), raw)
    assert out.rho1[0] == 0.5
    assert out.walls == (0.3, 0.7)


def test_unit_self_interactions_fixed_point():
    raw = RawParams(1, 1, 2, Harmonic(1), Harmonic(1), N1=3, N2=1)
    red = to_reduced(raw)
    assert red.alpha == 2.0 and red.N1 == 3


def test_fixed_mu_scaling():
    raw = RawParams(4, 9, 3, Harmonic(1), Harmonic(1), mu1=2.0, mu2=3.0)
    red = to_reduced(raw)
    assert red.ensemble == FIXED_MU
    assert red.mu1 == 1.0 and red.mu2 == 1.0
    assert red.alpha == pytest.approx(0.5)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_nonpositive_interactions_rejected(bad):
    with pytest.raises(ValidationError):
        RawParams(1, 1, bad, Harmonic(1), Harmonic(1), N1=1, N2=1)


def test_exactly_one_ensemble():
    with pytest.raises(ValidationError):
        RawParams(1, 1, 1, Harmonic(1), Harmonic(1), N1=1, N2=1, mu1=1, mu2=1)
    with pytest.raises(ValidationError):
        RawParams(1, 1, 1, Harmonic(1), Harmonic(1))


def test_provenance_mismatch():
    a = RawParams(1, 1, 1, Harmonic(1), Harmonic(1), N1=1, N2=1)
    b = RawParams(2, 1, 1, Harmonic(1), Harmonic(1), N1=1, N2=1)
    with pytest.raises(ValidationError):
        from_reduced(_sol(to_reduced(a).provenance), b)


def test_proportionality_is_checked():
    raw = RawParams(1, 1, 1, DoubleWell(1, 1), Harmonic(1), N1=1, N2=1, proportional=True)
    with pytest.raises(ValidationError):
        to_reduced(raw, ratio=0.8, window=(-2, 2))


def test_beta_from_raw_ratio():
    V = DoubleWell(1, 1)
    raw = RawParams(2.0, 0.5, 1.0, V, V.scaled(0.4), N1=1, N2=1, proportional=True)
    red = to_reduced(raw, ratio=0.4, window=(-2, 2))
    assert red.beta == pytest.approx(0.4 * 2.0)
    x = np.linspace(-2, 2, 64)
    assert np.allclose(red.V2.value(x), red.beta * red.V1.value(x), rtol=1e-12, atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0.05, 20), st.floats(0.05, 20), st.floats(0.05, 20),
    st.floats(0.01, 5), st.floats(0.01, 5),
)
def test_round_trip(U11, U22, U12, n1, n2):
    raw = RawParams(U11, U22, U12, Harmonic(1), Harmonic(2), N1=n1, N2=n2)
    red = to_reduced(raw)
    assert red.ensemble == FIXED_N
    assert red.alpha == pytest.approx(U12 / math.sqrt(U11 * U22), rel=1e-14)
    sol = _sol(red.provenance, N1=red.N1, N2=red.N2)
    back = reduce_solution(from_reduced(sol, raw), raw)
    assert np.allclose(back.rho1, sol.rho1, rtol=1e-14)
    assert np.allclose(back.rho2, sol.rho2, rtol=1e-14)
    assert back.mu1 == pytest.approx(sol.mu1, rel=1e-14)
    raw_sol = from_reduced(sol, raw)
    assert raw_sol.N1 == pytest.approx(n1, rel=1e-14) and raw_sol.N2 == pytest.approx(n2, rel=1e-14)
