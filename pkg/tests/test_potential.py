import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfps.errors import AmbiguousDerivativeError, ValidationError
from tfps.potential import (
    DoubleWell,
    Harmonic,
    PiecewisePolynomial,
    Polynomial,
    SquareWell,
    Tabulated,
    check_proportional,
    derivative,
    evaluate,
    from_dict,
    level_set,
    sublevel_set,
)

DW = DoubleWell(1, 1)


def test_evaluate_examples():
    assert evaluate(Harmonic(1, 0), 0.5) == pytest.approx(0.25, abs=1e-15)
    assert evaluate(DW, 0.0) == 1.0
    assert evaluate(DW, 1.0) == 0.0


def test_square_well_outside_is_infinite():
    sw = SquareWell(0, 1)
    assert evaluate(sw, 0.5) == 0.0
    assert math.isinf(evaluate(sw, 1.5))
    assert np.all(np.isinf(sw.value(np.array([-0.1, 1.1]))))


def test_derivative_examples():
    assert derivative(Harmonic(1, 0), 0.5) == pytest.approx(1.0)
    assert derivative(DW, 1.0) == pytest.approx(0.0, abs=1e-15)
    assert derivative(Polynomial([0, 0, -2, 0, 1]), 2.0) == pytest.approx(24.0)


def test_breakpoint_needs_side():
    p = PiecewisePolynomial([0.0], [[0.0, -1.0], [0.0, 1.0]])
    with pytest.raises(AmbiguousDerivativeError):
        derivative(p, 0.0)
    assert derivative(p, 0.0, side=-1) == -1.0
    assert derivative(p, 0.0, side=1) == 1.0


def test_level_set_examples():
    xs = [r.x for r in level_set(DW, 0.25, (-2, 2))]
    assert xs == pytest.approx([-math.sqrt(1.5), -math.sqrt(0.5), math.sqrt(0.5), math.sqrt(1.5)], abs=1e-12)
    assert [r.x for r in level_set(Harmonic(1), 1.0, (-2, 2))] == pytest.approx([-1, 1], abs=1e-12)
    assert level_set(Harmonic(1), -1.0, (-2, 2)) == []


def test_sublevel_set_examples():
    iv = sublevel_set(DW, 0.25, (-2, 2))
    assert len(iv) == 2
    assert iv[0] == pytest.approx((-1.2247448713915890, -0.7071067811865476), abs=1e-12)
    assert iv[1] == pytest.approx((0.7071067811865476, 1.2247448713915890), abs=1e-12)
    r = math.sqrt(1 + math.sqrt(2))
    assert sublevel_set(DW, 2.0, (-2, 2)) == [pytest.approx((-r, r), abs=1e-12)]
    assert sublevel_set(SquareWell(0, 1), 5.0, (-1, 2)) == [(0.0, 1.0)]


def test_validation():
    with pytest.raises(ValidationError):
        SquareWell(1, 0)
    with pytest.raises(ValidationError):
        Harmonic(-1)
    with pytest.raises(ValidationError):
        Polynomial([0, 0, -1])  # not confining
    with pytest.raises(ValidationError):
        PiecewisePolynomial([0.0], [[0.0, 1.0], [1.0, 1.0]])  # jump at the breakpoint
    with pytest.raises(ValidationError):
        from_dict({"family": "Nope"})


def test_from_dict_scale():
    p = from_dict({"family": "Harmonic", "params": {"k": 2.0}, "scale": 0.25})
    assert p.scalar(1.0) == pytest.approx(0.5)


def test_tabulated_reproduces_polynomial():
    poly = Polynomial([0.3, -0.2, -2.0, 0.1, 1.0])
    x = np.linspace(-2.5, 2.5, 10_001)
    tab = Tabulated(x, poly.value(x))
    xs = np.linspace(-2.4, 2.4, 997) + 1.234e-4
    ref = poly.value(xs)
    err = np.max(np.abs(tab.value(xs) - ref) / np.maximum(1.0, np.abs(ref)))
    assert err <= 1e-6


def test_tabulated_from_csv(tmp_path):
    path = tmp_path / "v.csv"
    x = np.linspace(-2, 2, 401)
    np.savetxt(path, np.column_stack([x, x**2]), delimiter=",")
    tab = from_dict({"family": "Tabulated", "params": {"path": str(path)}})
    assert tab.scalar(0.5) == pytest.approx(0.25, abs=1e-4)
    assert math.isinf(tab.scalar(3.0))


def test_check_proportional():
    check_proportional(DW, DW.scaled(0.8), 0.8, (-2, 2))
    with pytest.raises(ValidationError):
        check_proportional(DW, Harmonic(1).scaled(0.8), 0.8, (-2, 2))


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.2, 3.0),
    st.floats(-0.5, 0.5),
    st.floats(0.05, 4.0),
)
def test_level_set_roots_are_roots(k, x0, v):
    p = Harmonic(k, x0)
    roots = level_set(p, v, (x0 - 10, x0 + 10))
    assert len(roots) == 2
    for r in roots:
        assert abs(p.scalar(r.x) - v) <= 1e-10 * max(1.0, v)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(0.5, 2.0), st.floats(0.01, 3.0))
def test_sublevel_set_is_where_v_below(h, w, mu):
    p = DoubleWell(h, w)
    win = (-3 * w, 3 * w)
    ivs = sublevel_set(p, mu, win)
    x = np.linspace(*win, 2001)
    inside = np.zeros_like(x, dtype=bool)
    for a, b in ivs:
        inside |= (x >= a) & (x <= b)
    v = p.value(x)
    margin = 1e-9 * max(1.0, mu)
    assert np.all(v[inside] <= mu + margin)
    assert np.all(v[~inside] >= mu - margin)
