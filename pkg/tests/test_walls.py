import math

import numpy as np
import pytest

from tfps.errors import DegenerateContinuumError, InfeasibleTopologyError
from tfps.potential import DoubleWell, Harmonic, SquareWell
from tfps.walls import (
    Skeleton,
    WallConfig,
    energy_gradient,
    enumerate_topologies,
    evaluate_at,
    fixed_n_window,
    proportional_wall_level,
    solve_fixed_mu,
    solve_fixed_N,
    stationarity_residual,
)

DW = DoubleWell(1, 1)
A = math.sqrt(0.5)
B = math.sqrt(1.5)


@pytest.fixture(scope="module")
def dw_fixed_n():
    V1, V2 = DW, DW.scaled(0.8)
    win = fixed_n_window(V1, V2, 1, 1)
    out = []
    for sk in enumerate_topologies(V1, V2, None, win):
        out += solve_fixed_N(sk, 1, 1, V1, V2, beta=0.8)
    return out


def test_enumerate_double_well():
    sks = enumerate_topologies(DW, DW.scaled(0.8), 4, (-2, 2))
    assert [(s.n, s.leading) for s in sks] == [(n, k) for n in range(5) for k in (1, 2)]
    assert [s.maximal for s in sks] == [False] * 8 + [True, True]


def test_enumerate_harmonic_capped():
    V = Harmonic(1)
    sks = enumerate_topologies(V, V.scaled(0.5), 5, (-2, 2))
    assert max(s.n for s in sks) == 2
    assert sum(1 for s in sks if s.n == 0) == 2


def _bare(R, V1, V2, mu1, mu2):
    return WallConfig(R=R, s=(1,) * len(R), leading_species=1, labels=(1, 2), separators=(),
                      V1=V1, V2=V2, window=(-2, 2), mu1=mu1, mu2=mu2)


def test_stationarity_residual():
    h = Harmonic(1)
    assert stationarity_residual(_bare((0.3, 1.1), h, h, 1.0, 1.0)) == [0.0, 0.0]
    r = stationarity_residual(_bare((0.5,), h, h.scaled(0.8), 1.0, 0.9))
    assert r[0] == pytest.approx(0.05, abs=1e-15)


def test_proportional_wall_level():
    assert proportional_wall_level(1.0, 0.9, 0.8) == pytest.approx(0.5)
    assert proportional_wall_level(1.0, 1.0, 0.8) == 0.0
    assert proportional_wall_level(0.9, 1.0, 0.5) == pytest.approx(-0.2)
    with pytest.raises(DegenerateContinuumError):
        proportional_wall_level(1.0, 0.9, 1.0)


def test_solve_fixed_mu_roots():
    cs = solve_fixed_mu(Skeleton(2, 1), 1.2, 1.15, DW, DW.scaled(0.8), (-2, 2), beta=0.8)
    assert cs
    allowed = np.array([-B, -A, A, B])
    for c in cs:
        for r in c.R:
            assert np.min(np.abs(allowed - r)) <= 1e-12


def test_solve_fixed_mu_degenerate_and_infeasible():
    h = Harmonic(1)
    with pytest.raises(DegenerateContinuumError):
        solve_fixed_mu(Skeleton(1, 1), 1, 1, h, h, (-2, 2))
    with pytest.raises(InfeasibleTopologyError):
        solve_fixed_mu(Skeleton(1, 1), 0.9, 1.0, h, h.scaled(0.5), (-2, 2), beta=0.5)


def test_fixed_mu_densities_depend_only_on_mu():
    cs = []
    for n in range(5):
        for lead in (1, 2):
            cs += solve_fixed_mu(Skeleton(n, lead), 1.2, 1.15, DW, DW.scaled(0.8), (-2, 2), beta=0.8)
    x = np.linspace(-2, 2, 801)
    for c in cs:
        r1, r2 = c.profile().rho(x)
        on1, on2 = r1 > 0, r2 > 0
        assert np.allclose(r1[on1], 1.2 - DW.value(x[on1]), atol=1e-14)
        assert np.allclose(r2[on2], 1.15 - 0.8 * DW.value(x[on2]), atol=1e-14)
    numbers = {tuple(np.round(c.profile().particle_numbers(), 6)) for c in cs}
    assert len(numbers) > 1


def test_solve_fixed_N_square_well():
    sw = SquareWell(0, 3)
    (c,) = solve_fixed_N(Skeleton(1, 1), 2, 1, sw, sw)
    assert c.R == pytest.approx((2.0,), abs=1e-12)
    assert (c.mu1, c.mu2) == pytest.approx((1.0, 1.0), abs=1e-12)
    (d,) = solve_fixed_N(Skeleton(1, 2), 2, 1, sw, sw)
    assert d.R == pytest.approx((1.0,), abs=1e-12)


def test_fixed_N_mirror_pairs(dw_fixed_n):
    dw_n = [c for c in dw_fixed_n if c.n]
    keys = {(c.labels, tuple(np.round(c.R, 8))) for c in dw_n}
    for c in dw_n:
        mirror = (tuple(reversed(c.labels)), tuple(np.round(-np.array(c.R[::-1]), 8)))
        assert mirror in keys


def test_fixed_N_stationarity(dw_fixed_n):
    for c in dw_fixed_n:
        if not c.n:
            continue
        r1, r2 = c.wall_densities()
        assert np.max(np.abs(r1 - r2)) <= 1e-10
        v = DW.value(np.array(c.R))
        assert np.ptp(v) <= 1e-8 * np.max(np.abs(v))
        assert c.profile().particle_numbers() == pytest.approx((1.0, 1.0), rel=1e-10)


def test_gradient_matches_central_differences(dw_fixed_n):
    h = 1e-4
    for c in dw_fixed_n:
        if not c.n:
            continue
        R = np.array(c.R) + 0.03 * (-1.0) ** np.arange(c.n)
        g = np.asarray(energy_gradient(c, R))
        fd = [(evaluate_at(c, R + h * e)[0] - evaluate_at(c, R - h * e)[0]) / (2 * h) for e in np.eye(c.n)]
        assert np.max(np.abs(g - fd)) <= 1e-5 * np.max(np.abs(g))


def test_fixed_mu_gradient():
    V1, V2 = DW, DW.scaled(0.8)
    (c, *_) = solve_fixed_mu(Skeleton(1, 1), 1.2, 1.15, V1, V2, (-2, 2), beta=0.8)
    R = np.array(c.R) + 0.02
    h = 1e-4
    g = energy_gradient(c, R)
    fd = (evaluate_at(c, R + h)[0] - evaluate_at(c, R - h)[0]) / (2 * h)
    assert fd == pytest.approx(g[0], rel=1e-5)
