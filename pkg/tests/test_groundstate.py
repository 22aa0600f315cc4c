import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfps import oracle
from tfps.errors import ValidationError
from tfps.groundstate import (
    DEGENERATE,
    MIXED_FAVORED,
    SEPARATED_FAVORED,
    Problem,
    classify_regime,
    crossings,
    mixed_fixed_N,
    solve_ground_state,
    sweep_alpha,
)
from tfps.potential import DoubleWell, Harmonic, SquareWell
from tfps.scaling import FIXED_MU, FIXED_N

SW = SquareWell(0, 1)
DW = DoubleWell(1, 1)


def sw_n(alpha, **kw):
    return Problem(alpha, SW, SW, FIXED_N, N1=1, N2=1, **kw)


def sw_mu(alpha, mu1=1.0, mu2=2.0, **kw):
    return Problem(alpha, SW, SW, FIXED_MU, mu1=mu1, mu2=mu2, **kw)


def test_classify_regime():
    assert classify_regime(2.0) == SEPARATED_FAVORED
    assert classify_regime(0.3) == MIXED_FAVORED
    assert classify_regime(1.0) == DEGENERATE
    for bad in (-0.1, math.nan, math.inf):
        with pytest.raises(ValidationError):
            classify_regime(bad)


def test_problem_validation():
    with pytest.raises(ValidationError):
        Problem(0.5, SW, SW, FIXED_N, N1=0, N2=0)
    with pytest.raises(ValidationError):
        Problem(0.5, SW, SW, FIXED_MU, mu1=1.0)
    with pytest.raises(ValidationError):
        Problem(0.5, SW, SW, "canonical", N1=1, N2=1)


def test_square_well_separated_pair():
    rep = solve_ground_state(sw_n(1.5))
    assert rep.regime == SEPARATED_FAVORED
    assert rep.energy == pytest.approx(2.0, rel=1e-12)
    walls = sorted(rep.candidates[i].walls for i in rep.ground_state)
    assert walls == [pytest.approx((0.5,), abs=1e-12)] * 2
    assert rep.degeneracy == 2
    assert not rep.oracle_disagreement
    assert rep.oracle["method"] == "projected_descent"


def test_square_well_fixed_mu_single_condensate():
    rep = solve_ground_state(sw_mu(3.0))
    w = rep.winner
    assert rep.energy == pytest.approx(-2.0, rel=1e-12)
    assert w.n_walls == 0 and w.profile.S1.intervals == ()
    assert w.profile.S2.intervals == ((0.0, 1.0),)
    assert not rep.oracle_disagreement


def test_mixed_wins_below_threshold():
    rep = solve_ground_state(sw_n(0.5, include_separated=True))
    assert rep.winner.kind == "mixed"
    assert rep.energy == pytest.approx(1.5, rel=1e-12)
    assert "regime_inconsistency" not in rep.flags
    assert all(rep.energy <= c.energy for c in rep.candidates if c.eligible)


def test_degenerate_lists_co_minimizers():
    rep = solve_ground_state(sw_n(1.0, cross_check=False))
    assert rep.regime == DEGENERATE
    assert "co_minimizers" in rep.flags
    assert rep.degeneracy >= 2
    for c in rep.winners:
        assert c.energy == pytest.approx(2.0, rel=1e-12)


def test_empty_ground_state():
    V = Harmonic(1)
    prob = Problem(2.0, V, V.scaled(0.5), FIXED_MU, mu1=-1.0, mu2=-0.5, beta=0.5, window=(-2, 2))
    rep = solve_ground_state(prob)
    assert rep.status == "empty" and rep.winner is None and math.isnan(rep.energy)


def test_double_well_maximal_configuration():
    prob = Problem(1.5, DW, DW.scaled(0.8), FIXED_N, N1=1, N2=1, beta=0.8, cross_check=False)
    rep = solve_ground_state(prob)
    w = rep.winner
    assert w.label == "n4-lead2-21212"
    assert w.config.is_maximal
    swapped = [c for c in rep.candidates if c.label == "n4-lead1-12121"]
    assert swapped and all(c.verdict != "stable" for c in swapped)
    assert all(w.energy <= c.energy for c in rep.candidates if c.eligible)
    # species 1 sits in the wells at x = +-1
    r1, _ = w.profile.rho(np.array([-1.0, 1.0]))
    assert np.all(r1 > 0)


def test_mixed_fixed_N_normalization():
    V1, V2 = Harmonic(1.0), Harmonic(0.7, 0.2)
    p = mixed_fixed_N(1.3, 0.6, 0.4, V1, V2)
    assert p.particle_numbers() == pytest.approx((1.3, 0.6), rel=1e-12)
    g = oracle.make_grid(p.window, 4001, V1, V2)
    res = oracle.projected_descent_fixed_N(g, 1.3, 0.6, 0.4, random_starts=0)
    assert p.internal_energy() <= res.energy + 1e-6
    assert oracle.compare(p, res, g)["sup_norm"] <= 1e-3


def test_mixed_fixed_N_single_species():
    h = Harmonic(1)
    p = mixed_fixed_N(4 / 3, 0.0, 0.5, h, h)
    assert p.mu1 == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 2.0), st.floats(0.3, 2.0), st.floats(0.0, 0.9))
def test_mixed_fixed_N_mass_conservation(n1, n2, alpha):
    p = mixed_fixed_N(n1, n2, alpha, Harmonic(1.0), DW)
    assert p.particle_numbers() == pytest.approx((n1, n2), rel=1e-10)


def test_fixed_mu_oracle_consistency():
    prob = Problem(1.5, DW, DW.scaled(0.8), FIXED_MU, mu1=1.2, mu2=1.1, beta=0.8)
    rep = solve_ground_state(prob)
    assert rep.winner.label.startswith("n4-lead2")
    assert abs(rep.oracle["energy_diff"]) <= 1e-8 * max(1.0, abs(rep.energy))


def test_report_round_trip_fields():
    rep = solve_ground_state(sw_n(1.5))
    d = rep.to_dict()
    assert d["regime"] == SEPARATED_FAVORED and d["degeneracy"] == 2
    assert d["provenance"]["seed"] == 42
    assert set(d["candidates"][0]) >= {"label", "energy", "verdict", "walls", "S1", "S2", "hessian"}


def test_sweep_fixed_mu_square_well():
    rows, cross = sweep_alpha(sw_mu(0.0), [0.0, 0.5, 2.0, 10.0])
    em = [r["E_mixed"] for r in rows]
    assert em[0] == pytest.approx(-2.5, rel=1e-12)
    assert em[1] == pytest.approx(-2.0, rel=1e-12)
    assert em[2] == pytest.approx(-0.5, rel=1e-12)
    assert em[3] == pytest.approx(-35 / 198, rel=1e-12)
    assert all(r["E_separated_min"] == -2.0 for r in rows)
    assert [r["verdict"] for r in rows] == ["mixed", "degenerate", "separated", "separated"]
    assert (rows[0]["alpha_l"], rows[0]["alpha_u"]) == (0.5, 2.0)
    assert cross == [0.5]


def test_sweep_forbidden_interval():
    rows, _ = sweep_alpha(sw_mu(0.0), [1.5])
    assert rows[0]["forbidden"] and math.isnan(rows[0]["E_mixed"])


def test_sweep_equal_mu_crossing():
    rows, cross = sweep_alpha(sw_mu(0.0, mu2=1.0), np.linspace(0.5, 1.5, 11))
    assert cross == [pytest.approx(1.0, abs=1e-12)]
    em = [r["E_mixed"] for r in rows]
    assert all(a < b for a, b in zip(em, em[1:]))


def test_sweep_fixed_N_alpha_zero():
    rows, cross = sweep_alpha(sw_n(0.0, cross_check=False), [0.0, 0.5, 1.5])
    assert rows[0]["verdict"] == "mixed"
    assert rows[0]["E_mixed"] < rows[0]["E_separated_min"]
    assert cross == [pytest.approx(1.0)]


def test_crossings_helper():
    rows = [{"alpha": 0.0, "E_mixed": -1.0, "E_separated_min": 0.0},
            {"alpha": 1.0, "E_mixed": 1.0, "E_separated_min": 0.0}]
    assert crossings(rows) == [0.5]
