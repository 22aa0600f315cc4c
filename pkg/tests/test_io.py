import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfps import report
from tfps.config import parse_config, parse_config_text
from tfps.errors import ValidationError

MINIMAL = {
    "problem": {
        "V1": {"family": "SquareWell", "params": {"a": 0, "b": 1}},
        "V2": {"family": "SquareWell", "params": {"a": 0, "b": 1}},
        "interactions": {"U11": 1, "U22": 1, "U12": 1.5},
        "N": {"N1": 1, "N2": 1},
    }
}


def _text(cfg):
    return json.dumps(cfg, indent=2)


def test_minimal_config_defaults(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(_text(MINIMAL))
    cfg = parse_config(path)
    assert cfg.seed == 42
    assert cfg.solver.oracle_M == 4001
    assert cfg.solver.max_walls is None
    assert cfg.tolerances().tol_energy == 1e-9
    assert cfg.output.samples == 400
    assert len(cfg.digest) == 64
    raw = cfg.raw_params()
    assert (raw.U12, raw.N1, raw.N2) == (1.5, 1, 1)


def test_two_ensembles_rejected():
    cfg = json.loads(_text(MINIMAL))
    cfg["problem"]["mu"] = {"mu1": 1, "mu2": 1}
    with pytest.raises(ValidationError, match="exactly one ensemble"):
        parse_config_text(_text(cfg))


def test_negative_interaction_rejected_with_line():
    cfg = json.loads(_text(MINIMAL))
    cfg["problem"]["interactions"]["U12"] = -1
    text = _text(cfg)
    with pytest.raises(ValidationError) as e:
        parse_config_text(text)
    line = next(i for i, s in enumerate(text.splitlines(), 1) if '"U12"' in s)
    assert f"line {line}" in str(e.value)
    assert "U12" in str(e.value)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda c: c["problem"].pop("interactions"),
        lambda c: c.update(extra_key=1),
        lambda c: c["problem"].pop("V2"),
        lambda c: c.update(solver={"window": [1, 0]}),
    ],
)
def test_invalid_configs(mutate):
    cfg = json.loads(_text(MINIMAL))
    mutate(cfg)
    with pytest.raises(ValidationError):
        parse_config_text(_text(cfg))


def test_bad_json_reports_line():
    with pytest.raises(ValidationError, match="line 2"):
        parse_config_text('{\n  "problem": ,\n}')


def test_proportional_config_builds_v2():
    cfg = json.loads(_text(MINIMAL))
    p = cfg["problem"]
    p.pop("V2")
    p["V1"] = {"family": "DoubleWell", "params": {"h": 1, "w": 1}}
    p["proportional"], p["ratio"] = True, 0.8
    rc = parse_config_text(_text(cfg))
    V1, V2 = rc.potentials()
    assert V2.scalar(0.0) == pytest.approx(0.8 * V1.scalar(0.0))


def test_envelope_and_nonfinite(tmp_path):
    payload = report.envelope("solve", {"x": [math.nan, math.inf, -math.inf, 0.1]}, {"seed": 42})
    path = tmp_path / "r.json"
    report.write_json(path, payload)
    text = path.read_text()
    assert '"schema": 1' in text and '"NaN"' in text and '"Infinity"' in text
    back = report.read_json(path)
    assert math.isnan(back["x"][0]) and back["x"][1] == math.inf and back["x"][2] == -math.inf
    assert back["x"][3] == 0.1


finite = st.floats(allow_nan=False, allow_infinity=False)


@settings(max_examples=100, deadline=None)
@given(st.recursive(
    st.one_of(finite, st.integers(-10**6, 10**6), st.booleans(), st.text(max_size=5).filter(lambda s: s not in ("NaN", "Infinity", "-Infinity"))),
    lambda inner: st.one_of(st.lists(inner, max_size=4), st.dictionaries(st.text(max_size=4), inner, max_size=4)),
    max_leaves=20,
))
def test_json_round_trip_bit_exact(obj):
    assert report.loads(report.dumps(obj)) == obj


@settings(max_examples=200, deadline=None)
@given(finite)
def test_csv_format_round_trips(v):
    assert float(report.fmt(v)) == v


def test_csv_files(tmp_path):
    path = tmp_path / "d.csv"
    x = np.array([0.1, 1 / 3])
    report.write_density_csv(path, x, x, 2 * x, x, x)
    header, rows = report.read_csv(path)
    assert header == ["x", "rho1", "rho2", "V1", "V2"]
    assert float(rows[1][0]) == 1 / 3
    assert rows[1][0] == "0.33333333333333331"
