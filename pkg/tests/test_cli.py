import json
import math

import numpy as np
import pytest

from tfps import cli, report

SQUARE = {
    "problem": {
        "V1": {"family": "SquareWell", "params": {"a": 0, "b": 1}},
        "V2": {"family": "SquareWell", "params": {"a": 0, "b": 1}},
        "interactions": {"U11": 1, "U22": 1, "U12": 1.5},
        "N": {"N1": 1, "N2": 1},
    },
    "solver": {"oracle_M": 1001},
}

DOUBLE = {
    "problem": {
        "V1": {"family": "DoubleWell", "params": {"h": 1, "w": 1}},
        "interactions": {"U11": 1, "U22": 1, "U12": 1.5},
        "N": {"N1": 1, "N2": 1},
        "proportional": True,
        "ratio": 0.8,
    },
    "solver": {"cross_check": False},
    "walls": [-1.2, -0.7, 0.7, 1.2],
}


def _write(tmp_path, cfg, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _run(tmp_path, command, cfg, *extra):
    out = tmp_path / command
    code = cli.main([command, "--config", _write(tmp_path, cfg), "--out", str(out), *extra])
    return code, out


def test_solve_square_well(tmp_path):
    code, out = _run(tmp_path, "solve", SQUARE)
    assert code == 0
    rep = report.read_json(out / "report.json")
    assert rep["schema"] == 1
    assert rep["report"]["regime"] == "SeparatedFavored"
    assert rep["report"]["energy"] == pytest.approx(2.0, rel=1e-12)
    prov = rep["provenance"]
    assert len(prov["config_hash"]) == 64 and prov["seed"] == 42 and "tol_energy" in prov["tolerances"]
    header, rows = report.read_csv(out / "density.csv")
    assert header == ["x", "rho1", "rho2", "V1", "V2"]
    assert (out / "density_1.csv").exists()  # mirror image


def test_solve_report_round_trip(tmp_path):
    code, out = _run(tmp_path, "solve", SQUARE)
    text = (out / "report.json").read_text()
    again = report.dumps(report.loads(text)) + "\n"
    assert again == text


def test_outputs_are_deterministic(tmp_path):
    _, a = _run(tmp_path, "solve", SQUARE)
    first = (a / "density.csv").read_text(), (a / "report.json").read_text()
    _, b = _run(tmp_path, "solve", SQUARE)
    assert ((b / "density.csv").read_text(), (b / "report.json").read_text()) == first


def test_sweep_flips_at_one(tmp_path):
    cfg = json.loads(json.dumps(SQUARE))
    cfg["problem"].pop("N")
    cfg["problem"]["mu"] = {"mu1": 1, "mu2": 1}
    cfg["sweep"] = {"parameter": "alpha", "values": [0.5, 0.75, 1.0, 1.25, 1.5]}
    code, out = _run(tmp_path, "sweep", cfg)
    assert code == 0
    header, rows = report.read_csv(out / "sweep.csv")
    verdict = [r[header.index("verdict")] for r in rows]
    assert verdict == ["mixed", "mixed", "degenerate", "separated", "separated"]
    assert report.read_json(out / "sweep.json")["crossings"] == [1.0]


def test_plot_data_double_well(tmp_path):
    code, out = _run(tmp_path, "plot-data", DOUBLE)
    assert code == 0
    index = report.read_json(out / "plot_index.json")
    (ground,) = [f for f in index["files"] if f["ground"]]
    assert ground["label"] == "n4-lead2-21212"
    header, rows = report.read_csv(out / ground["file"])
    assert header == ["x", "V", "rho1", "rho2"]
    data = np.array(rows, dtype=float)
    x, rho1 = data[:, 0], data[:, 2]
    occupied = x[rho1 > 0]
    # species 1 fills the two wells and nothing else
    assert np.all(np.abs(np.abs(occupied) - 1.0) < 0.5)
    assert np.any(occupied < 0) and np.any(occupied > 0)


def test_enumerate_and_stability(tmp_path):
    code, out = _run(tmp_path, "enumerate", DOUBLE)
    assert code == 0
    top = report.read_json(out / "topologies.json")
    assert max(t["n"] for t in top["topologies"]) == 4
    code, out = _run(tmp_path, "stability", DOUBLE)
    assert code == 0
    st = report.read_json(out / "stability.json")
    assert st["matched"].startswith("n4-") and st["hessian"]["positive_definite"] in (True, False)


def test_oracle_command(tmp_path):
    code, out = _run(tmp_path, "oracle", SQUARE, "--seed", "7")
    assert code == 0
    rep = report.read_json(out / "oracle.json")
    assert rep["provenance"]["seed"] == 7
    assert abs(rep["energy"] - 2.0) <= 1e-3
    assert (out / "oracle_density.csv").exists()


def test_beta_sweep(tmp_path):
    cfg = json.loads(json.dumps(DOUBLE))
    cfg["sweep"] = {"parameter": "beta", "values": [0.8]}
    code, out = _run(tmp_path, "sweep", cfg)
    assert code == 0
    header, rows = report.read_csv(out / "sweep.csv")
    assert rows[0][header.index("ground_label")] == "n4-lead2-21212"


def test_validation_exit_code(tmp_path, capsys):
    cfg = json.loads(json.dumps(SQUARE))
    cfg["problem"]["interactions"]["U12"] = -1
    code, _ = _run(tmp_path, "solve", cfg)
    assert code == 2
    assert "U12" in capsys.readouterr().err
    assert cli.main(["solve", "--config", str(tmp_path / "missing.json")]) == 2


def test_stability_needs_walls(tmp_path):
    code, _ = _run(tmp_path, "stability", SQUARE)
    assert code == 2


def test_worker_cap(monkeypatch):
    monkeypatch.setenv("TFPS_WORKERS", "2")
    assert cli.worker_cap(8) == 2
    assert cli.worker_cap() == 2
    monkeypatch.delenv("TFPS_WORKERS")
    assert cli.worker_cap(3) == 3
    assert cli.worker_cap() == 1


def test_samples_flag(tmp_path):
    code, out = _run(tmp_path, "solve", SQUARE, "--samples", "11")
    assert code == 0
    _, rows = report.read_csv(out / "density.csv")
    assert len(rows) <= 13 and not any(math.isnan(float(r[1])) for r in rows)
    code, _ = _run(tmp_path, "solve", SQUARE, "--samples", "1")
    assert code == 2
