import csv
import json
import subprocess
import sys

import pytest

from squeeze_sim.cli import EXIT_ERROR, EXIT_OK, EXIT_QUENCH, main
from squeeze_sim.config import config_to_ini, reference_config
from squeeze_sim.nonlinearity import PhysParams


@pytest.fixture
def small_ini(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(config_to_ini(reference_config(16, horizon=2e-3, dt=1e-4, snapshot_every=5)))
    return path


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_writes_outputs(small_ini, tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(small_ini), "--out", str(out), "--quiet"]) == EXIT_OK
    rows = _rows(out / "timeseries.csv")
    assert len(rows) == 21
    assert list(rows[0]) == ["t", "min_gap", "X_norm", "ball_distance", "u_center", "w_center"]
    assert float(rows[0]["ball_distance"]) == 0.0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok" and manifest["quench"] is None
    assert set(manifest["outputs"]) == {"timeseries", "snapshots"}
    assert manifest["ledger"]["kappa"] == 1.0


def test_simulate_is_deterministic_and_replayable(small_ini, tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    for out in (a, b):
        main(["simulate", "--config", str(small_ini), "--out", str(out), "--quiet"])
    main(["simulate", "--config", str(a / "manifest.json"), "--out", str(c), "--quiet"])
    first = (a / "timeseries.csv").read_bytes()
    assert first == (b / "timeseries.csv").read_bytes() == (c / "timeseries.csv").read_bytes()
    assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()


def test_simulate_json_format(small_ini, tmp_path):
    out = tmp_path / "j"
    assert main(["simulate", "--config", str(small_ini), "--out", str(out), "--format", "json", "--quiet"]) == EXIT_OK
    data = json.loads((out / "timeseries.json").read_text())
    assert len(data["t"]) == 21 and set(data) >= {"min_gap", "X_norm"}


def test_simulate_quench_exit_code(tmp_path):
    cfg = reference_config(16, horizon=1.0, dt=5e-4, params=PhysParams(20.0, 0.1, 1.0, 1.0))
    ini = tmp_path / "q.ini"
    ini.write_text(config_to_ini(cfg))
    out = tmp_path / "q"
    assert main(["simulate", "--config", str(ini), "--out", str(out), "--quiet"]) == EXIT_QUENCH
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "quench"
    assert 0.0 < manifest["quench"]["time"] < 1.0
    assert float(_rows(out / "timeseries.csv")[-1]["t"]) <= manifest["quench"]["time"]


@pytest.mark.parametrize("bad", ["[domain]\nlength = 1\n", "not an ini"])
def test_bad_config_exits_one(tmp_path, bad):
    ini = tmp_path / "bad.ini"
    ini.write_text(bad)
    assert main(["simulate", "--config", str(ini), "--out", str(tmp_path / "o"), "--quiet"]) == EXIT_ERROR


def test_bad_radius_exits_one(tmp_path, caplog):
    ini = tmp_path / "r.ini"
    ini.write_text(config_to_ini(reference_config(16, ball_radius=50.0)))
    assert main(["simulate", "--config", str(ini), "--out", str(tmp_path / "o")]) == EXIT_ERROR
    assert "ball radius hypothesis" in caplog.text


def test_missing_config_exits_one(tmp_path):
    assert main(["constants", "--config", str(tmp_path / "absent.ini"), "--quiet"]) == EXIT_ERROR
    assert main(["constants", "--quiet"]) == EXIT_ERROR


def test_constants_json(small_ini, capsys):
    assert main(["constants", "--config", str(small_ini), "--format", "json", "--quiet"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["T0"] > 0 and data["r"] < data["kappa"] / (2 * data["C_embed"])


def test_constants_table_with_measurement(small_ini, capsys):
    assert main(["constants", "--config", str(small_ini), "--measure", "10", "--quiet"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "T0" in text and "C_o" in text


def test_verify_passes_and_override_fails(small_ini, tmp_path, capsys):
    out = tmp_path / "v"
    assert main(["verify", "--config", str(small_ini), "--trials", "5", "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "verify_report.json").read_text())
    assert report["trials"] == 5 and all(r["pass"] for r in report["reports"])
    assert capsys.readouterr().out.count("PASS") == len(report["reports"])
    tol = tmp_path / "tight.json"
    tol.write_text(json.dumps({"elliptic-h1-bound": 0.0}))
    assert main(["verify", "--config", str(small_ini), "--trials", "5", "--tolerances", str(tol), "--quiet"]) == EXIT_ERROR


def test_verify_zero_trials(small_ini):
    assert main(["verify", "--config", str(small_ini), "--trials", "0", "--quiet"]) == EXIT_OK


def test_sweep_order_and_singleton(small_ini, tmp_path, monkeypatch):
    sweep = tmp_path / "s.ini"
    sweep.write_text("[sweep]\nbeta_F = 0.1, 0.2\nbeta_p = 0.0, 0.1\n")
    monkeypatch.setenv("SQUEEZE_SIM_THREADS", "2")
    out = tmp_path / "s"
    assert main(["sweep", "--config", str(small_ini), "--sweep", str(sweep), "--out", str(out), "--quiet"]) == EXIT_OK
    rows = _rows(out / "sweep.csv")
    assert [(r["beta_F"], r["beta_p"]) for r in rows] == [("0.1", "0.0"), ("0.1", "0.1"), ("0.2", "0.0"), ("0.2", "0.1")]
    assert all(r["status"] == "ok" for r in rows)
    # the (0.1, 0.1) row is the base config itself
    run = tmp_path / "one"
    main(["simulate", "--config", str(small_ini), "--out", str(run), "--quiet"])
    assert float(rows[1]["end_time"]) == float(_rows(run / "timeseries.csv")[-1]["t"])


def test_sweep_rejects_unknown_key(small_ini, tmp_path):
    sweep = tmp_path / "s.ini"
    sweep.write_text("[sweep]\ngravity = 1\n")
    assert main(["sweep", "--config", str(small_ini), "--sweep", str(sweep), "--quiet"]) == EXIT_ERROR


def test_module_entry_point(small_ini):
    res = subprocess.run([sys.executable, "-m", "squeeze_sim", "constants", "--config", str(small_ini), "--quiet"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "T0" in res.stdout


def test_sweep_T0_non_increasing_in_beta_F(small_ini, tmp_path, monkeypatch):
    sweep = tmp_path / "s.ini"
    sweep.write_text("[sweep]\nbeta_F = 0.0, 0.05, 0.1, 0.4, 1.6\n")
    monkeypatch.setenv("SQUEEZE_SIM_THREADS", "1")
    out = tmp_path / "s"
    assert main(["sweep", "--config", str(small_ini), "--sweep", str(sweep), "--out", str(out), "--quiet"]) == EXIT_OK
    t0 = [float(r["T0"]) for r in _rows(out / "sweep.csv")]
    assert all(a >= b for a, b in zip(t0, t0[1:]))
