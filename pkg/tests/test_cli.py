import json

import numpy as np
import pytest

from soecredit.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_irf_csv_has_one_row_per_quarter(capsys):
    code, out, err = run(capsys, "irf", "--shock", "monetary", "--scenario", "baseline_friction", "--horizon", "20", "--out", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].split(",")[0] == "period"
    assert len(lines) == 22
    assert [int(l.split(",")[0]) for l in lines[1:]] == list(range(21))
    manifest = json.loads(err)
    assert manifest["command"] == "irf" and manifest["scenario"] == "baseline_friction"
    assert set(manifest) == {"command", "calibration_hash", "scenario", "policy", "seed", "version", "timestamp"}


def test_solve_reports_unique(capsys):
    code, out, _ = run(capsys, "solve", "--scenario", "no_friction", "--policy", "pi")
    assert code == 0
    doc = json.loads(out)
    assert doc["determinacy"] == "unique"
    assert doc["path_residual"] < 1e-8
    assert doc["manifest"]["policy"] == "pi"
    assert np.array(doc["P"]).shape == (len(doc["variables"]),) * 2


def test_unknown_shock_is_usage_error(capsys):
    code, out, err = run(capsys, "irf", "--shock", "bogus")
    assert code == 2
    assert "unknown shock: bogus" in err
    assert out == ""


def test_unknown_subcommand(capsys):
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_conflicting_flags(capsys):
    with pytest.raises(SystemExit) as info:
        main(["loss", "--version", "1", "--input", "x.csv", "--shocks", "spread"])
    assert info.value.code == 2


def test_model_error_is_structured_json(capsys):
    code, out, _ = run(capsys, "solve", "--set", "G_pi=0.5")
    assert code == 1
    err = json.loads(out)
    assert err["code"] == "explosive"
    assert err["message"] == "no stable solution"
    assert "spectrum" in err["context"]


def test_invalid_calibration(capsys):
    code, out, _ = run(capsys, "irf", "--shock", "monetary", "--set", "beta_lev_delta=-0.1")
    assert code == 1
    assert json.loads(out) == {"code": "invalid_calibration", "message": "beta_lev_delta must be ≥ 0", "context": {}}


def test_file_output_with_sidecar_manifest(tmp_path, capsys):
    target = tmp_path / "irf.json"
    code, out, _ = run(capsys, "irf", "--shock", "spread", "--horizon", "4", "--out", str(target))
    assert code == 0 and out == ""
    doc = json.loads(target.read_text())
    assert doc["labels"][0] == "pi" and len(doc["periods"]) == 5
    manifest = json.loads((tmp_path / "irf.json.manifest.json").read_text())
    assert manifest["command"] == "irf"


def test_bad_output_format(capsys):
    code, _, err = run(capsys, "irf", "--shock", "spread", "--out", "result.txt")
    assert code == 2 and "--out" in err


def test_simulation_payload_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert run(capsys, "simulate", "--periods", "150", "--seed", "42", "--shocks", "spread,preference", "--out", str(path))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    ma = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    mb = json.loads((tmp_path / "b.csv.manifest.json").read_text())
    ma.pop("timestamp"), mb.pop("timestamp")
    assert ma == mb and ma["seed"] == 42


def test_loss_from_stored_simulation(tmp_path, capsys):
    path = tmp_path / "sim.csv"
    run(capsys, "simulate", "--periods", "200", "--seed", "1", "--out", str(path))
    code, out, _ = run(capsys, "loss", "--version", "1", "--alpha", "0.5", "--input", str(path))
    assert code == 0
    doc = json.loads(out)
    table = np.genfromtxt(path, delimiter=",", names=True)
    expected = np.var(table["pi"]) + 0.5 * np.var(table["ygap"])
    assert doc["loss"] == pytest.approx(expected, rel=1e-9)


def test_config_from_environment(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "cal.txt"
    cfg.write_text("v = 1.25\n", encoding="utf-8")
    code, out, _ = run(capsys, "dump-system", "--out", "json")
    default_hash = json.loads(out)["manifest"]["calibration_hash"]
    monkeypatch.setenv("SOECREDIT_CONFIG", str(cfg))
    code, out, _ = run(capsys, "dump-system", "--out", "json")
    doc = json.loads(out)
    assert doc["calibration"]["v"] == 1.25
    assert doc["manifest"]["calibration_hash"] != default_hash
    assert "nri" in doc["row_tags"]


def test_missing_config_file(capsys, monkeypatch):
    monkeypatch.setenv("SOECREDIT_CONFIG", "/nonexistent/cal.txt")
    code, _, err = run(capsys, "solve")
    assert code == 2 and "config file not found" in err


def test_sweep_long_table(capsys):
    code, out, _ = run(
        capsys, "sweep", "--param", "beta_lev_delta", "--values", "0,0.031,0.1", "--shock", "monetary",
        "--horizon", "4", "--variables", "spread,lev",
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "beta_lev_delta,period,spread,lev"
    assert len(lines) == 1 + 3 * 5


def test_compare_rules_with_figure(tmp_path, capsys):
    fig = tmp_path / "losses.png"
    code, out, _ = run(capsys, "compare-rules", "--periods", "500", "--out", "csv", "--figure", str(fig))
    assert code == 0
    assert out.splitlines()[0] == "version,fi,pi,ratio" and len(out.splitlines()) == 5
    assert fig.stat().st_size > 0


def test_regress_and_rank_error(tmp_path, capsys):
    rng = np.random.default_rng(0)
    x = rng.normal(size=80)
    path = tmp_path / "d.csv"
    rows = ["y,x,c"] + [f"{2 + 3 * a},{a},1.5" for a in x]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    code, out, _ = run(capsys, "regress", "--data", str(path), "--y", "y", "--x", "x", "--lags", "2")
    assert code == 0
    doc = json.loads(out)
    coefs = {c["name"]: c["coef"] for c in doc["coefficients"]}
    assert coefs["const"] == pytest.approx(2) and coefs["x"] == pytest.approx(3)
    code, out, _ = run(capsys, "regress", "--data", str(path), "--y", "y", "--x", "x,c")
    assert code == 1
    err = json.loads(out)
    assert err["code"] == "rank_deficient" and set(err["context"]["columns"]) == {"const", "c"}
    code, _, err_text = run(capsys, "regress", "--data", str(path), "--y", "y", "--x", "nope")
    assert code == 2 and "unknown column: nope" in err_text


def test_dump_system_reports_debt_coefficients(capsys):
    code, out, _ = run(capsys, "dump-system", "--out", "json")
    doc = json.loads(out)
    row = doc["row_tags"].index("budget_b")
    col = [v["name"] for v in doc["variables"]].index("b")
    assert -doc["C"][row][col] == pytest.approx(doc["budget_coefficients"]["beta_lag"], rel=1e-10)
