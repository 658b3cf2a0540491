import json
import subprocess
import sys

import pytest

from delaris import cli
from delaris import sweeps
from delaris.exceptions import ParameterError


def run_cli(*argv):
    return cli.main(list(argv))


def test_console_script_version():
    out = subprocess.run(
        [sys.executable, "-m", "delaris.cli", "--version"],
        capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip().startswith("delaris ")


def test_strategy_exponential(tmp_path):
    out = tmp_path / "o"
    assert run_cli("strategy", "--out", str(out), "--t-points", "4") == 0
    lines = (out / "strategy.csv").read_text().splitlines()
    assert lines[0] == "t,q_hat,pi_amount,pi_fraction"
    assert len(lines) == 5
    first = [float(v) for v in lines[1].split(",")]
    assert first[1] == pytest.approx(0.2915107143288456, rel=1e-12)
    manifest = json.loads((out / "manifest_strategy.json").read_text())
    assert manifest["tool"] == "delaris"
    assert manifest["subcommand"] == "strategy"
    assert manifest["outputs"] == ["strategy.csv"]
    assert manifest["resolved_config"]["risk_aversion"]["points"] == [[0.5, 0.5], [0.9, 0.5]]


def test_strategy_power_writes_growth_factors(tmp_path):
    out = tmp_path / "o"
    code = run_cli("strategy", "--family", "power", "--case", "II",
                   "--out", str(out), "--t-points", "3", "--dt", "0.01")
    assert code == 0
    assert (out / "growth_factors.csv").exists()
    manifest = json.loads((out / "manifest_strategy.json").read_text())
    assert sorted(manifest["outputs"]) == ["growth_factors.csv", "strategy.csv"]


def test_config_round_trip(tmp_path):
    params = sweeps.baseline_params("power", "II")
    cfg_path = tmp_path / "model.json"
    cfg_path.write_text(json.dumps(cli.config_dict(params)))
    loaded = cli.load_config(str(cfg_path))
    assert loaded == params


def test_config_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ParameterError, match="JSON"):
        cli.load_config(str(p))
    p.write_text(json.dumps({"horizon": 2.0}))
    with pytest.raises(ParameterError, match="missing config fields"):
        cli.load_config(str(p))
    good = cli.config_dict(sweeps.baseline_params("exponential", "I"))
    good["delay"]["alpha"] = "fast"
    p.write_text(json.dumps(good))
    with pytest.raises(ParameterError, match="delay.alpha"):
        cli.load_config(str(p))
    good["delay"]["alpha"] = 0.5
    good["extra"] = 1
    p.write_text(json.dumps(good))
    with pytest.raises(ParameterError, match="unknown config fields: extra"):
        cli.load_config(str(p))


def test_case_config_conflict(tmp_path, capsys):
    cfg = tmp_path / "m.json"
    cfg.write_text(json.dumps(cli.config_dict(sweeps.baseline_params("exponential", "I"))))
    assert run_cli("strategy", "--config", str(cfg), "--case", "II",
                   "--out", str(tmp_path / "x")) == 1
    assert "--case" in capsys.readouterr().err
    assert run_cli("strategy", "--case", "custom", "--out", str(tmp_path / "y")) == 1


def test_sweep_marks_invalid_rows(tmp_path):
    out = tmp_path / "o"
    # r above mu is rejected by validation, sweep must keep going
    assert run_cli("sweep", "--param", "r", "--points", "5",
                   "--lo", "0.1", "--hi", "0.3", "--out", str(out)) == 0
    rows = (out / "sweep_r.csv").read_text().splitlines()
    assert rows[0] == "param_value,q_hat_0,pi_0,valid,reason"
    parsed = [r.split(",", 4) for r in rows[1:]]
    flags = [p[3] for p in parsed]
    assert "true" in flags and "false" in flags
    bad = next(p for p in parsed if p[3] == "false")
    assert bad[1] == "" and "financial.mu" in bad[4]


def test_simulate_writes_estimate_and_paths(tmp_path):
    out = tmp_path / "o"
    code = run_cli("simulate", "--n-paths", "300", "--dt", "0.01",
                   "--seed", "5", "--paths-csv", "2", "--out", str(out))
    assert code == 0
    est = json.loads((out / "estimate.json").read_text())
    assert est["n_paths"] == 300
    assert set(est) == {"mean", "se", "n_paths", "excluded_paths", "per_gamma"}
    assert (out / "path_0.csv").exists() and (out / "path_1.csv").exists()
    manifest = json.loads((out / "manifest_simulate.json").read_text())
    assert manifest["options"]["seed"] == 5


def test_verify_pass_and_fault(tmp_path, capsys):
    out = tmp_path / "ok"
    assert run_cli("verify", "--check", "coefficients", "--out", str(out)) == 0
    rep = json.loads((out / "verify_report.json").read_text())
    assert rep["passed"] is True
    assert rep["checks"]["coefficients"]["passed"] is True
    capsys.readouterr()

    bad = tmp_path / "bad"
    assert run_cli("verify", "--check", "expectation", "--fault-kappa", "0.01",
                   "--out", str(bad)) == 2
    text = capsys.readouterr().out
    assert "FAIL expectation" in text
    rep = json.loads((bad / "verify_report.json").read_text())
    assert rep["passed"] is False
    assert rep["checks"]["expectation"]["max_scaled_residual"] > 1e-4


def test_verify_power_skips_coefficient_check(tmp_path):
    out = tmp_path / "o"
    assert run_cli("verify", "--family", "power", "--check", "coefficients",
                   "--dt", "0.01", "--out", str(out)) == 0
    rep = json.loads((out / "verify_report.json").read_text())
    assert rep["checks"]["coefficients"]["skipped"] is True


def test_reproduce_figures_and_manifest_reproducibility(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    argv = ["reproduce-figures", "--points", "3", "--dt", "0.04"]
    assert run_cli(*argv, "--out", str(out1)) == 0
    assert run_cli(*argv, "--out", str(out2)) == 0
    names = sorted(p.name for p in out1.glob("fig*.csv"))
    assert len(names) == 29
    assert "fig1_a.csv" in names and "fig6_f.csv" in names
    for name in names:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
    m1 = json.loads((out1 / "manifest_reproduce-figures.json").read_text())
    m2 = json.loads((out2 / "manifest_reproduce-figures.json").read_text())
    m1.pop("created_utc"), m2.pop("created_utc")
    assert m1 == m2
    header = (out1 / "fig1_a.csv").read_text().splitlines()[0]
    assert header == "param_value,q_hat_0_case_I,q_hat_0_case_II,valid,reason"


def test_argparse_usage_error_exits_1():
    out = subprocess.run(
        [sys.executable, "-m", "delaris.cli", "sweep", "--param", "nope"],
        capture_output=True, text=True,
    )
    assert out.returncode == 1
