import hashlib
import json
import math

import numpy as np
import pytest
from scipy import stats

from hawkes_impact.cli import main
from hawkes_impact.experiments import (ExperimentConfig, mc_mean_ci,
                                       run_experiment)


def test_mc_mean_ci_constant():
    mean, half = mc_mean_ci([1.0, 1.0, 1.0, 1.0])
    assert mean == 1.0 and half == 0.0


def test_mc_mean_ci_two_points():
    mean, half = mc_mean_ci([0.0, 2.0], level=0.95)
    z = stats.norm.ppf(0.975)
    assert mean == 1.0
    assert abs(half - z) <= 1e-12  # sd = sqrt(2), n = 2
    assert abs(half - 1.96) <= 0.01


def test_mc_mean_ci_normal_coverage():
    draws = np.random.default_rng(12).standard_normal(10000)
    mean, half = mc_mean_ci(draws, level=0.99)
    assert abs(mean) <= 0.05
    assert half <= 0.05


def test_mc_mean_ci_errors():
    with pytest.raises(ValueError):
        mc_mean_ci([1.0])
    with pytest.raises(ValueError):
        mc_mean_ci([1.0, 2.0], level=1.5)


def test_config_validation(tmp_path):
    with pytest.raises(ValueError, match="unknown experiment"):
        ExperimentConfig("does_not_exist", {"seed": 1}, str(tmp_path))
    with pytest.raises(ValueError, match="missing parameters"):
        ExperimentConfig("figure1_impact", {"alpha": 0.5}, str(tmp_path))
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"parameters": {}}))
    with pytest.raises(ValueError, match="experiment"):
        ExperimentConfig.from_json(cfg_path)


def _figure1_config(tmp_path, sub="a"):
    return ExperimentConfig("figure1_impact",
                            {"alpha": 0.5, "K": 1.0, "gamma": 0.1, "seed": 1,
                             "grid_points": 201},
                            str(tmp_path / sub))


def test_figure1_experiment(tmp_path):
    art = run_experiment(_figure1_config(tmp_path))
    assert art.passed
    out = tmp_path / "a"
    assert (out / "figure1.csv").exists()
    assert (out / "manifest.json").exists()
    assert (out / "summary.json").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert abs(summary["execution_exponent"] - 0.5) < 0.02


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_reproducibility_bitwise(tmp_path):
    a = run_experiment(_figure1_config(tmp_path, "a"))
    b = run_experiment(_figure1_config(tmp_path, "b"))
    for name in a.tables:
        assert _digest(a.tables[name]) == _digest(b.tables[name])
    assert a.summary == b.summary


def test_manifest_reproduces_run(tmp_path):
    art = run_experiment(_figure1_config(tmp_path, "a"))
    manifest_path = tmp_path / "a" / "manifest.json"
    cfg = ExperimentConfig.from_json(manifest_path)
    cfg2 = ExperimentConfig(cfg.experiment, cfg.parameters, str(tmp_path / "c"))
    art2 = run_experiment(cfg2)
    assert art2.summary == art.summary
    for name in art.tables:
        assert _digest(art.tables[name]) == _digest(art2.tables[name])


def _bridge_config(tmp_path, sub):
    return ExperimentConfig(
        "char_function_bridge",
        {"alpha": 0.4, "K": 1.0, "delta": 1.0, "u": 0.5, "T": 500.0,
         "paths": 60, "reps": 12, "steps": 256, "observation_points": 64,
         "soe_terms": 14, "seed": 5},
        str(tmp_path / sub))


def test_parallel_serial_equivalence(tmp_path, monkeypatch):
    monkeypatch.setenv("HAWKES_IMPACT_THREADS", "1")
    serial = run_experiment(_bridge_config(tmp_path, "serial"))
    monkeypatch.setenv("HAWKES_IMPACT_THREADS", "4")
    parallel = run_experiment(_bridge_config(tmp_path, "parallel"))
    assert serial.summary == parallel.summary
    assert _digest(serial.tables["bridge"]) == _digest(parallel.tables["bridge"])


def test_impact_convergence_experiment(tmp_path):
    cfg = ExperimentConfig("impact_convergence",
                           {"alpha": 0.5, "K": 1.0, "gamma": 0.1,
                            "T_list": [1e2, 1e3, 1e4], "seed": 2},
                           str(tmp_path))
    art = run_experiment(cfg)
    assert art.passed
    assert art.summary["sup_distance"][0] > art.summary["sup_distance"][-1]


def test_unknown_experiment_leaves_no_output(tmp_path):
    target = tmp_path / "nothing"
    with pytest.raises(ValueError):
        ExperimentConfig("mystery", {"seed": 1}, str(target))
    assert not target.exists()


def test_cli_ml_eval(capsys):
    rc = main(["ml", "eval", "--alpha", "1", "--beta", "1", "--z", "1"])
    assert rc == 0
    assert abs(float(capsys.readouterr().out) - math.e) < 1e-12


def test_cli_run_exit_codes(tmp_path, capsys):
    cfg = {"experiment": "figure1_impact",
           "parameters": {"alpha": 0.5, "K": 1.0, "gamma": 0.1, "seed": 1,
                          "grid_points": 101},
           "output_dir": str(tmp_path / "run")}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["run", "--config", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert "[PASS]" in out

    # a config whose acceptance flag fails exits 1: T decreasing breaks monotonicity
    bad = {"experiment": "impact_convergence",
           "parameters": {"alpha": 0.5, "K": 1.0, "gamma": 0.1, "seed": 1,
                          "T_list": [1e4, 1e3, 1e2]},
           "output_dir": str(tmp_path / "bad")}
    bad_path = tmp_path / "bad.json"
    bad_path.write_text(json.dumps(bad))
    assert main(["run", "--config", str(bad_path)]) == 1
    assert "[FAIL]" in capsys.readouterr().out

    # config errors exit 2
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps({"experiment": "mystery", "parameters": {"seed": 1}}))
    assert main(["run", "--config", str(broken)]) == 2


def test_cli_usage_error_exits_2():
    with pytest.raises(SystemExit) as err:
        main(["simulate"])  # required arguments missing
    assert err.value.code == 2


def test_cli_simulate_and_heston(tmp_path):
    rc = main(["simulate", "--alpha", "0.5", "--T", "50", "--aT", "0.4",
               "--muT", "1.0", "--gamma", "0.2", "--reps", "2", "--seed", "3",
               "--price-points", "11", "--out", str(tmp_path / "sim")])
    assert rc == 0
    assert (tmp_path / "sim" / "events_rep0001.csv").exists()
    assert (tmp_path / "sim" / "price_rep0000.csv").exists()
    rc = main(["heston", "--alpha", "0.75", "--paths", "2", "--steps", "64",
               "--seed", "4", "--out", str(tmp_path / "heston")])
    assert rc == 0
    assert (tmp_path / "heston" / "variance_path001.csv").exists()
    assert (tmp_path / "heston" / "summary.json").exists()


def test_cli_impact_writes_figure1(tmp_path):
    rc = main(["impact", "--mode", "limit", "--alpha", "0.5",
               "--grid-points", "101", "--out", str(tmp_path)])
    assert rc == 0
    assert (tmp_path / "impact.csv").exists()
    assert (tmp_path / "figure1.csv").exists()


def test_csv_full_precision_roundtrip(tmp_path):
    from hawkes_impact.common import read_csv, write_csv
    values = np.array([math.pi, 1.0 / 3.0, 1e-17, 123456789.123456789])
    write_csv(tmp_path / "x.csv", [values], ["v"], {"k": "v"})
    _, cols = read_csv(tmp_path / "x.csv")
    assert np.array_equal(cols["v"], values)


def test_roughness_sweep_experiment(tmp_path):
    cfg = ExperimentConfig("roughness_sweep",
                           {"alpha_list": [0.4, 0.75], "paths": 80,
                            "steps": 1024, "seed": 6},
                           str(tmp_path))
    art = run_experiment(cfg)
    assert (tmp_path / "roughness.csv").exists()
    assert set(art.summary["flags"]) == {
        "alpha_0.4_regularity", "alpha_0.4_nondifferentiable",
        "alpha_0.75_regularity", "alpha_0.75_smooth"}


def test_micro_macro_price_experiment(tmp_path):
    # full-scale bridge: variance agreement within 10% and a small
    # two-sample distance between rescaled and limiting price laws
    cfg = ExperimentConfig("micro_macro_price",
                           {"alpha": 0.6, "K": 1.0, "delta": 1.0, "T": 1e4,
                            "reps": 2000, "steps": 2048, "seed": 441,
                            "soe_terms": 20},
                           str(tmp_path))
    art = run_experiment(cfg)
    assert art.passed, art.summary
    assert abs(art.summary["var_macro"] / art.summary["var_theory"] - 1.0) <= 0.15
