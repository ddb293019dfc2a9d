"""CLI subcommands, exit codes and the CNODE_OUT environment override."""

import json

import pytest

from cnode import load_dataset
from cnode.cli import main


def run(argv):
    return main(argv)


TRAIN_FAST = ["--k-max", "2", "--lr", "1e-4"]


def test_generate_writes_train_and_test(tmp_path):
    out = tmp_path / "data"
    rc = run(["generate", "--system", "cr", "--task", "extrapolation",
              "--scale", "desk", "--out", str(out)])
    assert rc == 0
    train, system, params = load_dataset(out / "cr_extrapolation_train.csv")
    test, _, _ = load_dataset(out / "cr_extrapolation_test.csv")
    assert system == "cr"
    assert params["k1"] == 0.08
    assert len(train) == 50
    assert test.grid.points[-1] == 200.0


def test_generate_honours_cnode_out(tmp_path, monkeypatch):
    monkeypatch.setenv("CNODE_OUT", str(tmp_path / "root"))
    rc = run(["generate", "--system", "wpg", "--scale", "desk"])
    assert rc == 0
    assert (tmp_path / "root" / "datasets"
            / "wpg_reconstruction_train.csv").exists()


def test_train_single_run(tmp_path):
    run_dir = tmp_path / "run"
    rc = run(["train", "--system", "wpg", "--method", "vanilla",
              "--run-dir", str(run_dir), *TRAIN_FAST])
    assert rc == 0
    for name in ("result.json", "params.bin", "history.csv"):
        assert (run_dir / name).exists()
    with open(run_dir / "result.json") as fh:
        payload = json.load(fh)
    assert payload["config"]["method"] == "vanilla"
    assert payload["config"]["k_max"] == 2


def test_train_seed_sweep(tmp_path):
    rc = run(["train", "--system", "wpg", "--method", "self-adaptive",
              "--seeds", "1,2", "--out", str(tmp_path), *TRAIN_FAST])
    assert rc == 0
    assert (tmp_path / "wpg_reconstruction_self-adaptive_s1").is_dir()
    assert (tmp_path / "wpg_reconstruction_self-adaptive_s2").is_dir()


def test_train_config_file_with_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"system": "wpg", "method": "quadratic",
                               "mu": 10.0, "k_max": 5, "lr": 1e-4}))
    run_dir = tmp_path / "run"
    rc = run(["train", "--config", str(cfg), "--k-max", "2",
              "--run-dir", str(run_dir)])
    assert rc == 0
    with open(run_dir / "result.json") as fh:
        payload = json.load(fh)
    assert payload["config"]["mu"] == 10.0
    assert payload["config"]["k_max"] == 2  # flag wins over file


def test_train_accepts_result_json_as_config(tmp_path):
    first = tmp_path / "first"
    assert run(["train", "--system", "wpg", "--method", "vanilla",
                "--run-dir", str(first), *TRAIN_FAST]) == 0
    second = tmp_path / "second"
    rc = run(["train", "--config", str(first / "result.json"),
              "--run-dir", str(second)])
    assert rc == 0
    assert (second / "result.json").exists()


def test_usage_errors_exit_2(tmp_path):
    # quadratic without mu
    assert run(["train", "--system", "wpg", "--method", "quadratic",
                "--run-dir", str(tmp_path / "x"), *TRAIN_FAST]) == 2
    # no system at all
    assert run(["train", *TRAIN_FAST]) == 2
    # argparse rejects unknown choices with SystemExit(2)
    with pytest.raises(SystemExit) as exc:
        run(["train", "--system", "volcano"])
    assert exc.value.code == 2


def test_missing_artifact_exits_4(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert run(["plot-data", str(empty)]) == 4
    assert run(["report", str(empty)]) == 4


def test_report_and_plot_data(tmp_path):
    dirs = []
    for method in ("vanilla", "self-adaptive"):
        d = tmp_path / method
        assert run(["train", "--system", "wpg", "--method", method,
                    "--run-dir", str(d), *TRAIN_FAST]) == 0
        dirs.append(str(d))
    rep = tmp_path / "rep"
    rc = run(["report", *dirs, "--out", str(rep)])
    assert rc == 0
    assert (rep / "report.csv").exists()
    assert (rep / "report.png").exists()
    with open(rep / "report.csv") as fh:
        lines = fh.read().strip().splitlines()
    assert len(lines) == 3  # header + one row per method
    rc = run(["plot-data", dirs[0]])
    assert rc == 0
    assert (tmp_path / "vanilla" / "curves.csv").exists()
    assert (tmp_path / "vanilla" / "curves.png").exists()
    with open(tmp_path / "vanilla" / "curves.csv") as fh:
        header = fh.readline().strip()
    assert header == "t,p_true,p_pred"
