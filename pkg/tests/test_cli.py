import csv
import json
import subprocess
import sys

import pytest

from carlton import cli
from carlton.cli import main
from carlton.training import TrainConfig

TINY = {"seed": 3, "episodes": 4, "decision_points": 4, "updates_per_episode": 2, "batch_size": 4,
        "hidden_units": 8, "train_networks_max": 3}


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    root = tmp_path_factory.mktemp("train")
    cfg = write_config(root, TINY)
    assert main(["train", "--config", cfg, "--out", str(root / "run")]) == 0
    return root, cfg


def test_train_writes_artifacts(trained):
    root, _ = trained
    run = root / "run"
    assert {"config.json", "checkpoint.npz", "training_log.csv"} <= {p.name for p in run.iterdir()}
    with open(run / "training_log.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 4
    dumped = json.loads((run / "config.json").read_text())
    assert dumped["seed"] == 3 and dumped["episodes"] == 4


def test_default_config_dump_keeps_defaults(tmp_path):
    cfg = write_config(tmp_path, {"seed": 0, "episodes": 1, "decision_points": 2, "hidden_units": 4,
                                  "batch_size": 1000})
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "r")]) == 0
    dumped = json.loads((tmp_path / "r" / "config.json").read_text())
    defaults = TrainConfig().to_dict()
    for key in ("gamma", "replay_size", "updates_per_episode", "zeta", "r_desired", "c1", "rho",
                "gamma_neighbor_m", "omega_first_half", "omega_second_half", "learning_rate_first_half",
                "learning_rate_second_half", "noise_figure_db", "channel_bandwidth", "transmit_power_dbw"):
        assert dumped[key] == defaults[key]


def test_train_rerun_is_byte_identical(trained, tmp_path):
    root, cfg = trained
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "again")]) == 0
    for name in ("training_log.csv", "config.json", "checkpoint.npz"):
        assert (tmp_path / "again" / name).read_bytes() == (root / "run" / name).read_bytes()


def test_missing_required_key_is_named(tmp_path, capsys):
    cfg = write_config(tmp_path, {"episodes": 2})
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    assert "seed" in capsys.readouterr().err


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, {"seed": 1, "batchsize": 4})
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "x")]) == 2
    assert "batchsize" in capsys.readouterr().err


def test_bad_value_rejected(tmp_path):
    cfg = write_config(tmp_path, {"seed": 1, "rho": 3})
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "x")]) == 2


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["train"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1


def test_divergence_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path, {**TINY, "learning_rate_first_half": 1e308, "episodes": 6})
    assert main(["train", "--config", cfg, "--out", str(tmp_path / "x")]) == 3
    assert "diverged" in capsys.readouterr().err


def test_eval_baselines_without_checkpoint(tmp_path):
    out = tmp_path / "ev"
    assert main(["eval", "--policies", "ra,jar", "--n-range", "2-3", "--games-per-n", "2",
                 "--out", str(out)]) == 0
    with open(out / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 8 and {r["policy"] for r in rows} == {"ra", "jar"}
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary) == {"ra", "jar"}
    for name in ("ws_by_n.csv", "cq_mix_by_n.csv", "cts_by_n.csv", "overall.csv", "config.json"):
        assert (out / name).exists()


def test_eval_carlton_needs_checkpoint(tmp_path):
    assert main(["eval", "--policies", "carlton", "--out", str(tmp_path)]) == 2


def test_eval_phi_sweep_blocks(trained, tmp_path):
    root, _ = trained
    out = tmp_path / "phi"
    assert main(["eval", "--checkpoint", str(root / "run" / "checkpoint.npz"), "--policies",
                 "carlton-phi", "--phi", "0,0.05,0.1", "--n-range", "2", "--games-per-n", "2",
                 "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary) == {"carlton", "carlton_phi=0.05", "carlton_phi=0.1"}


def test_eval_checkpoint_shape_mismatch(trained, tmp_path):
    root, _ = trained
    cfg = write_config(tmp_path, {"seed": 0, "n_channels": 6})
    assert main(["eval", "--checkpoint", str(root / "run" / "checkpoint.npz"), "--config", cfg,
                 "--policies", "carlton", "--n-range", "2", "--games-per-n", "1", "--out", str(tmp_path / "o")]) == 2


def test_eval_centralized_limited_with_warning(tmp_path, caplog, monkeypatch):
    # shrink the search budget so the cutoff falls at N = 3 for K = 10
    monkeypatch.setattr(cli, "EXHAUSTIVE_LIMIT", 1000)
    out = tmp_path / "c"
    with caplog.at_level("WARNING", logger="carlton"):
        assert main(["eval", "--policies", "ra,centralized", "--n-range", "2-5", "--games-per-n", "1",
                     "--out", str(out)]) == 0
    assert "disabled" in caplog.text
    with open(out / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert {int(r["n_networks"]) for r in rows if r["policy"] == "centralized"} == {2, 3}
    assert {int(r["n_networks"]) for r in rows if r["policy"] == "ra"} == {2, 3, 4, 5}


def test_eval_rerun_is_byte_identical(trained, tmp_path):
    root, _ = trained
    args = ["--checkpoint", str(root / "run" / "checkpoint.npz"), "--policies", "carlton,ra,jar",
            "--n-range", "2-4", "--games-per-n", "2", "--seed", "7"]
    assert main(["eval", *args, "--out", str(tmp_path / "a")]) == 0
    assert main(["eval", *args, "--out", str(tmp_path / "b")]) == 0
    for name in ("results.csv", "summary.json", "ws_by_n.csv", "cq_mix_by_n.csv", "overall.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_generate_and_inspect(tmp_path, capsys):
    path = tmp_path / "sc.json"
    assert main(["generate", "--networks", "6", "--seed", "4", "--out", str(path)]) == 0
    assert main(["inspect", str(path)]) == 0
    text = capsys.readouterr().out
    assert sum(1 for line in text.splitlines() if "manager=" in line) == 6
    assert "neighbors (gamma = 500 m)" in text
    assert "isolated quality vectors" in text


def test_generate_round_trips(tmp_path, capsys):
    assert main(["generate", "--networks", "3", "--seed", "9"]) == 0
    first = capsys.readouterr().out
    path = tmp_path / "s.json"
    path.write_text(first)
    from carlton.scenario import load_scenario, serialize_scenario
    assert serialize_scenario(load_scenario(first)) + "\n" == first


def test_inspect_reports_parse_errors(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"version": "carlton-scenario/1", "networks": []}')
    assert main(["inspect", str(path)]) == 2
    assert "missing field" in capsys.readouterr().err


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "carlton.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "train" in proc.stdout
