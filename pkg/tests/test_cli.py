"""Command-line interface: subcommands, env var, exit codes."""

import csv
import os

from cmepricer.cli import main
from cmepricer.market import load_paths


def test_simulate_dump_and_reload(tmp_path, capsys):
    target = tmp_path / "paths.bin"
    code = main(["simulate", "--n", "50", "--maturity", "0.5", "--seed", "3", "--out", str(target)])
    assert code == 0
    paths = load_paths(target)
    assert paths.n_paths == 50
    assert paths.n_steps == 26
    assert paths.seed == 3
    assert "wrote 50 paths" in capsys.readouterr().out


def test_price_cell(capsys):
    code = main(
        ["price", "--n", "400", "--maturity", "1.0", "--strike", "100", "--seed", "1", "--bound-report"]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "cme_lr: price =" in out
    assert "ls: price =" in out
    assert "ranks = (" in out
    assert "bound report: delta_lr" in out


def test_price_rejects_unknown_method(capsys):
    code = main(["price", "--n", "50", "--maturity", "0.5", "--strike", "90", "--methods", "bogus"])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_bench_env_var_output_dir(tmp_path, monkeypatch, capsys):
    out = tmp_path / "from_env"
    monkeypatch.setenv("CMEPRICER_OUT", str(out))
    code = main(
        [
            "bench",
            "--n",
            "60",
            "--maturity",
            "0.5",
            "--strikes",
            "2",
            "--reps",
            "1",
            "--reference-paths",
            "2000",
            "--no-plots",
        ]
    )
    assert code == 0
    assert (out / "results.csv").exists()
    assert (out / "winner_time_T1.csv").exists()


def test_bench_flag_overrides_config(tmp_path):
    cfg = tmp_path / "cfg"
    cfg.write_text("n_grid = 60\nmaturities = 0.5\nmoneyness_count = 2\nreplications = 1\nreference_paths = 2000\n")
    out = tmp_path / "flagged"
    code = main(
        ["bench", "--config", str(cfg), "--reps", "2", "--out", str(out), "--no-plots"]
    )
    assert code == 0
    with open(out / "results.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {int(r["rep"]) for r in rows} == {0, 1}


def test_bench_renders_figures(tmp_path):
    out = tmp_path / "with_plots"
    code = main(
        [
            "bench",
            "--n",
            "60",
            "--maturity",
            "0.5",
            "--strikes",
            "2",
            "--reps",
            "2",
            "--reference-paths",
            "2000",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    names = set(os.listdir(out))
    assert {"winner_time_T1.png", "winner_err_T1.png", "error_mk_winner_T1.png", "rank_T1.png"} <= names


def test_bench_nonzero_rate_needs_reference(tmp_path, capsys):
    code = main(
        [
            "bench",
            "--n",
            "60",
            "--maturity",
            "0.5",
            "--strikes",
            "2",
            "--reps",
            "1",
            "--rate",
            "0.05",
            "--out",
            str(tmp_path / "r5"),
            "--no-plots",
        ]
    )
    assert code == 2
    assert "reference" in capsys.readouterr().err.lower()


def test_rank_subcommand(tmp_path):
    out = tmp_path / "rank"
    code = main(
        [
            "rank",
            "--epsilons",
            "1e-4,1e-5",
            "--n",
            "80",
            "--maturity",
            "1.0",
            "--reps",
            "1",
            "--out",
            str(out),
            "--no-plots",
        ]
    )
    assert code == 0
    with open(out / "rank_T1.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {float(r["epsilon"]) for r in rows} == {1e-4, 1e-5}


def test_converge_subcommand(tmp_path):
    out = tmp_path / "conv"
    code = main(["converge", "--n-grid", "100,200", "--reps", "2", "--out", str(out), "--no-plots"])
    assert code == 0
    assert (out / "converge.csv").exists()
    assert (out / "converge_summary.csv").exists()
