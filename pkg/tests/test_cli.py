from __future__ import annotations

import json

import pytest

from swarmfield import scenarios as sc
from swarmfield.cli import main


def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    assert "fig2_panel1" in out and "fig1_variance" in out and "pair_coincident" in out


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("physics:\n  alpha: 1.5\n")
    assert main(["run", str(bad), "--out", str(tmp_path / "o")]) == sc.EXIT_CONFIG
    err = capsys.readouterr().err
    assert "physics.alpha" in err and "line 2" in err


def test_unknown_preset_exit_code(tmp_path):
    assert main(["run", "no_such_preset"]) == sc.EXIT_CONFIG
    assert main(["oracle", "no_such_preset"]) == sc.EXIT_CONFIG


def test_run_small_grid(tmp_path, capsys):
    code = main(["run", "fig2_panel3", "--grid", "16", "--nt", "5", "--no-snapshots", "-q",
                 "--out", str(tmp_path)])
    summary = json.loads(capsys.readouterr().out)
    assert code == (sc.EXIT_OK if summary["converged"] else sc.EXIT_NOT_CONVERGED)
    assert not (tmp_path / "snapshots").exists()
    assert main(["check-bounds", str(tmp_path)]) == sc.EXIT_OK


def test_nonconvergence_exit_code(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("base: fig2_panel1\ndomain: {nx: 16, ny: 16}\ntime: {nt: 5}\nsolver: {max_outer: 1}\n")
    assert main(["run", str(cfg), "-q", "--no-snapshots", "--out", str(tmp_path / "o")]) == sc.EXIT_NOT_CONVERGED


def test_check_bounds_on_missing_run(tmp_path):
    assert main(["check-bounds", str(tmp_path)]) == sc.EXIT_CONFIG


def test_sweep_and_oracle(tmp_path, capsys):
    assert main(["sweep", "fig1_translation", "--n", "4", "--grid", "20", "--out", str(tmp_path / "s")]) == 0
    assert (tmp_path / "s/sweep_translation.csv").is_file()
    assert main(["oracle", "pair_stationary", "--out", str(tmp_path / "o"), "--seed", "1"]) == 0
    assert "P_T" in capsys.readouterr().out


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        main([])
