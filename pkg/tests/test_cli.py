import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from ncthom import cli, suites
from ncthom.config import ConfigError, RunConfig, load_config, parse_config
from ncthom.grid import GridFunction, GridSpec, decay_order
from ncthom.report import SuiteResult, Verification, config_hash, emit_report, render_json, write_decay_csv


# ------------------------------------------------------------- config


def test_default_config():
    cfg = load_config()
    assert cfg.grid_L == 8 and cfg.grid_h == 0.25
    assert cfg.chi_sigma == 14
    assert cfg.groups == (1, 2, 3, 4, 6)
    assert cfg.quad.epsilon_sequence == (0.2, 0.1, 0.05)
    assert cfg.tol("min_ratio") == 1.8


def test_overlay_keeps_other_defaults():
    cfg = parse_config("[grid]\nh = 0.125\n[run]\nsuites = clifford, chi\ngroups = 2, 4\n")
    assert cfg.grid_h == 0.125 and cfg.grid_L == 8
    assert cfg.suites == ("clifford", "chi") and cfg.groups == (2, 4)


@pytest.mark.parametrize("text", [
    "[run]\nsuites = nope\n",
    "[run]\ngroups = 5\n",
    "[tolerances]\nclifford = -1\n",
    "[grid]\nh = 0.3\n",
    "[run]\nrefine = 1\n",
    "[chi]\nsigma = 0\n",
    "not an ini file",
    "[quad]\nnodes = many\n",
])
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_hash_tracks_effective_settings():
    a, b = load_config(), parse_config("# comment only\n")
    assert config_hash(a.canonical()) == config_hash(b.canonical())
    c = a.with_overrides(grid_h=0.125)
    assert config_hash(c.canonical()) != config_hash(a.canonical())
    assert a.with_overrides(grid_h=None) == a
    with pytest.raises(ConfigError):
        a.with_overrides(n=7)


# ------------------------------------------------------------- report


def records():
    return [SuiteResult("demo", [Verification("a", True, 1e-13, {"L": 8}, [2.0, 4.0], {"x": np.float64(0.5)}),
                                 Verification("b", False, float("inf"), details={"z": 1 + 2j})])]


def test_json_report_format():
    doc = json.loads(render_json(records(), "abc"))
    assert doc["config_hash"] == "abc" and doc["pass"] is False
    rec = doc["suites"][0]["records"]
    assert rec[0]["defect"] == "1.000000000000e-13"
    assert rec[1]["defect"] == "inf"
    assert rec[1]["details"]["z"] == ["1.000000000000e+00", "2.000000000000e+00"]
    assert set(rec[0]) == {"lemma_id", "grid", "defect", "refinement_ratios", "pass", "details"}


def test_empty_report_writes_nothing(tmp_path):
    out = tmp_path / "r.json"
    with pytest.raises(ValueError):
        emit_report([], "json", out)
    with pytest.raises(ValueError):
        emit_report([SuiteResult("x", [])], "csv", out)
    assert not out.exists()


def test_csv_report(tmp_path):
    out = tmp_path / "r.csv"
    emit_report(records(), "csv", out, "h")
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0])[:4] == ["suite", "lemma_id", "pass", "defect"]
    assert rows[0]["details.x"] == "5.000000000000e-01"
    assert rows[1]["pass"] == "False"


def test_decay_csv_headers(tmp_path):
    spec = GridSpec(1, 40, 0.5)
    f = GridFunction(spec, (1 + np.abs(spec.points()[..., 0])) ** -3.0)
    path = tmp_path / "decay.csv"
    write_decay_csv(decay_order(f, (5, 35)), path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["radius", "value", "fit_residual"]
    assert len(rows) > 10


# ---------------------------------------------------------------- cli


def test_hp_dims_json_on_stdout(capsys):
    assert cli.main(["hp-dims", "--group", "Z4"]) == cli.EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert (doc["group"], doc["hp0"], doc["hp1"]) == ("Z4", 9, 0)


def test_hp_dims_list_for_several_groups(capsys):
    assert cli.main(["hp-dims", "--group", "Z2", "--group", "Z6"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [(d["group"], d["hp0"]) for d in doc] == [("Z2", 6), ("Z6", 10)]


@pytest.mark.parametrize("argv", [["bogus"], ["clifford", "--grid-h", "0.3"], ["hp-dims", "--group", "Z5"],
                                  ["clifford", "--format", "xml"], ["clifford", "--n", "9"],
                                  ["clifford", "--config", "/nonexistent/x.ini"]])
def test_usage_errors(argv, capsys):
    assert cli.main(argv) == cli.EXIT_CONFIG


def test_bad_thread_count(monkeypatch):
    monkeypatch.setenv("NCT_THREADS", "many")
    assert cli.main(["hp-dims"]) == cli.EXIT_CONFIG


def test_unwritable_output(capsys):
    assert cli.main(["hp-dims", "--out", "/nonexistent/dir/r.json"]) == cli.EXIT_CONFIG


def test_reports_are_byte_identical(tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert cli.main(["clifford", "hp-dims", "rg-index", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    doc = json.loads(paths[0].read_text())
    assert [s["suite"] for s in doc["suites"]] == ["clifford", "hp-dims", "rg-index"]
    assert "seconds" not in doc["suites"][0]


def test_csv_output(tmp_path, capsys):
    p = tmp_path / "r.csv"
    assert cli.main(["--suite", "hp-dims", "--format", "csv", "--out", str(p)]) == 0
    assert p.read_text().startswith("suite,lemma_id,pass,defect")


def test_failing_and_crashing_suites(monkeypatch, capsys):
    monkeypatch.setitem(suites.SUITES, "clifford", lambda cfg: [Verification("always_fails", False, 1.0)])
    assert cli.main(["clifford"]) == cli.EXIT_FAIL
    assert "always_fails" in capsys.readouterr().err

    def boom(cfg):
        raise RuntimeError("kaput")

    monkeypatch.setitem(suites.SUITES, "chi", boom)
    assert cli.main(["chi"]) == cli.EXIT_FAIL
    assert "kaput" in capsys.readouterr().err


def test_threads_keep_order(monkeypatch):
    cfg = RunConfig()
    out = cli.run_all(["hp-dims", "rg-index", "hp-dims"], cfg, threads=3)
    assert [r.name for r in out] == ["hp-dims", "rg-index", "hp-dims"]


def test_console_script():
    proc = subprocess.run([sys.executable, "-m", "ncthom.cli", "hp-dims", "--group", "Z3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["hp0"] == 8
