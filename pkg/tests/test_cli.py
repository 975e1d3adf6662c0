import csv
import io
import json
import subprocess
import sys

import pytest

from mdir.cli import CliReport, fmt_p, main, resolve_menu
from mdir.errors import ConfigError

from conftest import GTSG_CSV


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_text_output(capsys):
    code, out, _ = run(["test", "--input", str(GTSG_CSV), "--nperm", "500"], capsys)
    assert code == 0
    assert "S_n = 13.4387, df = 2" in out
    assert "w(0,0)" in out and "cross" in out


def test_json_round_trip(tmp_path, capsys):
    target = tmp_path / "r.json"
    code, _, _ = run(["test", "--input", str(GTSG_CSV), "--nperm", "300", "--format", "json", "--out", str(target)], capsys)
    assert code == 0
    text = target.read_text()
    report = CliReport.from_json(text)
    assert report.to_json() == text
    assert report.schema == "mdir.test/v1"
    assert report.weights == ["w(0,0)", "cross"]
    assert report.n == 90 and report.df == 2


def test_rg_flags_and_order(capsys):
    code, out, _ = run(["test", "--input", str(GTSG_CSV), "--nperm", "100", "--rg", "0,0", "--rg", "1,1",
                        "--rg", "1,5", "--format", "json"], capsys)
    assert code == 0
    assert json.loads(out)["weights"] == ["w(0,0)", "w(1,1)", "w(1,5)", "cross"]


def test_crossing_only(capsys):
    code, out, _ = run(["test", "--input", str(GTSG_CSV), "--nperm", "100", "--no-rg", "--format", "json"], capsys)
    assert code == 0 and json.loads(out)["weights"] == ["cross"]


def test_dependent_weights_are_pruned(capsys):
    code, out, err = run(["test", "--input", str(GTSG_CSV), "--nperm", "100", "--rg", "0,0", "--rg", "0,0",
                          "--format", "json"], capsys)
    assert code == 0
    assert json.loads(out)["pruned"] == ["w(0,0)"]
    assert "dropped" in err


def test_no_weights_is_config_error():
    with pytest.raises(ConfigError):
        resolve_menu(False, [])


def test_same_seed_same_output(capsys):
    argv = ["test", "--input", str(GTSG_CSV), "--nperm", "800", "--seed", "3", "--format", "json"]
    assert run(argv, capsys)[1] == run(argv, capsys)[1]


@pytest.mark.parametrize(
    "argv",
    [
        ["test"],
        ["test", "--input", "x.csv", "--alpha", "2"],
        ["test", "--input", "x.csv", "--rg", "a,b"],
        ["test", "--input", "x.csv", "--nperm", "0"],
        ["test", "--input", "x.csv", "--bogus"],
        ["frobnicate"],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_no_rg_conflict_exit_2(capsys):
    code, _, err = run(["test", "--input", str(GTSG_CSV), "--no-rg", "--rg", "1,1"], capsys)
    assert code == 2 and "ConfigError" in err


@pytest.mark.parametrize(
    "content, kind",
    [
        ("time,status,group\n1,1,A\n2,0,A\n", "EmptyGroup"),
        ("time,status,group\n1,1,A\n2,0,B\n3,1,C\n", "BadLabelCardinality"),
        ("time,status,group\n1,1,A\n-2,0,B\n", "NegativeTime"),
        ("time,status,group\n1,3,A\n2,0,B\n", "BadStatus"),
        ("time,status,group\n1,1,A\nabc,0,B\n", "ParseError"),
        ("when,status,group\n1,1,A\n", "ParseError"),
        ("time,status,group\n1,0,A\n2,0,B\n", "NoEvents"),
    ],
)
def test_data_errors_exit_3_without_output(tmp_path, capsys, content, kind):
    src = tmp_path / "in.csv"
    src.write_text(content)
    out = tmp_path / "out.json"
    code, _, err = run(["test", "--input", str(src), "--out", str(out), "--nperm", "50"], capsys)
    assert code == 3
    assert kind in err
    assert not out.exists()
    assert list(tmp_path.iterdir()) == [src]


def test_parse_error_names_line(tmp_path, capsys):
    src = tmp_path / "in.csv"
    src.write_text("time,status,group\n1,1,A\n2,0,B\n3,x,A\n")
    code, _, err = run(["test", "--input", str(src)], capsys)
    assert code == 3 and ":4:" in err


def test_missing_file_exit_3(capsys):
    code, _, _ = run(["test", "--input", "/nonexistent/file.csv"], capsys)
    assert code == 3


def test_fmt_p():
    assert fmt_p(0.0012345) == "0.00123"
    assert fmt_p(0.5) == "0.5"
    assert fmt_p(0.00012345) == "1.23e-04"


def write_config(tmp_path, cfg):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    return str(p)


def test_simulate_type1(tmp_path, capsys):
    cfg = write_config(tmp_path, {"study": "type1", "seed": 1, "n_sim": 20, "n_perm": 30,
                                  "designs": [[15, 15]], "censoring": ["equal"]})
    out = tmp_path / "t1.csv"
    assert run(["simulate", "type1", cfg, "--out", str(out)], capsys)[0] == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "scenario_id,theta,method,rejection_rate,se,n_sim"
    assert len(lines) == 1 + 4  # two menus times two calibrations


def test_simulate_power_with_plot(tmp_path, capsys):
    cfg = write_config(tmp_path, {"study": "power", "alternative": "crossing", "n_sim": 10, "n_perm": 20,
                                  "n_points": 3, "designs": [[15, 15]]})
    out, svg = tmp_path / "p.csv", tmp_path / "p.svg"
    assert run(["simulate", "power", cfg, "--out", str(out), "--plot", str(svg)], capsys)[0] == 0
    assert len(out.read_text().splitlines()) == 1 + 3 * 4
    assert svg.read_text().lstrip().startswith("<?xml")


def test_simulate_asympt(tmp_path, capsys):
    cfg = write_config(tmp_path, {"study": "asympt", "eta": 0.5, "censoring": "none",
                                  "cases": [{"direction": "0,0", "scale": 1.0, "menu": {"rg": [[0, 0]]}}]})
    code, out, _ = run(["simulate", "asympt", cfg], capsys)
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert row["direction"] == "w(0,0)"
    assert float(row["lambda"]) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize(
    "cfg",
    [
        {"study": "type1", "unexpected": 1},
        {"study": "power"},
        {"study": "power", "alternative": "sideways"},
        {"study": "type1", "alpha": 2.0},
        {"study": "asympt", "cases": []},
    ],
)
def test_simulate_config_errors_exit_2(tmp_path, capsys, cfg):
    study = cfg["study"]
    assert run(["simulate", study, write_config(tmp_path, cfg)], capsys)[0] == 2


def test_simulate_bad_json_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert run(["simulate", "type1", str(p)], capsys)[0] == 2


def test_simulate_negative_hazard_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, {"study": "power", "alternative": "crossing", "theta_max": 2.0,
                                  "n_sim": 5, "n_perm": 5, "n_points": 2})
    code, _, err = run(["simulate", "power", cfg], capsys)
    assert code == 2 and "NegativeHazard" in err


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mdir", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "mdir" in proc.stdout
