import csv
import io
import json
import subprocess
import sys

import pytest

from termsim.cli import main, parse_engine, parse_synthetic
from termsim.exceptions import ConfigurationError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_gen_is_deterministic(tmp_path, capsys):
    for d in ("a", "b"):
        (tmp_path / d).mkdir()
        assert run(capsys, "gen", "--synthetic", "c=20,n=9,density=0.3", "--seed", "4",
                   "-o", str(tmp_path / d / "w.json"))[0] == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == ["w.0.act.trace", "w.0.wgt.trace", "w.json"]
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_simulate_from_generated_workload(tmp_path, capsys):
    path = tmp_path / "w.json"
    run(capsys, "gen", "--network", "vggm", "-o", str(path))
    code, out, _ = run(capsys, "simulate", "--engine", "lac:128", "--engine", "lac:1k",
                       "--engine", "base:2k", "--workload", str(path))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert {r["config"] for r in rows} == {"LAC_128", "LAC_1K", "BASE_2K"}
    assert len(rows) == 3 * 6
    base_total = next(r for r in rows if r["config"] == "BASE_2K" and r["layer"] == "total")
    assert base_total["speedup_vs_base"] == "1.000000"
    assert len({r["checksum"] for r in rows if r["layer"] == "total"}) == 1


def test_simulate_json_totals_and_plot_data(tmp_path, capsys):
    report, plot = tmp_path / "r.json", tmp_path / "p.csv"
    code, out, _ = run(capsys, "simulate", "--engine", "lm", "--engine", "lac:256:positional",
                       "--synthetic", "n=20,pa=6,pw=5", "--format", "json", "--totals-only",
                       "--potential", "-o", str(report), "--plot-data", str(plot))
    assert code == 0 and out == ""
    rows = json.loads(report.read_text())
    assert [r["config"] for r in rows] == ["LM_128", "LAC_256_positional"]
    assert all(r["layer"] == "total" and "potential_speedup" in r for r in rows)
    assert rows[1]["speedup_vs_base"] <= rows[1]["potential_speedup"]
    assert plot.read_text().splitlines()[0] == "layer,config,speedup_vs_base"


def test_analyze(capsys):
    code, out, _ = run(capsys, "analyze", "--policy", "A", "--policy", "at+wt",
                       "--synthetic", "h=1,k=1,density=0.5,seed=2")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [(r["layer"], r["policy"]) for r in rows] == [
        ("layer1", "A"), ("layer1", "At+Wt"), ("geomean", "A"), ("geomean", "At+Wt")]
    assert rows[0]["speedup"] == "2.000000"
    code, out, _ = run(capsys, "analyze", "--network", "alexnet", "--format", "json")
    assert len(json.loads(out)) == 8 * 6


def test_unknown_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--engine", "lac:128", "--bogus"])
    assert exc.value.code == 2
    assert "unrecognized arguments: --bogus" in capsys.readouterr().err


@pytest.mark.parametrize("argv,message", [
    (["simulate", "--engine", "lac:128", "--workload", "missing.json"],
     "error in workload: workload file not found"),
    (["simulate", "--engine", "base:1k"], "BASE is only modelled as base:2k"),
    (["simulate", "--engine", "lac:100"], "multiple of 16"),
    (["simulate", "--engine", "lac"], "LAC needs a wire count"),
    (["analyze", "--synthetic", "q=3"], "bad synthetic parameter"),
    (["analyze", "--policy", "Aw"], "unknown policy"),
    (["analyze", "--synthetic", "x=2,h=3"], "larger than"),
    (["gen", "--synthetic", "", "--network", "alexnet", "-o", "x.json"], "only one of"),
])
def test_errors(argv, message, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, _, err = run(capsys, *argv)
    assert code == 1
    assert message in err and err.startswith(f"termsim {argv[0]}: error in ")


def test_parse_helpers():
    assert parse_engine("LAC:512").name == "LAC_512"
    assert parse_engine("lm:256").filters == 16
    assert parse_engine("base:2k").name == "BASE_2K"
    with pytest.raises(ConfigurationError):
        parse_engine("gpu:1")
    assert parse_synthetic("c=3, density=0.25,dist=laplace")["c"] == 3
    with pytest.raises(ConfigurationError):
        parse_synthetic("c=three")


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "termsim", "--version"],
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip().startswith("termsim ")
