#!/usr/bin/env python3
"""
Command line tests: exit codes, output files and table formats.

main() writes splash_sim.log into the working directory, so every test
runs inside tmp_path.
"""

import json
import re

import pytest

from curve import circle_curve
from field_io import read_manifest, write_curve
from splash_sim import create_cli_parser, format_output, main

KINEMATIC = """
mode = kinematic
curve = disk_union
gap = 0.05
stream = zero
time_tol = 1e-8
"""


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_check_curve(workdir, capsys):
    path = write_curve(workdir / "circle.curve", circle_curve(64, 1.0))
    assert main(["check-curve", str(path)]) == 0
    out = capsys.readouterr().out
    assert "RegularChordArc" in out
    assert "chord_arc_constant" in out
    assert (workdir / "splash_sim.log").exists()


def test_check_curve_json(workdir, capsys):
    path = write_curve(workdir / "circle.curve", circle_curve(64, 1.0, 2.0))
    assert main(["--format", "json", "check-curve", str(path), "--tilde"]) == 0
    rows = json.loads(capsys.readouterr().out)
    values = {row["quantity"]: row["value"] for row in rows}
    assert values["samples"] == 64
    assert values["preimage_case"] == "CaseA_Simple"


def test_missing_curve_is_an_io_error(workdir):
    assert main(["check-curve", str(workdir / "missing.curve")]) == 3


def test_kinematic_simulation(workdir, capsys):
    scenario = workdir / "kinematic.cfg"
    scenario.write_text(KINEMATIC)
    out_dir = workdir / "run"
    assert main(["--out", str(out_dir), "simulate", str(scenario)]) == 0
    out = capsys.readouterr().out
    t_star = float(re.search(r"t\* = (\S+)", out).group(1))
    assert t_star == pytest.approx(0.05, abs=1e-6)
    assert "FINAL STATISTICS" in out
    settings = json.loads((out_dir / "scenario.json").read_text())
    assert settings["mode"] == "kinematic"
    assert settings["gap"] == 0.05
    assert read_manifest(out_dir / "manifest.csv") == []
    assert (out_dir / "timeline.svg").exists()


def test_scenario_errors_exit_with_2(workdir):
    bad = workdir / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert main(["--quiet", "simulate", str(bad)]) == 2

    never = workdir / "never.cfg"
    never.write_text(KINEMATIC + "kinematic_velocity = 1.0, 0.0\nhorizon = 0.02\n")
    assert main(["--quiet", "--out", str(workdir / "never"), "simulate", str(never)]) == 2
    # the partial timeline is still written
    assert (workdir / "never" / "timeline.csv").exists()


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        create_cli_parser().parse_args([])


def test_format_output():
    header = ("name", "value")
    rows = [("alpha", 0.5), ("beta", 12)]
    text = format_output(header, rows, "text")
    assert text.splitlines()[0].startswith("name")
    assert "alpha | 0.5" in text
    assert json.loads(format_output(header, rows, "json")) == [{"name": "alpha", "value": 0.5},
                                                              {"name": "beta", "value": 12}]
    assert format_output(header, rows, "csv").splitlines() == ["name,value", "alpha,0.5", "beta,12"]


if __name__ == "__main__":
    import sys
    print("=== COMMAND LINE VALIDATION ===\n")
    code = pytest.main([__file__, "-q", "-s"])
    print("\n✅ All command line checks passed!" if code == 0 else "\n❌ Some command line checks failed")
    sys.exit(code)
