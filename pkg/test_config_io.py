#!/usr/bin/env python3
"""
Configuration layering and file format tests.
"""

import numpy as np
import pytest

from config import (ScenarioConfig, as_dict, build_config, layer, load_defaults, load_scenario, logging_settings,
                    parse_complex)
from curve import ClosedCurve, circle_curve
from elliptic import disk_domain
from errors import ConfigError, DomainMismatch, IoFailure
from field_io import (SolutionWriter, load_domain, load_history, read_curve, read_manifest, read_snapshot,
                      read_stream_samples, write_curve, write_domain, write_snapshot)


def scenario_file(tmp_path, text):
    path = tmp_path / "scenario.ini"
    path.write_text(text)
    return path


def test_packaged_defaults_match_dataclass():
    assert load_scenario() == ScenarioConfig()


def test_scenario_layering(tmp_path):
    cfg = load_scenario(scenario_file(tmp_path, "gap = 0.1\nradial = 8\naim = 0, -1\n"))
    assert cfg.gap == 0.1
    assert cfg.solver.radial == 8
    assert cfg.aim == -1j
    # untouched sections keep their defaults
    assert cfg.picard == ScenarioConfig().picard


def test_overrides_win(tmp_path):
    cfg = load_scenario(scenario_file(tmp_path, "gap = 0.1\n"), overrides={"gap": 0.2, "epsilon": None})
    assert cfg.gap == 0.2
    assert cfg.epsilon == 0.0
    with pytest.raises(ConfigError):
        build_config(load_defaults(), {"radial": 8})


@pytest.mark.parametrize("text", [
    "colour = blue\n",
    "window = 0.015\ndt = 0.002\n",
    "direction = 1, 1\n",
    "mode = dynamic\n",
    "radial = eight\n",
    "stream = file\n",
])
def test_invalid_scenarios(tmp_path, text):
    with pytest.raises(ConfigError):
        load_scenario(scenario_file(tmp_path, text))


def test_missing_scenario_file(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "nope.ini")


def test_parse_complex():
    assert parse_complex("1.5, -2") == 1.5 - 2j
    assert parse_complex("'0.25'") == 0.25
    assert parse_complex("1 - 2j") == 1 - 2j
    with pytest.raises(ConfigError):
        parse_complex("abc")


def test_as_dict_and_logging_settings():
    values = as_dict(ScenarioConfig())
    assert values["direction"] == [1.0, 0.0]
    assert values["radial"] == 16
    assert values["touch_tol"] is None
    assert logging_settings(load_defaults()) == ("INFO", "splash_sim.log")
    parser = layer(load_defaults(), "log_level = debug\n")
    assert logging_settings(parser)[0] == "DEBUG"


def test_curve_file_round_trip(tmp_path):
    curve = ClosedCurve(circle_curve(48, 0.8, 2.0).points * (1 + 0.1j), period=3.0)
    path = write_curve(tmp_path / "c.curve", curve)
    back = read_curve(path)
    assert np.array_equal(back.points, curve.points)
    assert back.period == curve.period


def test_bad_curve_files(tmp_path):
    bad_header = tmp_path / "bad.curve"
    bad_header.write_text("shape v2 N=3\n0 1 0\n1 0 1\n2 -1 0\n")
    with pytest.raises(IoFailure):
        read_curve(bad_header)
    short = tmp_path / "short.curve"
    short.write_text("curve v1 N=4 period=1\n0 1 0\n0.5 -1 0\n")
    with pytest.raises(IoFailure):
        read_curve(short)
    with pytest.raises(IoFailure):
        read_curve(tmp_path / "missing.curve")


def test_stream_samples(tmp_path):
    curve = circle_curve(64, 1.0)
    path = write_curve(tmp_path / "psi.curve", curve)
    psi = read_stream_samples(path, curve.alpha)
    assert np.allclose(psi, curve.points.imag, atol=1e-15)
    # midpoints interpolate linearly, across the seam too
    mid = read_stream_samples(path, curve.alpha + 0.5 * (curve.alpha[1] - curve.alpha[0]))
    expected = 0.5 * (curve.points.imag + np.roll(curve.points.imag, -1))
    assert np.allclose(mid, expected, atol=1e-12)


def test_snapshot_is_tied_to_its_domain(tmp_path, small_disk):
    v = np.stack([small_disk.nodes.real, small_disk.nodes.imag])
    q = np.arange(small_disk.size, dtype=float)
    path = write_snapshot(tmp_path / "s.txt", small_disk, 0.125, v, q)
    snap = read_snapshot(path, small_disk)
    assert snap.time == 0.125
    assert np.array_equal(snap.v, v) and np.array_equal(snap.q, q)
    other = disk_domain(radial=6, angular=16)
    with pytest.raises(DomainMismatch):
        read_snapshot(path, other)
    with pytest.raises(IoFailure):
        write_snapshot(tmp_path / "t.txt", other, 0.0, v, q)


def test_domain_sidecar(tmp_path, small_disk):
    path = write_domain(tmp_path, small_disk, "domain_0")
    assert load_domain(path).checksum == small_disk.checksum


def test_solution_writer(tmp_path, small_disk):
    writer = SolutionWriter(tmp_path / "run", every=1)
    zero_v = np.zeros((2, small_disk.size))
    zero_q = np.zeros(small_disk.size)
    writer.add(small_disk, 0, 0.0, zero_v, zero_q, case="CaseA_Simple", approach=0.4)
    writer.add(small_disk, 0, 0.002, zero_v, zero_q, case="CaseA_Simple", approach=0.39)
    manifest = writer.flush()
    rows = read_manifest(manifest)
    assert [r["domain"] for r in rows] == ["domain_0.json", "domain_0.json"]
    groups = load_history(manifest)
    assert len(groups) == 1
    dom, snaps = groups[0]
    assert dom.checksum == small_disk.checksum
    assert [s.time for s in snaps] == [0.0, 0.002]


def test_writer_thins_snapshots(tmp_path, small_disk):
    writer = SolutionWriter(tmp_path, every=3)
    zero_v = np.zeros((2, small_disk.size))
    zero_q = np.zeros(small_disk.size)
    for k in range(7):
        writer.add(small_disk, 0, 0.001 * k, zero_v, zero_q, force=(k == 6))
    assert [row["time"] for row in writer.rows] == pytest.approx([0.0, 0.003, 0.006])


if __name__ == "__main__":
    import sys
    print("=== CONFIGURATION AND FILE FORMAT VALIDATION ===\n")
    code = pytest.main([__file__, "-q", "-s"])
    print("\n✅ All configuration checks passed!" if code == 0 else "\n❌ Some configuration checks failed")
    sys.exit(code)
