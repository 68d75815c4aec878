#!/usr/bin/env python3
"""
Initial data tests: stream construction, splash bumps and the discrete
compatibility conditions.
"""

import numpy as np
import pytest

from errors import ChartTooNarrow, PointsNotOnBoundary
from initdata import (boundary_chart, build_stream, check_compatibility, enforce_compatibility, quintic_cutoff,
                      set_splash_velocity)


def mode_stream(dom, amplitude=0.05, mode=2):
    return lambda points: amplitude * np.cos(mode * np.angle(points - dom.center))


def test_quintic_cutoff():
    chi, dchi = quintic_cutoff(np.array([0.0, 1.0, 2.0]))
    assert np.allclose(chi, [1.0, 0.0, 0.0])
    assert np.allclose(dchi, 0.0)
    x = np.linspace(0.05, 0.95, 19)
    h = 1e-6
    fd = (quintic_cutoff(x + h)[0] - quintic_cutoff(x - h)[0]) / (2 * h)
    assert np.allclose(quintic_cutoff(x)[1], fd, atol=1e-8)


def test_constant_stream_is_at_rest(small_disk):
    iv = build_stream(small_disk, np.full(small_disk.angular, 0.7))
    assert np.max(np.abs(iv.v0)) < 1e-10
    assert np.allclose(iv.psi, 0.7)


def test_enforce_compatibility(medium_disk):
    iv = build_stream(medium_disk, mode_stream(medium_disk))
    v0 = enforce_compatibility(medium_disk, iv.v0)
    report = check_compatibility(medium_disk, v0)
    assert np.max(np.abs(v0)) > 1e-3
    print(f"after enforcement: {report.as_dict()}")
    assert report.details["boundary_a_divergence"] < 1e-8
    assert report.tangential_stress < 1e-8
    # only boundary nodes move
    interior = medium_disk.interior_index
    assert np.array_equal(v0[:, interior], iv.v0[:, interior])


def test_enforce_compatibility_with_data(small_disk):
    dom = small_disk
    v = np.stack([np.sin(dom.nodes.imag), np.cos(dom.nodes.real)])
    g0 = 0.1 * np.ones(dom.size)
    corrected = enforce_compatibility(dom, v, g0=g0)
    adiv = dom.a_divergence(corrected)[dom.boundary_index]
    assert np.allclose(adiv, 0.1, atol=1e-8)


def test_splash_velocity_pushes_the_targets(medium_disk):
    dom = medium_disk
    iv = build_stream(dom, np.zeros(dom.angular))
    chart = iv.builder.chart
    points = chart.point(chart.curve.alpha[[6, 18]])
    pushed = set_splash_velocity(iv, points, [-1.0, -1.0], 0.5)
    assert np.max(np.abs(pushed.v0)) > 0.05
    assert np.max(np.abs(pushed.v0)) < 50.0
    assert set_splash_velocity(iv, points, [-1.0, -1.0], 0.0) is iv


def test_splash_points_must_be_on_boundary(medium_disk):
    iv = build_stream(medium_disk, np.zeros(medium_disk.angular))
    with pytest.raises(PointsNotOnBoundary):
        set_splash_velocity(iv, [medium_disk.center, medium_disk.center + 0.1], [1.0, 1.0], 0.5)
    with pytest.raises(ValueError):
        set_splash_velocity(iv, [medium_disk.center], [1.0], 0.5)


def test_blend_width_must_fit_chart(small_disk):
    chart = boundary_chart(small_disk)
    with pytest.raises(ChartTooNarrow):
        build_stream(small_disk, np.zeros(small_disk.angular), chart, blend_width=2 * chart.half_width)


if __name__ == "__main__":
    import sys
    print("=== INITIAL DATA VALIDATION ===\n")
    code = pytest.main([__file__, "-q", "-s"])
    print("\n✅ All initial data checks passed!" if code == 0 else "\n❌ Some initial data checks failed")
    sys.exit(code)
