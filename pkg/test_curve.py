#!/usr/bin/env python3
"""
Curve geometry tests: chord-arc constants, self-crossings, splash and
preimage classification, tubular charts.
"""

import numpy as np
import pytest

from curve import (ClosedCurve, PreimageCaseKind, SplashStatus, TubularChart, chord_arc_constant,
                   circle_curve, classify_preimage, classify_splash, crossing_tolerance, disk_union_curve,
                   ellipse_curve, geometry, limacon_curve, lobe_tips, lobes_curve, polygon_curve,
                   polyline_crossings, segments_cross, self_intersections)
from errors import CurveHitsSingularity, DegenerateTangent, OutsideChart, TooFewSamples


def circle_chord_arc_reference(radius):
    """Chord over parameter distance 2r sin(d/2) / d is smallest at d = pi."""
    return 2.0 * radius / np.pi


def test_chord_arc_of_circle():
    for radius in (0.5, 1.0, 3.0):
        value = chord_arc_constant(circle_curve(64, radius))
        assert value == pytest.approx(circle_chord_arc_reference(radius), rel=1e-12)


def test_chord_arc_is_positive_and_rigid_invariant():
    ellipse = ellipse_curve(96, 2.0, 1.0, center=2.5)
    value = chord_arc_constant(ellipse)
    # the minor axis endpoints sit pi apart in parameter
    assert 0.0 < value <= 2.0 / np.pi + 1e-12
    moved = ClosedCurve(np.exp(0.7j) * ellipse.points + (1.0 - 3.0j))
    assert chord_arc_constant(moved) == pytest.approx(value, rel=1e-12)
    assert chord_arc_constant(ClosedCurve(3.0 * ellipse.points)) == pytest.approx(3.0 * value, rel=1e-12)
    assert chord_arc_constant(lobes_curve(128, 0.3)) > 0.0


def test_sample_validation():
    with pytest.raises(TooFewSamples):
        circle_curve(8)
    points = circle_curve(32).points.copy()
    points[5] = points[4]
    with pytest.raises(DegenerateTangent):
        ClosedCurve(points)


def test_geometry_of_circle(unit_circle):
    geo = geometry(unit_circle)
    assert geo.orientation == 1
    assert np.allclose(geo.curvature, 1.0, atol=1e-10)
    assert np.allclose(geo.normal, unit_circle.points, atol=1e-10)
    # clockwise copy keeps the outward normal
    reversed_geo = geometry(ClosedCurve(unit_circle.points[::-1]))
    assert reversed_geo.orientation == -1
    assert np.allclose(reversed_geo.normal, unit_circle.points[::-1], atol=1e-10)


def test_self_intersections():
    assert self_intersections(ellipse_curve(128)) == []
    crossings = self_intersections(limacon_curve(128, 1.0, 2.0))
    print(f"Limacon crossings: {[(c.first, c.second) for c in crossings]}")
    assert len(crossings) >= 1
    # the inner loop of r = 1 + 2 cos(theta) passes through the pole
    assert min(abs(c.point) for c in crossings) < 0.05


def test_segments_cross_is_strict():
    assert segments_cross(0j, 2 + 2j, 2j, 2 + 0j, 1e-12) is not None
    # shared endpoint is not a transversal crossing
    assert segments_cross(0j, 1 + 0j, 1 + 0j, 1 + 1j, 1e-12) is None
    assert segments_cross(0j, 1 + 0j, 2 + 0j, 3 + 0j, 1e-12) is None


def test_sweep_finds_every_crossing(rng):
    points = rng.uniform(0, 1, 80) + 1j * rng.uniform(0, 1, 80)
    n = len(points)
    ends = np.roll(points, -1)
    eps = crossing_tolerance(points)
    expected = {(i, j) for i in range(n) for j in range(i + 2, n)
                if (j - i) % n not in (1, n - 1)
                and segments_cross(points[i], ends[i], points[j], ends[j], eps) is not None}
    found = polyline_crossings(points)
    assert len(expected) > 50
    assert [(cr.first, cr.second) for cr in found] == sorted(expected)


def test_splash_classification():
    verdict = classify_splash(circle_curve(64), pair_tol=1e-6)
    assert verdict.status is SplashStatus.REGULAR_CHORD_ARC
    assert verdict.touch_pairs == []

    # squared lobes at gap 0 touch once at -1
    squared = lobes_curve(128, 0.0).points ** 2
    verdict = classify_splash(ClosedCurve(squared), pair_tol=1e-6)
    print(f"Squared lobes: {verdict.status.value}, pairs {verdict.touch_pairs}")
    assert verdict.status is SplashStatus.SPLASH_CURVE
    assert len(verdict.touch_pairs) == 1


def test_lobe_tips_are_samples():
    for gap in (0.0, 0.3):
        curve = lobes_curve(128, gap)
        upper, lower = lobe_tips(gap)
        assert np.min(np.abs(curve.points - upper)) < 1e-12
        assert np.min(np.abs(curve.points - lower)) < 1e-12


def test_disk_union_leftmost_samples():
    curve = disk_union_curve(128)
    assert curve.points.real.min() == pytest.approx(0.05, abs=1e-12)
    assert np.sum(np.abs(curve.points.real - 0.05) < 1e-12) == 2
    with pytest.raises(ValueError):
        disk_union_curve(64, radius=0.5)


def test_preimage_cases(lobes):
    simple = classify_preimage(lobes, with_chord_arc=True)
    assert simple.case is PreimageCaseKind.SIMPLE
    assert simple.approach > 0.1
    assert simple.chord_arc > 0

    touching = classify_preimage(lobes_curve(128, 0.0))
    assert touching.case is PreimageCaseKind.TOUCHING
    assert len(touching.witnesses) == 1

    crossing = classify_preimage(lobes_curve(128, -0.1))
    assert crossing.case is PreimageCaseKind.CROSSING
    assert crossing.approach == 0.0
    assert crossing.case.value == "CaseC_Crossing"


def test_preimage_through_singular_point():
    square = polygon_curve([0j, 1 + 0j, 1 + 1j, 1j], per_edge=5)
    with pytest.raises(CurveHitsSingularity):
        classify_preimage(square)


def test_tubular_chart_locate(unit_circle):
    chart = TubularChart.fitted(unit_circle, fraction=0.5)
    assert chart.half_width == pytest.approx(0.5, rel=1e-8)
    assert chart.length == pytest.approx(2 * np.pi, rel=1e-10)
    theta = np.linspace(0.1, 6.0, 13)
    for depth in (0.2, -0.3):
        alpha, lam = chart.locate((1.0 + depth) * np.exp(1j * theta))
        assert np.allclose(np.exp(1j * alpha), np.exp(1j * theta), atol=1e-9)
        assert np.allclose(lam, depth, atol=1e-9)


def test_tubular_chart_evaluate(unit_circle):
    chart = TubularChart(unit_circle, half_width=0.4)
    x, jac = chart.evaluate_alpha(np.array([0.0]), np.array([0.25]))
    assert x[0] == pytest.approx(1.25, abs=1e-12)
    assert jac[0] == pytest.approx(1.25, abs=1e-10)
    # inside chart: lam > 0 points inward
    inside = TubularChart(unit_circle, half_width=0.4, sign=-1)
    x, _ = inside.evaluate_alpha(np.array([0.0]), np.array([0.25]))
    assert x[0] == pytest.approx(0.75, abs=1e-12)
    with pytest.raises(OutsideChart):
        chart.evaluate_alpha(np.array([0.0]), np.array([0.5]))
    with pytest.raises(OutsideChart):
        TubularChart(unit_circle, half_width=1.5)


if __name__ == "__main__":
    import sys
    print("=== CURVE GEOMETRY VALIDATION ===\n")
    code = pytest.main([__file__, "-q", "-s"])
    print("\n✅ All curve checks passed!" if code == 0 else "\n❌ Some curve checks failed")
    sys.exit(code)
