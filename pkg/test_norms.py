#!/usr/bin/env python3
"""
Norm tests: Fourier multipliers against closed forms, exponent arithmetic
and norms of fields on the disk grid.
"""

import numpy as np
import pytest

from errors import OutOfRange
from norms import (DomainNorms, NormKind, NormSpec, inequality_probe, interpolation_exponents, linf_quarter,
                   parabolic_norm, reflect_in_time, spatial_sobolev_norm, temporal_sobolev_norm)


def sine_norm_reference(k, s):
    """||sin(k x)||_{H^s} on the 2 pi circle."""
    return np.sqrt(np.pi * (1.0 + k * k) ** s)


def test_constant_has_norm_of_the_box():
    for s in (0.0, 1.0, 2.25):
        assert spatial_sobolev_norm(np.ones(64), s) == pytest.approx(np.sqrt(2 * np.pi), rel=1e-12)


def test_sine_modes():
    x = 2 * np.pi * np.arange(128) / 128
    for k in (1, 3, 7):
        for s in (0.5, 1.0, 3.25):
            value = spatial_sobolev_norm(np.sin(k * x), s)
            assert value == pytest.approx(sine_norm_reference(k, s), rel=1e-10)


def test_two_dimensional_box():
    n = 32
    x = 2 * np.pi * np.arange(n) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    # sin x sin y carries |xi|^2 = 2 on four modes
    value = spatial_sobolev_norm(np.sin(X) * np.sin(Y), 1.0)
    assert value == pytest.approx(np.pi * np.sqrt(3.0), rel=1e-10)


def test_temporal_norm_of_constant():
    for c, T in ((1.0, 1.0), (2.5, 0.3)):
        assert temporal_sobolev_norm(np.full(11, c), 1.5, T) == pytest.approx(c * np.sqrt(T), rel=1e-12)


def test_reflection():
    history = np.arange(5.0)
    ext = reflect_in_time(history)
    assert len(ext) == 2 * 5 - 2
    assert np.array_equal(ext, [0, 1, 2, 3, 4, 3, 2, 1])
    assert np.array_equal(reflect_in_time(np.array([7.0])), [7.0])


def test_norm_spec_validation():
    spec = NormSpec(NormKind.F, 2.25)
    assert spec.gamma == pytest.approx(1.2)
    with pytest.raises(OutOfRange):
        NormSpec(NormKind.F, 2.25, gamma=1.5)
    with pytest.raises(OutOfRange):
        NormSpec(NormKind.H_HT, 2.25, T=0.0)


def test_linf_quarter():
    history = np.ones(3)
    assert linf_quarter(history, np.array([0.0, 0.25, 1.0])) == pytest.approx(np.sqrt(2.0))
    assert linf_quarter(history[:1], np.array([0.0])) == 0.0


def test_parabolic_norm_splits():
    x = 2 * np.pi * np.arange(32) / 32
    history = np.array([np.sin(2 * x)] * 9)
    T = 0.5
    spatial = parabolic_norm(history, NormSpec(NormKind.SOBOLEV_SPATIAL, 2.0, T=T))
    temporal = parabolic_norm(history, NormSpec(NormKind.SOBOLEV_TEMPORAL, 1.0, T=T))
    both = parabolic_norm(history, NormSpec(NormKind.H_HT, 2.0, T=T))
    assert both == pytest.approx(spatial + temporal, rel=1e-12)
    # constant in time: L2 in time of the H^s norm
    assert spatial == pytest.approx(np.sqrt(T) * sine_norm_reference(2, 2.0), rel=1e-10)
    assert parabolic_norm(np.zeros((4, 16)), NormSpec(NormKind.F, 2.25)) == 0.0


def test_interpolation_exponents():
    for s in np.linspace(2.0, 2.5, 52)[1:-1]:
        checks = interpolation_exponents(s)
        assert len(checks) == 2
        for check in checks:
            failed = [name for name, ok in check.flags.items() if not ok]
            assert check.passed, f"s={s:.4f} case {check.case}: {failed}"


def test_interpolation_exponents_known_values():
    case2 = interpolation_exponents(2.2)[0]
    assert case2.q == pytest.approx(1.25)
    assert case2.p == pytest.approx(5.0)
    assert case2.lam == pytest.approx(0.64)
    for s in (2.0, 2.5, 1.0):
        with pytest.raises(OutOfRange):
            interpolation_exponents(s)


def test_inequality_probes():
    x = 2 * np.pi * np.arange(64) / 64
    family = [(f"k={k}", np.sin(k * x), np.cos(k * x)) for k in (1, 2, 4, 8)]
    table = inequality_probe("product", family)
    assert len(table.rows) == 4
    assert all(np.isfinite(row[3]) and row[3] > 0 for row in table.rows)

    t = np.linspace(0.0, 1.0, 33)
    table = inequality_probe("time_integral", [(f"w={w}", np.cos(w * t), None) for w in (1.0, 3.0)])
    print(f"time integral ratios: {[round(r[3], 4) for r in table.rows]}")
    assert table.max_ratio > 0
    with pytest.raises(OutOfRange):
        inequality_probe("bogus", family)


def test_domain_norms(small_disk):
    norms = DomainNorms(small_disk, n_box=32)
    zero_v = np.zeros((3, 2, small_disk.size))
    assert norms.velocity(zero_v, 0.1) == 0.0
    assert norms.pressure(np.zeros((3, small_disk.size)), 0.1).total == 0.0

    x, y = small_disk.nodes.real, small_disk.nodes.imag
    v = np.array([np.stack([np.sin(y), np.cos(x)]) * (1 + t) for t in (0.0, 0.05, 0.1)])
    once = norms.velocity(v, 0.1)
    assert once > 0
    assert norms.velocity(2.0 * v, 0.1) == pytest.approx(2.0 * once, rel=1e-10)


def test_norm_report(small_disk):
    norms = DomainNorms(small_disk, n_box=32)
    x, y = small_disk.nodes.real, small_disk.nodes.imag
    v = np.array([np.stack([np.sin(y), np.cos(x)])] * 3)
    q = np.array([x * y] * 3)
    report = norms.report(v, q, 0.1)
    names = [name for name, _ in report.rows()]
    assert names == sorted(names)
    assert "pressure_total" in names
    values = dict(report.rows())
    assert values["pressure_total"] == pytest.approx(
        values["pressure_sup_grad"] + values["pressure_grad_H_ht"] + values["pressure_trace_H_ht"])


if __name__ == "__main__":
    import sys
    print("=== NORM VALIDATION ===\n")
    for s in (2.05, 2.25, 2.45):
        for check in interpolation_exponents(s):
            print(f"s={s:.2f} case {check.case}: p={check.p:.4f} q={check.q:.4f} "
                  f"lambda={check.lam:.4f} {'ok' if check.passed else 'FAIL'}")
    code = pytest.main([__file__, "-q", "-s"])
    print("\n✅ All norm checks passed!" if code == 0 else "\n❌ Some norm checks failed")
    sys.exit(code)
