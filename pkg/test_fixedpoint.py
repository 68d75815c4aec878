#!/usr/bin/env python3
"""
Picard iteration tests: flow-map algebra, the rest state and a short
contracting run.
"""

import numpy as np
import pytest

from config import PicardSettings
from conformal import ScaledMap
from elliptic import disk_domain
from errors import FoldingDetected, ResolutionLost
from fixedpoint import (FlowMap, build_corrector, flow_jacobian, flow_update, grad_j, inverse_jacobian,
                        lift_profile, picard_run)
from initdata import build_stream, enforce_compatibility
from stokes_linear import TimeGrid


def per_node(matrix, n=3):
    return np.repeat(np.asarray(matrix, dtype=float)[:, :, None], n, axis=2)


def test_lift_profile():
    value, rate = lift_profile(0.0)
    assert value == 0.0 and rate == 1.0
    t = np.linspace(0.0, 2.0, 21)
    h = 1e-6
    fd = (lift_profile(t + h)[0] - lift_profile(t - h)[0]) / (2 * h)
    assert np.allclose(lift_profile(t)[1], fd, atol=1e-8)


def test_inverse_jacobian():
    F = per_node([[2.0, 1.0], [0.5, 3.0]])
    zeta = inverse_jacobian(F)
    product = np.einsum("ijn,jkn->ikn", zeta, F)
    assert np.allclose(product, per_node(np.eye(2)), atol=1e-14)


def test_folding_and_resolution_guards():
    with pytest.raises(FoldingDetected):
        inverse_jacobian(per_node([[1.0, 0.0], [0.0, -0.5]]))
    with pytest.raises(FoldingDetected):
        inverse_jacobian(per_node([[1.0, 2.0], [0.5, 1.0]]))
    with pytest.raises(ResolutionLost):
        inverse_jacobian(per_node([[1.0, 0.0], [0.0, 1e-9]]))


def test_grad_j_is_cofactor():
    a, b, c, d = 1.5, -0.25, 0.75, 2.0
    cof = grad_j(per_node([[a, b], [c, d]], 1))[:, :, 0]
    assert np.allclose(cof, [[d, -c], [-b, a]])
    assert np.allclose(grad_j(per_node(np.eye(2), 1))[:, :, 0], np.eye(2))


def test_identity_flow_has_unit_jacobian(small_disk):
    F = flow_jacobian(small_disk, small_disk.nodes)
    assert np.allclose(F, per_node(np.eye(2), small_disk.size), atol=1e-10)


def test_flow_update_with_flat_frames():
    dom = disk_domain(radial=6, angular=16, conformal_map=ScaledMap(1.0))
    grid = TimeGrid.from_steps(0.1, 4)
    velocity = np.zeros((grid.steps + 1, 2, dom.size))
    velocity[:, 0] = 0.3
    velocity[:, 1] = -0.2
    flow = flow_update(dom, grid, FlowMap.identity(dom, grid.times), velocity)
    expected = dom.nodes[None] + grid.times[:, None] * (0.3 - 0.2j)
    assert np.allclose(flow.X, expected, atol=1e-14)
    assert np.allclose(flow.displacement(dom)[-1, 0], 0.03)


def test_rest_is_a_fixed_point(small_disk):
    grid = TimeGrid.from_steps(0.01, 2)
    result = picard_run(small_disk, grid, np.zeros((2, small_disk.size)))
    assert result.converged
    assert len(result.history) == 1
    assert result.history[0].combined == 0.0
    assert np.all(result.velocity(grid.times) == 0.0)
    assert result.contraction_factor() == 0.0
    assert result.geometric_tail()
    assert result.tail_bound() == float("inf")


def test_corrector_at_rest(small_disk):
    corr = build_corrector(small_disk, np.zeros((2, small_disk.size)))
    assert np.all(corr.rate == 0.0)
    assert np.allclose(corr.zeta(0.3), per_node(np.eye(2), small_disk.size))


def test_short_run_contracts(small_disk):
    dom = small_disk
    iv = build_stream(dom, lambda p: 0.05 * np.cos(2 * np.angle(p - dom.center)))
    v0 = enforce_compatibility(dom, iv.v0)
    grid = TimeGrid.from_steps(0.004, 2)
    result = picard_run(dom, grid, v0, PicardSettings(max_iter=30, tol=1e-6))
    for record in result.history:
        print(f"iteration {record.iteration}: {record.combined:.3e} (factor {record.factor:.3f})")
    assert result.converged
    assert result.geometric_tail()
    assert result.pressure().shape == (grid.steps + 1, dom.size)


def short_run(dom, T, steps=2):
    iv = build_stream(dom, lambda p: 0.05 * np.cos(2 * np.angle(p - dom.center)))
    v0 = enforce_compatibility(dom, iv.v0)
    return picard_run(dom, TimeGrid.from_steps(T, steps), v0, PicardSettings(max_iter=30, tol=1e-6))


def test_contraction_does_not_grow_when_horizon_halves(small_disk):
    full = short_run(small_disk, 0.004)
    half = short_run(small_disk, 0.002)
    print(f"contraction factor T=0.004: {full.contraction_factor():.3f} | T=0.002: {half.contraction_factor():.3f}")
    assert full.converged and half.converged
    assert half.contraction_factor() <= 1.1 * full.contraction_factor()


if __name__ == "__main__":
    import sys
    print("=== PICARD ITERATION VALIDATION ===\n")
    code = pytest.main([__file__, "-q", "-s"])
    print("\n✅ All Picard checks passed!" if code == 0 else "\n❌ Some Picard checks failed")
    sys.exit(code)
