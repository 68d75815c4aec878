#!/usr/bin/env python3
"""
Discrete operator tests on the boundary-fitted disk grid.
"""

import numpy as np
import pytest

from curve import circle_curve
from conformal import ScaledMap
from elliptic import DiscreteDomain, FactorCache, Factorization, disk_domain
from errors import ConfigError, SolverDiverged


def poisson_reference(x, y):
    """u = sin x cos y + x y^2 and its Laplacian."""
    return np.sin(x) * np.cos(y) + x * y ** 2, -2 * np.sin(x) * np.cos(y) + 2 * x


def poisson_error(radial, angular):
    dom = disk_domain(radial=radial, angular=angular)
    exact, lap = poisson_reference(dom.nodes.real, dom.nodes.imag)
    u = dom.solve_weighted_poisson(dom.Q2 * lap, exact[dom.boundary_index])
    return float(np.max(np.abs(u - exact)))


def test_grid_layout(small_disk):
    dom = small_disk
    assert dom.size == 8 * 32
    assert len(dom.boundary_index) == 32
    assert np.allclose(np.abs(dom.boundary_points - 2.0), 0.8, atol=1e-6)
    assert np.all(dom.weights > 0)
    assert dom.perimeter == pytest.approx(2 * np.pi * 0.8, rel=1e-2)


def test_derivatives_exact_on_linear_functions(small_disk):
    dom = small_disk
    x, y = dom.nodes.real, dom.nodes.imag
    assert np.allclose(dom.Dx @ x, 1.0, atol=1e-10)
    assert np.allclose(dom.Dy @ x, 0.0, atol=1e-10)
    assert np.allclose(dom.Dx @ y, 0.0, atol=1e-10)
    assert np.allclose(dom.Dy @ y, 1.0, atol=1e-10)


def test_laplacian_annihilates_constants(small_disk):
    assert np.max(np.abs(small_disk.L @ np.ones(small_disk.size))) < 1e-8


def test_weighted_poisson_converges():
    coarse, fine = poisson_error(8, 32), poisson_error(16, 64)
    print(f"Poisson max error: {coarse:.3e} -> {fine:.3e}")
    assert fine < coarse
    assert fine < 5e-2


def test_normal_points_outward(small_disk):
    dom = small_disk
    radial = (dom.boundary_points - dom.center) / np.abs(dom.boundary_points - dom.center)
    n = dom.normal_tilde[0] + 1j * dom.normal_tilde[1]
    assert np.allclose(n, radial, atol=1e-2)


def test_projection_is_idempotent(medium_disk):
    dom = medium_disk
    x, y = dom.nodes.real, dom.nodes.imag
    v = np.stack([np.sin(y) + x, np.cos(x) * y])
    once = dom.project_R(v)
    twice = dom.project_R(once)
    assert np.max(np.abs(twice - once)) < 1e-8 * np.max(np.abs(once))
    before = np.sqrt(np.sum(dom.weights * dom.a_divergence(v) ** 2))
    after = np.sqrt(np.sum(dom.weights * dom.a_divergence(once) ** 2))
    assert after <= before


def test_corrector_pressure_of_rest(small_disk):
    q = small_disk.corrector_pressure(np.zeros((2, small_disk.size)))
    assert np.all(q == 0.0)


def test_inner_product(small_disk):
    dom = small_disk
    ones = np.ones(dom.size)
    assert dom.inner(ones, ones) == pytest.approx(dom.phys_weights.sum())
    v = np.stack([ones, 2 * ones])
    assert dom.norm(v) == pytest.approx(np.sqrt(5 * dom.phys_weights.sum()))


def test_checksum_identifies_the_domain():
    a = disk_domain(radial=6, angular=16)
    b = disk_domain(radial=6, angular=16)
    c = disk_domain(radial=6, angular=16, frame_offset=1e-3)
    assert a.checksum == b.checksum
    assert a.checksum != c.checksum
    assert len(a.checksum) == 64


def test_factor_cache_lru():
    cache = FactorCache(max_size=2)
    cache.put("a", 1)
    cache.put("b", 2)
    assert cache.get("a") == 1
    cache.put("c", 3)
    assert cache.get("b") is None
    assert cache.get("a") == 1 and cache.get("c") == 3
    assert cache.hits == 3
    assert cache.size() == 2
    cache.clear()
    assert cache.size() == 0
    disabled = FactorCache(max_size=0)
    disabled.put("a", 1)
    assert disabled.get("a") is None


def test_solves_are_cached(small_disk):
    rhs = np.zeros(small_disk.size)
    bc = np.ones(len(small_disk.boundary_index))
    first = small_disk.solve_weighted_poisson(rhs, bc)
    hits = small_disk.cache.hits
    second = small_disk.solve_weighted_poisson(rhs, bc)
    assert small_disk.cache.hits == hits + 1
    assert np.array_equal(first, second)


def test_invalid_inputs(small_disk):
    with pytest.raises(ConfigError):
        DiscreteDomain(circle_curve(64, 0.8, 2.0), radial=3)
    with pytest.raises(ConfigError):
        DiscreteDomain(circle_curve(64, 0.8, 2.0), angular=4)
    with pytest.raises(SolverDiverged):
        small_disk.solve_weighted_poisson(np.full(small_disk.size, np.nan), np.zeros(32))


def test_factorization_is_reused(small_disk):
    dom = small_disk
    build = dom._poisson_matrix
    first = dom.factor("reuse-check", build)
    second = dom.factor("reuse-check", build)
    assert first is second
    assert isinstance(first, Factorization)
    assert first.matrix.shape == (dom.size, dom.size)
    rhs = np.cos(dom.nodes.real)
    hits = dom.cache.hits
    once = dom.solve("reuse-check", build, rhs)
    again = dom.solve("reuse-check", build, rhs)
    assert dom.cache.hits == hits + 2
    assert np.array_equal(once, again)
    assert np.allclose(first.matrix @ once, rhs, atol=1e-10)


def dirichlet_zero_potential(dom):
    """phi = (0.64 - |z - 2|^2)(1 + x), set to zero on the boundary ring."""
    z = dom.nodes
    phi = (0.64 - np.abs(z - 2.0) ** 2) * (1.0 + z.real)
    phi[dom.boundary_index] = 0.0
    return phi


def test_projection_removes_boundary_zero_gradients(medium_disk):
    dom = medium_disk
    v = dom.a_transpose_gradient(dirichlet_zero_potential(dom))
    assert np.max(np.abs(dom.project_R(v))) < 1e-8 * np.max(np.abs(v))


def test_projection_clears_interior_divergence(medium_disk):
    dom = medium_disk
    x, y = dom.nodes.real, dom.nodes.imag
    v = np.stack([np.sin(y) + x, np.cos(x) * y])
    once = dom.project_R(v)
    scale = np.max(np.abs(dom.a_divergence(v)))
    assert np.max(np.abs(dom.a_divergence(once)[dom.interior_index])) < 1e-8 * scale


def projected_divergence(radial, angular):
    dom = disk_domain(radial=radial, angular=angular)
    x, y = dom.nodes.real, dom.nodes.imag
    once = dom.project_R(np.stack([np.sin(y) + x, np.cos(x) * y]))
    return 1.0 / (radial - 0.5), np.sqrt(np.sum(dom.weights * dom.a_divergence(once) ** 2))


def test_projection_divergence_order():
    h, err = np.array([projected_divergence(r, a) for r, a in ((8, 32), (16, 64), (32, 128))]).T
    order = np.polyfit(np.log(h), np.log(err), 1)[0]
    print(f"weighted divergence after R: {err} | order {order:.2f}")
    assert order >= 1.8


def test_discrete_maximum_principle(small_disk):
    dom = small_disk
    x = dom.nodes.real
    bc = (dom.boundary_points.real - 1.2) ** 2
    psi = dom.solve_weighted_poisson(-dom.Q2 * (1.0 + x ** 2), bc)
    assert np.min(psi) >= min(bc.min(), 0.0) - 1e-10
    # the same data with a zero source is bounded by the boundary values
    harmonic = dom.solve_weighted_poisson(np.zeros(dom.size), bc)
    assert bc.min() - 1e-10 <= harmonic.min() and harmonic.max() <= bc.max() + 1e-10


def test_boundary_stress_examples(small_disk):
    dom = small_disk
    bi = dom.boundary_index
    zero = np.zeros((2, dom.size))
    assert np.allclose(dom.boundary_stress(zero, np.zeros(dom.size)), 0.0)
    assert np.allclose(dom.boundary_stress(zero, np.ones(dom.size)), dom.m)
    a, b, c, d = 0.3, -1.1, 0.7, 0.2
    x, y = dom.nodes.real, dom.nodes.imag
    v = np.stack([a * x + b * y, c * x + d * y])
    q = 1.0 + x
    G = np.array([[a, b], [c, d]])
    expected = np.empty((2, len(bi)))
    for col, node in enumerate(bi):
        GA = G @ dom.A[node]
        m = dom.m[:, col]
        expected[:, col] = q[node] * m - (GA + GA.T) @ m
    assert np.allclose(dom.boundary_stress(v, q), expected, atol=1e-9)


def test_normal_stress_datum_ignores_rigid_motion():
    dom = disk_domain(radial=8, angular=32, conformal_map=ScaledMap(1.0))
    x, y = dom.nodes.real, dom.nodes.imag
    u0 = np.stack([0.1 * np.sin(y) + x ** 2, np.cos(x) * y])
    rigid = np.stack([-0.7 * y + 0.4, 0.7 * x - 1.3])
    assert np.allclose(dom.normal_stress_datum(u0 + rigid), dom.normal_stress_datum(u0), atol=1e-9)


def rotation_datum(radial, angular):
    """Largest normal stress datum of the physical rotation i z, written on the tilde grid."""
    dom = disk_domain(radial=radial, angular=angular)
    w = 1j * dom.nodes ** 2
    return np.max(np.abs(dom.normal_stress_datum(np.stack([w.real, w.imag]))))


def test_rotation_datum_vanishes_under_refinement():
    coarse, fine = rotation_datum(8, 32), rotation_datum(16, 64)
    print(f"rotation datum: {coarse:.2e} -> {fine:.2e}")
    assert fine < 0.4 * coarse


if __name__ == "__main__":
    import sys
    print("=== ELLIPTIC OPERATOR VALIDATION ===\n")
    for grid in ((8, 32), (16, 64), (32, 128)):
        print(f"{grid[0]:>3}x{grid[1]:<4} Poisson max error: {poisson_error(*grid):.3e}")
    code = pytest.main([__file__, "-q", "-s"])
    print("\n✅ All elliptic checks passed!" if code == 0 else "\n❌ Some elliptic checks failed")
    sys.exit(code)
