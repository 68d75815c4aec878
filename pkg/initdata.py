#!/usr/bin/env python3
"""
Stream-Function Initial Data
============================

Initial velocities are built from boundary stream data psi0 through a
tubular chart of the tilde boundary:

    psi = chi * (psi0 + psi2 lam^2 / 2) + (1 - chi) * mean(psi0)
    v0  = -J A^T grad psi

chi is a quintic cutoff in the depth -lam, so psi keeps its boundary jets
psi = psi0, d_lam psi = 0 and d_lam^2 psi = psi2. psi2 is chosen so the
tangential stress of the physical flow vanishes on the boundary.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from curve import ClosedCurve, TubularChart, interpolant
from elliptic import DiscreteDomain
from errors import ChartTooNarrow, PointsNotOnBoundary

logger = logging.getLogger(__name__)

BUMP_WIDTH_CELLS = 8
BOUNDARY_TOL = 1e-8

StreamSource = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def quintic_cutoff(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """chi(x) = 1 - (10x^3 - 15x^4 + 6x^5) on [0, 1] and its derivative."""
    x = np.clip(x, 0.0, 1.0)
    chi = 1.0 - x ** 3 * (10.0 - 15.0 * x + 6.0 * x ** 2)
    dchi = -30.0 * x ** 2 * (1.0 - x) ** 2
    return chi, dchi


def boundary_chart(dom: DiscreteDomain, fraction: float = 0.5) -> TubularChart:
    """Chart on the curve through the domain's boundary nodes, lam > 0 outside."""
    return TubularChart.fitted(ClosedCurve(dom.boundary_points), fraction=fraction)


def perp_velocity(dom: DiscreteDomain, grad: np.ndarray) -> np.ndarray:
    """-J A^T g per node for a gradient field g of shape (2, n)."""
    at_g = np.einsum("nki,kn->in", dom.A, grad)
    return np.stack([at_g[1], -at_g[0]])


@dataclass(frozen=True, eq=False)
class BoundaryStream:
    """Boundary data psi0, psi1 = 0, psi2 at the chart samples.

    psi2 = d_s^2 psi0 + map_correction; the correction vanishes for linear maps.
    """
    psi0: np.ndarray
    psi2: np.ndarray
    ds_psi0: np.ndarray
    d2s_psi0: np.ndarray
    map_correction: np.ndarray

    @property
    def psi1(self) -> np.ndarray:
        return np.zeros_like(self.psi0)


def boundary_stream(chart: TubularChart, psi0: np.ndarray, dom: Optional[DiscreteDomain] = None) -> BoundaryStream:
    """Arclength derivatives of psi0 and the stress-free psi2.

    With a domain, psi2 picks up d_s psi0 * Re(2 (F''/F') conj(t) n^2), F the
    inverse map, evaluated at the boundary points plus the frame offset.
    """
    psi0 = np.asarray(psi0, dtype=float)
    curve = chart.curve
    if psi0.shape != (curve.n,):
        raise ValueError(f"Need {curve.n} boundary stream samples, got {psi0.shape}")
    series = interpolant(psi0.astype(complex), curve.period)
    alpha = curve.alpha
    d1 = series(alpha, 1).real
    d2 = series(alpha, 2).real
    speed = chart.speed(alpha)
    dspeed = (np.conj(chart.point(alpha, 1)) * chart.point(alpha, 2)).real / speed
    ds = d1 / speed
    d2s = (d2 * speed - d1 * dspeed) / speed ** 3
    correction = np.zeros_like(psi0)
    if dom is not None:
        _, tangent, normal, _ = chart.frame_along(alpha)
        slope = dom.conformal_map.inverse_log_slope(curve.points + dom.frame_offset)
        correction = ds * (2.0 * slope * np.conj(tangent) * normal ** 2).real
    return BoundaryStream(psi0, d2s + correction, ds, d2s, correction)


class ChartStream:
    """Evaluates chart-built stream functions and their gradients on a domain.

    Node locations in the chart and the cutoff are computed once, so many
    boundary data sets (one per time level) can be lifted cheaply.
    """

    def __init__(self, dom: DiscreteDomain, chart: Optional[TubularChart] = None,
                 blend_width: Optional[float] = None):
        self.dom = dom
        self.chart = chart or boundary_chart(dom)
        lam0 = self.chart.half_width
        self.blend_width = 0.5 * lam0 if blend_width is None else float(blend_width)
        if self.blend_width <= 0 or self.blend_width > lam0:
            raise ChartTooNarrow(
                f"Blend width {self.blend_width:.4g} exceeds the chart half-width {lam0:.4g}"
            )
        sign = self.chart.sign
        self.alpha, self.lam = self.chart.locate(dom.nodes)
        depth = np.maximum(-sign * self.lam, 0.0)
        self.active = depth < self.blend_width
        chi, dchi = quintic_cutoff(depth / self.blend_width)
        self.chi = np.where(self.active, chi, 0.0)
        # d chi / d lam
        self.dchi = np.where(self.active, -sign * dchi / self.blend_width, 0.0)
        _, tangent, normal, kappa = self.chart.frame_along(self.alpha)
        self.tangent = tangent
        self.normal = normal
        self.metric = self.chart.speed(self.alpha) * (1.0 + sign * self.lam * kappa)

    def field(self, psi0: np.ndarray, psi2: np.ndarray, base: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Node values of psi and grad psi (shape (2, n)) for boundary data psi0, psi2."""
        curve = self.chart.curve
        base = float(np.mean(psi0)) if base is None else base
        s0 = interpolant(np.asarray(psi0, dtype=complex), curve.period)
        s2 = interpolant(np.asarray(psi2, dtype=complex), curve.period)
        a, lam = self.alpha, self.lam
        bar = s0(a).real + 0.5 * s2(a).real * lam ** 2
        bar_alpha = s0(a, 1).real + 0.5 * s2(a, 1).real * lam ** 2
        bar_lam = s2(a).real * lam
        psi = np.where(self.active, self.chi * bar + (1.0 - self.chi) * base, base)
        psi_alpha = self.chi * bar_alpha
        psi_lam = self.dchi * (bar - base) + self.chi * bar_lam
        grad = psi_alpha / self.metric * self.tangent + self.chart.sign * psi_lam * self.normal
        grad = np.where(self.active, grad, 0.0)
        return psi, np.stack([grad.real, grad.imag])


@dataclass(frozen=True, eq=False)
class InitialVelocity:
    """Stream psi on the domain and the velocity v0 = -J A^T grad psi."""
    domain: DiscreteDomain
    psi: np.ndarray
    v0: np.ndarray
    stream: BoundaryStream
    builder: ChartStream

    @property
    def boundary_normal_velocity(self) -> np.ndarray:
        """Physical v0 . n at the boundary nodes."""
        dom = self.domain
        m = dom.m / np.sqrt(dom.m_norm2)
        return np.sum(self.v0[:, dom.boundary_index] * m, axis=0)


def _boundary_samples(chart: TubularChart, psi0: StreamSource) -> np.ndarray:
    if callable(psi0):
        return np.asarray(psi0(chart.curve.points), dtype=float)
    return np.asarray(psi0, dtype=float)


def build_stream(dom: DiscreteDomain, psi0: StreamSource, chart: Optional[TubularChart] = None,
                 blend_width: Optional[float] = None) -> InitialVelocity:
    """Initial velocity from boundary stream data psi0.

    psi0 is either samples at the chart curve's samples or a function of the
    boundary points. blend_width defaults to half the chart half-width.
    """
    builder = ChartStream(dom, chart, blend_width)
    stream = boundary_stream(builder.chart, _boundary_samples(builder.chart, psi0), dom)
    psi, grad = builder.field(stream.psi0, stream.psi2)
    v0 = perp_velocity(dom, grad)
    logger.debug(f"Stream built: max|v0| = {np.max(np.abs(v0)):.4g}, blend width {builder.blend_width:.4g}")
    return InitialVelocity(dom, psi, v0, stream, builder)


@dataclass
class CompatibilityReport:
    """Discrete compatibility of an initial velocity with the linear scheme."""
    divergence: float
    tangential_stress: float
    a_divergence_defect: float
    details: Dict[str, float] = field(default_factory=dict)

    def passed(self, tol: float) -> bool:
        return max(self.divergence, self.tangential_stress, self.a_divergence_defect) <= tol

    def as_dict(self) -> Dict[str, float]:
        return {
            "divergence": self.divergence,
            "tangential_stress": self.tangential_stress,
            "a_divergence_defect": self.a_divergence_defect,
            **self.details,
        }


def tangential_stress(dom: DiscreteDomain, v: np.ndarray) -> np.ndarray:
    """m_perp . S m / |m|^2 at the boundary nodes."""
    return (dom.stress_rows(dom.m_perp, dom.m) @ np.asarray(v).reshape(-1)) / dom.m_norm2


def check_compatibility(dom: DiscreteDomain, v0: Union[InitialVelocity, np.ndarray],
                        g0: Optional[np.ndarray] = None) -> CompatibilityReport:
    """Max |Tr(grad v0 A)| inside, max tangential stress, max |Tr(grad v0 A) - g(0)|."""
    v = v0.v0 if isinstance(v0, InitialVelocity) else np.asarray(v0, dtype=float)
    adiv = dom.a_divergence(v)
    g0 = np.zeros(dom.size) if g0 is None else np.asarray(g0, dtype=float)
    report = CompatibilityReport(
        divergence=float(np.max(np.abs(adiv[dom.interior_index]))),
        tangential_stress=float(np.max(np.abs(tangential_stress(dom, v)))),
        a_divergence_defect=float(np.max(np.abs(adiv - g0))),
    )
    report.details["boundary_a_divergence"] = float(np.max(np.abs((adiv - g0)[dom.boundary_index])))
    return report


def _compatibility_matrix(dom: DiscreteDomain) -> sparse.csr_matrix:
    bi = dom.boundary_index
    cols = np.concatenate([bi, bi + dom.size])
    rows = sparse.vstack([dom.B[bi], dom.stress_rows(dom.m_perp, dom.m)], format="csc")
    return rows[:, cols].tocsr()


def enforce_compatibility(dom: DiscreteDomain, v: np.ndarray, g0: Optional[np.ndarray] = None,
                          h0: Optional[np.ndarray] = None) -> np.ndarray:
    """Correct v at the boundary nodes so the scheme's boundary rows hold exactly.

    Rows: Tr(grad v A) = g0 and -m_perp . S m = h0 . m_perp at every
    boundary node. g0 and h0 default to zero.
    """
    v = np.array(v, dtype=float, copy=True)
    bi = dom.boundary_index
    nb = len(bi)
    g_b = np.zeros(nb) if g0 is None else np.asarray(g0, dtype=float)[bi]
    tang = np.zeros(nb) if h0 is None else -np.sum(np.asarray(h0) * dom.m_perp, axis=0)
    flat = v.reshape(-1)
    defect = np.concatenate([g_b - dom.B[bi] @ flat, tang - dom.stress_rows(dom.m_perp, dom.m) @ flat])
    delta = dom.solve("compatibility", lambda: _compatibility_matrix(dom), defect)
    v[0, bi] += delta[:nb]
    v[1, bi] += delta[nb:]
    size = np.max(np.abs(delta))
    scale = max(np.max(np.abs(v)), 1e-300)
    if size > 1e-3 * scale:
        logger.warning(f"Compatibility re-enforcement moved boundary velocity by {size:.3e}")
    else:
        logger.debug(f"Compatibility correction {size:.3e}")
    return v


def _periodic_offset(s: np.ndarray, center: float, length: float) -> np.ndarray:
    return np.mod(s - center + 0.5 * length, length) - 0.5 * length


def set_splash_velocity(iv: InitialVelocity, points: Sequence[complex], directions: Sequence[complex],
                        amplitude: float) -> InitialVelocity:
    """Add stream bumps so the physical v0 . n at two boundary points is amplitude * (d . n).

    Bumps are (s - s_i) exp(-(s - s_i)^2 / 2w^2) in arclength with w eight
    boundary spacings. points and directions are complex numbers.
    """
    if len(points) != 2 or len(directions) != 2:
        raise ValueError("Splash velocity needs two points and two directions")
    if amplitude == 0:
        return iv
    dom, chart = iv.domain, iv.builder.chart
    pts = np.asarray(points, dtype=complex)
    dirs = np.asarray(directions, dtype=complex)
    if np.any(np.abs(dirs) == 0):
        raise ValueError("Splash directions must be nonzero")
    dirs = dirs / np.abs(dirs)
    alpha, lam = chart.locate(pts)
    tol = BOUNDARY_TOL * max(chart.curve.diameter(), 1.0)
    if np.any(np.abs(lam) > tol):
        raise PointsNotOnBoundary(f"Splash points are off the boundary by {np.max(np.abs(lam)):.3e}")

    length = chart.length
    width = BUMP_WIDTH_CELLS * length / chart.curve.n
    s_nodes = chart.s_of_alpha(chart.curve.alpha)
    s_pts = chart.s_of_alpha(alpha)
    foot, _, normal, _ = chart.frame_along(alpha)
    frames = dom.frames_at(foot)
    # physical normal of the tilde normal n is conj(p) n / |p|
    phys_normal = np.conj(frames.p) * normal / np.abs(frames.p)
    target = amplitude * (np.conj(phys_normal) * dirs).real

    def bump(center: float, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        d = _periodic_offset(s, center, length)
        g = np.exp(-0.5 * (d / width) ** 2)
        return d * g, (1.0 - (d / width) ** 2) * g

    # v . n_phys = |p| d_s psi0 at the boundary
    Q = np.abs(frames.p)
    system = np.array([[Q[j] * bump(s_pts[i], s_pts[j:j + 1])[1][0] for i in range(2)] for j in range(2)])
    coef = np.linalg.solve(system, target)
    psi0 = iv.stream.psi0 + sum(c * bump(sc, s_nodes)[0] for c, sc in zip(coef, s_pts))
    logger.info(f"Splash bumps set: coefficients {coef[0]:.4g}, {coef[1]:.4g}")
    return build_stream(dom, psi0, chart, iv.builder.blend_width)
