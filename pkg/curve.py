#!/usr/bin/env python3
"""
Closed-Curve Geometry
=====================

Periodically sampled closed curves and the geometric tests the splash
machinery is built on:

- tangents, outward normals and curvature
- the chord-arc constant
- transversal self-crossings of the sampled polyline (plane sweep)
- splash-curve classification and the simple/touching/crossing trichotomy
  of the preimage of a tilde-plane curve under z~ -> z~^2
- the tubular chart x(s, lam) around a curve

Curves are stored as complex sample arrays at uniform parameter values
alpha_k = 2 pi k / N.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from errors import (
    CurveHitsSingularity,
    DegenerateTangent,
    OutsideChart,
    TooFewSamples,
)

logger = logging.getLogger(__name__)

TWO_PI = 2 * np.pi
MIN_SAMPLES = 16
SINGULAR_RADIUS = 1e-10
BLOCK = 256


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """z-component of the cross product of complex-encoded vectors."""
    return (np.conj(a) * b).imag


def _index_separation(i: np.ndarray, j: np.ndarray, n: int) -> np.ndarray:
    d = np.abs(i - j) % n
    return np.minimum(d, n - d)


def _min_chord_ratio(z_rows: np.ndarray, a_rows: np.ndarray, z: np.ndarray, alpha: np.ndarray,
                     period: float) -> float:
    """Smallest chord / periodic parameter distance; coincident parameters are skipped."""
    chord = np.abs(z_rows[:, None] - z[None, :])
    dist = np.abs(a_rows[:, None] - alpha[None, :])
    dist = np.minimum(dist, period - dist)
    ratio = np.divide(chord, dist, out=np.full(chord.shape, np.inf), where=dist > 0.0)
    return float(np.min(ratio))


class _FourierSeries:
    """Trigonometric interpolant of periodic complex samples."""

    def __init__(self, samples: np.ndarray, period: float):
        self.n = len(samples)
        self.period = period
        self.coeffs = np.fft.fft(samples) / self.n
        self.k = np.fft.fftfreq(self.n, d=1.0 / self.n) * (TWO_PI / period)
        self.nyquist = self.n // 2 if self.n % 2 == 0 else None

    def _modes(self, alpha: np.ndarray, nu: int) -> np.ndarray:
        alpha = np.atleast_1d(alpha)
        phase = np.exp(1j * np.outer(alpha, self.k))
        factor = (1j * self.k) ** nu
        if self.nyquist is not None:
            # split the Nyquist mode into a cosine so the interpolant stays real for real data
            kn = abs(self.k[self.nyquist])
            phase[:, self.nyquist] = np.cos(kn * alpha + nu * np.pi / 2) * kn ** nu
            factor = factor.copy()
            factor[self.nyquist] = 1.0
        return phase * factor

    def __call__(self, alpha, nu: int = 0) -> np.ndarray:
        return self._modes(alpha, nu) @ self.coeffs

    def antiderivative(self, alpha) -> np.ndarray:
        """Integral from 0 to alpha."""
        alpha = np.atleast_1d(alpha)
        k = self.k.copy()
        k[0] = 1.0
        c = self.coeffs / (1j * k)
        c[0] = 0.0
        phase = np.exp(1j * np.outer(alpha, self.k))
        base = np.exp(1j * np.outer(np.zeros(1), self.k))
        if self.nyquist is not None:
            kn = abs(self.k[self.nyquist])
            c[self.nyquist] = self.coeffs[self.nyquist] / kn
            phase[:, self.nyquist] = np.sin(kn * alpha)
            base[:, self.nyquist] = 0.0
        periodic = phase @ c - (base @ c)[0]
        return self.coeffs[0] * alpha + periodic


class _SplineSeries:
    """Periodic cubic spline interpolant, used when N is not a power of two."""

    def __init__(self, samples: np.ndarray, period: float):
        n = len(samples)
        nodes = np.linspace(0.0, period, n + 1)
        closed = np.append(samples, samples[0])
        self.period = period
        self.re = CubicSpline(nodes, closed.real, bc_type="periodic")
        self.im = CubicSpline(nodes, closed.imag, bc_type="periodic")
        self.re_int = self.re.antiderivative()
        self.im_int = self.im.antiderivative()
        self.total = complex(self.re_int(period), self.im_int(period))

    def __call__(self, alpha, nu: int = 0) -> np.ndarray:
        a = np.mod(np.atleast_1d(alpha), self.period)
        return self.re(a, nu) + 1j * self.im(a, nu)

    def antiderivative(self, alpha) -> np.ndarray:
        alpha = np.atleast_1d(alpha)
        turns = np.floor(alpha / self.period)
        a = alpha - turns * self.period
        return self.re_int(a) + 1j * self.im_int(a) + turns * self.total


def interpolant(samples: np.ndarray, period: float = TWO_PI):
    """Fourier interpolant for power-of-two sample counts, periodic spline otherwise."""
    if _is_power_of_two(len(samples)):
        return _FourierSeries(samples, period)
    return _SplineSeries(samples, period)


@dataclass(frozen=True, eq=False)
class ClosedCurve:
    """Closed curve sampled at alpha_k = period * k / N."""
    points: np.ndarray
    period: float = TWO_PI

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex).ravel()
        object.__setattr__(self, "points", pts)
        if len(pts) < MIN_SAMPLES:
            raise TooFewSamples(f"Curve needs at least {MIN_SAMPLES} samples, got {len(pts)}")
        steps = np.abs(np.roll(pts, -1) - pts)
        if np.any(steps == 0.0):
            raise DegenerateTangent("Consecutive curve samples coincide")

    @classmethod
    def from_xy(cls, x: Sequence[float], y: Sequence[float], period: float = TWO_PI) -> "ClosedCurve":
        return cls(np.asarray(x, dtype=float) + 1j * np.asarray(y, dtype=float), period)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def alpha(self) -> np.ndarray:
        return self.period * np.arange(self.n) / self.n

    @property
    def spacing(self) -> float:
        return self.period / self.n

    @property
    def xy(self) -> np.ndarray:
        return np.column_stack([self.points.real, self.points.imag])

    def diameter(self) -> float:
        return float(pdist(self.xy).max())

    def translated(self, offset: complex) -> "ClosedCurve":
        return ClosedCurve(self.points + offset, self.period)

    def evaluate(self, alpha, nu: int = 0) -> np.ndarray:
        return interpolant(self.points, self.period)(alpha, nu)

    def signed_area(self) -> float:
        return 0.5 * float(np.sum(_cross(self.points, np.roll(self.points, -1))))

    def orientation(self) -> int:
        """+1 for counterclockwise curves, -1 for clockwise."""
        return 1 if self.signed_area() > 0 else -1


@dataclass(frozen=True, eq=False)
class CurveGeometry:
    tangent: np.ndarray
    normal: np.ndarray
    curvature: np.ndarray
    speed: np.ndarray
    z_alpha: np.ndarray
    z_alpha_alpha: np.ndarray
    orientation: int


def _derivatives(c: ClosedCurve) -> Tuple[np.ndarray, np.ndarray]:
    z = c.points
    if _is_power_of_two(c.n):
        k = np.fft.fftfreq(c.n, d=1.0 / c.n) * (TWO_PI / c.period)
        zh = np.fft.fft(z)
        k1 = k.copy()
        k1[c.n // 2] = 0.0
        return np.fft.ifft(1j * k1 * zh), np.fft.ifft(-(k ** 2) * zh)
    h = c.spacing
    zp, zm = np.roll(z, -1), np.roll(z, 1)
    return (zp - zm) / (2 * h), (zp - 2 * z + zm) / h ** 2


def geometry(c: ClosedCurve) -> CurveGeometry:
    """Per-sample tangent, outward normal and curvature (positive on convex arcs)."""
    z1, z2 = _derivatives(c)
    speed = np.abs(z1)
    scale = max(np.max(np.abs(c.points - c.points.mean())), 1.0)
    if speed.min() <= 1e-12 * scale:
        raise DegenerateTangent(f"Tangent vanishes at alpha={c.alpha[np.argmin(speed)]:.6f}")
    sign = c.orientation()
    tangent = z1 / speed
    normal = -1j * sign * tangent
    curvature = sign * _cross(z1, z2) / speed ** 3
    return CurveGeometry(tangent, normal, curvature, speed, z1, z2, sign)


def chord_arc_constant(c: ClosedCurve) -> float:
    """Minimum over distinct sample pairs of chord over periodic parameter distance."""
    z, alpha = c.points, c.alpha
    best = np.inf
    for start in range(0, c.n, BLOCK):
        rows = slice(start, min(start + BLOCK, c.n))
        best = min(best, _min_chord_ratio(z[rows], alpha[rows], z, alpha, c.period))
    return best


# ---------------------------------------------------------------------------
# Self-crossings
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SegmentCrossing:
    first: int
    second: int
    alpha_first: float
    alpha_second: float
    point: complex


def segments_cross(p1: complex, q1: complex, p2: complex, q2: complex,
                   eps: float) -> Optional[Tuple[float, float]]:
    """Strict transversal crossing test; returns the parameters along both segments."""
    e1, e2 = q1 - p1, q2 - p2
    d1 = _cross(e1, p2 - p1)
    d2 = _cross(e1, q2 - p1)
    d3 = _cross(e2, p1 - p2)
    d4 = _cross(e2, q1 - p2)
    signs = [0 if abs(d) <= eps else (1 if d > 0 else -1) for d in (d1, d2, d3, d4)]
    if signs[0] * signs[1] < 0 and signs[2] * signs[3] < 0:
        return float(d3 / (d3 - d4)), float(d1 / (d1 - d2))
    return None


def crossing_tolerance(points: np.ndarray) -> float:
    extent = np.ptp(points.real) ** 2 + np.ptp(points.imag) ** 2
    return 1e-12 * max(extent, 1e-300)


def polyline_crossings(points: np.ndarray, period: float = TWO_PI) -> List[SegmentCrossing]:
    """Transversal crossings of the closed polyline through points.

    Segments enter a sweep over x sorted by their left end; each is tested
    against the active segments whose x-range still overlaps. Adjacent
    segments share a vertex and are skipped. The cost is O(N log N) for the
    sort plus one test per (segment, active segment) pair, so O(N^2) only
    when most segments share one x-range.
    """
    points = np.asarray(points, dtype=complex)
    n = len(points)
    starts, ends = points, np.roll(points, -1)
    xmin, xmax = np.minimum(starts.real, ends.real), np.maximum(starts.real, ends.real)
    ymin, ymax = np.minimum(starts.imag, ends.imag), np.maximum(starts.imag, ends.imag)
    eps = crossing_tolerance(points)
    h = period / n

    crossings: List[SegmentCrossing] = []
    active: List[int] = []
    for i in np.argsort(xmin, kind="stable"):
        active = [j for j in active if xmax[j] >= xmin[i]]
        for j in active:
            if _index_separation(i, j, n) <= 1:
                continue
            if ymax[j] < ymin[i] or ymax[i] < ymin[j]:
                continue
            hit = segments_cross(starts[i], ends[i], starts[j], ends[j], eps)
            if hit is None:
                continue
            a, b = (i, j) if i < j else (j, i)
            ta, tb = hit if i < j else hit[::-1]
            crossings.append(SegmentCrossing(
                first=int(a), second=int(b),
                alpha_first=(a + ta) * h, alpha_second=(b + tb) * h,
                point=complex(starts[a] + ta * (ends[a] - starts[a])),
            ))
        active.append(int(i))
    crossings.sort(key=lambda cr: (cr.first, cr.second))
    return crossings


def self_intersections(c: ClosedCurve) -> List[SegmentCrossing]:
    return polyline_crossings(c.points, c.period)


def approach_distance(points: np.ndarray, min_separation: int,
                      period: float = TWO_PI) -> Tuple[float, Tuple[float, float]]:
    """Minimal vertex-to-segment distance between well-separated parts of a closed polyline."""
    points = np.asarray(points, dtype=complex)
    n = len(points)
    starts = points
    edges = np.roll(points, -1) - points
    idx = np.arange(n)
    h = period / n
    best, witness = np.inf, (0.0, 0.0)
    for start in range(0, n, BLOCK):
        rows = idx[start:start + BLOCK]
        rel = points[rows, None] - starts[None, :]
        t = np.clip((np.conj(edges)[None, :] * rel).real / np.abs(edges)[None, :] ** 2, 0.0, 1.0)
        dist = np.abs(rel - t * edges[None, :])
        near = ((_index_separation(rows[:, None], idx[None, :], n) < min_separation)
                | (_index_separation(rows[:, None], (idx[None, :] + 1) % n, n) < min_separation))
        dist[near] = np.inf
        k = np.unravel_index(np.argmin(dist), dist.shape)
        if dist[k] < best:
            best = float(dist[k])
            witness = (float(rows[k[0]] * h), float((k[1] + t[k]) * h))
    return best, witness


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------

class SplashStatus(Enum):
    REGULAR_CHORD_ARC = "RegularChordArc"
    SPLASH_CURVE = "SplashCurve"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class SplashVerdict:
    status: SplashStatus
    touch_pairs: List[Tuple[float, float]]
    chord_arc_constant: float


def _chord_arc_without(c: ClosedCurve, center: int, half_width: int) -> float:
    keep = _index_separation(np.arange(c.n), center, c.n) > half_width
    z, alpha = c.points[keep], c.alpha[keep]
    return _min_chord_ratio(z, alpha, z, alpha, c.period)


def classify_splash(c: ClosedCurve, pair_tol: float, chord_arc_floor: float = 1e-3) -> SplashVerdict:
    """Regular chord-arc curve, splash curve with one touching pair, or degenerate."""
    if c.n < MIN_SAMPLES:
        raise TooFewSamples(f"Curve needs at least {MIN_SAMPLES} samples")
    z1, _ = _derivatives(c)
    speed = np.abs(z1)
    constant = chord_arc_constant(c)
    if speed.min() < pair_tol:
        return SplashVerdict(SplashStatus.DEGENERATE, [], constant)

    n = c.n
    idx = np.arange(n)
    candidates = []
    for start in range(0, n, BLOCK):
        rows = idx[start:start + BLOCK]
        chord = np.abs(c.points[rows, None] - c.points[None, :])
        far = _index_separation(rows[:, None], idx[None, :], n) >= n // 8
        upper = rows[:, None] < idx[None, :]
        ii, jj = np.nonzero((chord < pair_tol) & far & upper)
        candidates.extend(zip(chord[ii, jj], rows[ii], jj))

    window = max(n // 16, 1)
    clusters = []
    for _, i, j in sorted(candidates):
        if any(min(_index_separation(i, a, n) + _index_separation(j, b, n),
                   _index_separation(i, b, n) + _index_separation(j, a, n)) <= 2 * window
               for a, b in clusters):
            continue
        clusters.append((int(i), int(j)))

    if not clusters:
        return SplashVerdict(SplashStatus.REGULAR_CHORD_ARC, [], constant)
    pairs = [(float(c.alpha[i]), float(c.alpha[j])) for i, j in clusters]
    if len(clusters) > 1:
        return SplashVerdict(SplashStatus.DEGENERATE, pairs, constant)
    i, j = clusters[0]
    restored = min(_chord_arc_without(c, i, window), _chord_arc_without(c, j, window))
    status = SplashStatus.SPLASH_CURVE if restored >= chord_arc_floor else SplashStatus.DEGENERATE
    logger.debug(f"Splash classification: {status.value} | restored chord-arc {restored:.3e}")
    return SplashVerdict(status, pairs, constant)


class PreimageCaseKind(Enum):
    SIMPLE = "CaseA_Simple"
    TOUCHING = "CaseB_Touching"
    CROSSING = "CaseC_Crossing"


@dataclass(frozen=True)
class PreimageCase:
    case: PreimageCaseKind
    witnesses: List[Tuple[float, float]]
    approach: float = np.inf
    chord_arc: float = np.nan


def classify_preimage(tilde_c: ClosedCurve, touch_tol: Optional[float] = None,
                      with_chord_arc: bool = False) -> PreimageCase:
    """Square every sample and classify the image polyline as simple, touching or crossing."""
    zt = tilde_c.points
    if np.any(np.abs(zt) < SINGULAR_RADIUS):
        raise CurveHitsSingularity("Tilde curve passes through the singular point of the map")
    w = zt * zt
    if touch_tol is None:
        touch_tol = 1e-6 * float(pdist(np.column_stack([w.real, w.imag])).max())
    chord_arc = np.nan
    if with_chord_arc and not np.any(np.roll(w, -1) == w):
        chord_arc = chord_arc_constant(ClosedCurve(w, tilde_c.period))

    crossings = polyline_crossings(w, tilde_c.period)
    distance, witness = approach_distance(w, max(tilde_c.n // 8, 2), tilde_c.period)
    if crossings:
        pairs = [(cr.alpha_first, cr.alpha_second) for cr in crossings]
        return PreimageCase(PreimageCaseKind.CROSSING, pairs, 0.0, chord_arc)
    if distance < touch_tol:
        return PreimageCase(PreimageCaseKind.TOUCHING, [witness], distance, chord_arc)
    return PreimageCase(PreimageCaseKind.SIMPLE, [], distance, chord_arc)


# ---------------------------------------------------------------------------
# Tubular chart
# ---------------------------------------------------------------------------

class TubularChart:
    """Coordinates x(s, lam) = z(s) + sign * lam * n_out(s) near a curve.

    sign = +1 puts lam > 0 outside the curve, sign = -1 inside. The area
    Jacobian is 1 + sign * lam * kappa(s). The half-width must stay below
    1 / max |kappa|.
    """

    def __init__(self, curve: ClosedCurve, half_width: float, sign: int = 1):
        if sign not in (1, -1):
            raise ValueError("Chart orientation sign must be +1 or -1")
        self.curve = curve
        self.sign = sign
        self.geometry = geometry(curve)
        self.max_curvature = float(np.max(np.abs(self.geometry.curvature)))
        if half_width <= 0 or half_width * self.max_curvature >= 1.0:
            raise OutsideChart(
                f"Chart half-width {half_width:.4g} violates 1/max|kappa| = "
                f"{1.0 / max(self.max_curvature, 1e-300):.4g}"
            )
        self.half_width = half_width
        self._z = interpolant(curve.points, curve.period)
        self._speed = interpolant(self.geometry.speed.astype(complex), curve.period)
        self.length = float(self._speed.antiderivative(np.array([curve.period]))[0].real)
        self._tree = cKDTree(curve.xy)

    @classmethod
    def fitted(cls, curve: ClosedCurve, fraction: float = 0.5, sign: int = 1) -> "TubularChart":
        """Chart whose half-width is a fraction of 1/max|kappa|."""
        kmax = float(np.max(np.abs(geometry(curve).curvature)))
        return cls(curve, fraction / max(kmax, 1e-12), sign)

    def s_of_alpha(self, alpha) -> np.ndarray:
        return self._speed.antiderivative(np.asarray(alpha, dtype=float)).real

    def alpha_of_s(self, s) -> np.ndarray:
        s = np.atleast_1d(np.asarray(s, dtype=float))
        alpha = s * self.curve.period / self.length
        for _ in range(30):
            step = (self.s_of_alpha(alpha) - s) / self.speed(alpha)
            alpha = alpha - step
            if np.max(np.abs(step)) < 1e-14:
                break
        return alpha

    def point(self, alpha, nu: int = 0) -> np.ndarray:
        """nu-th alpha-derivative of the curve."""
        return self._z(alpha, nu)

    def speed(self, alpha) -> np.ndarray:
        return np.abs(self._z(alpha, 1))

    def frame_along(self, alpha):
        """Point, unit tangent, outward normal and curvature at parameters alpha."""
        z = self._z(alpha, 0)
        z1 = self._z(alpha, 1)
        z2 = self._z(alpha, 2)
        speed = np.abs(z1)
        orient = self.geometry.orientation
        tangent = z1 / speed
        normal = -1j * orient * tangent
        kappa = orient * _cross(z1, z2) / speed ** 3
        return z, tangent, normal, kappa

    def evaluate_alpha(self, alpha, lam) -> Tuple[np.ndarray, np.ndarray]:
        lam = np.asarray(lam, dtype=float)
        if np.any(np.abs(lam) > self.half_width * (1 + 1e-12)):
            raise OutsideChart(f"|lambda| exceeds the chart half-width {self.half_width:.4g}")
        z, _, normal, kappa = self.frame_along(alpha)
        return z + self.sign * lam * normal, 1.0 + self.sign * lam * kappa

    def evaluate(self, s, lam) -> Tuple[np.ndarray, np.ndarray]:
        return self.evaluate_alpha(self.alpha_of_s(s), lam)

    def locate(self, points: np.ndarray, iterations: int = 12) -> Tuple[np.ndarray, np.ndarray]:
        """Foot-point parameter alpha and signed offset lam of each point."""
        points = np.atleast_1d(np.asarray(points, dtype=complex))
        gap, nearest = self._tree.query(np.column_stack([points.real, points.imag]))
        alpha = self.curve.alpha[nearest].astype(float)
        # Newton only where the foot point is unique; deeper points keep the nearest sample
        band = gap <= 2.0 * self.half_width
        if np.any(band):
            a = alpha[band]
            p = points[band]
            for _ in range(iterations):
                z = self._z(a, 0)
                z1 = self._z(a, 1)
                z2 = self._z(a, 2)
                rel = p - z
                f = (np.conj(z1) * rel).real
                df = (np.conj(z2) * rel).real - np.abs(z1) ** 2
                step = np.clip(f / df, -4 * self.curve.spacing, 4 * self.curve.spacing)
                a = a - step
                if np.max(np.abs(step)) < 1e-14:
                    break
            alpha[band] = a
        alpha = np.mod(alpha, self.curve.period)
        z, _, normal, _ = self.frame_along(alpha)
        lam = self.sign * (np.conj(normal) * (points - z)).real
        return alpha, lam


def tubular_eval(chart: TubularChart, s, lam) -> Tuple[np.ndarray, np.ndarray]:
    return chart.evaluate(s, lam)


# ---------------------------------------------------------------------------
# Curve builders
# ---------------------------------------------------------------------------

def _uniform_alpha(n: int) -> np.ndarray:
    return TWO_PI * np.arange(n) / n


def circle_curve(n: int, radius: float = 1.0, center: complex = 0.0) -> ClosedCurve:
    return ClosedCurve(center + radius * np.exp(1j * _uniform_alpha(n)))


def ellipse_curve(n: int, a: float = 2.0, b: float = 1.0, center: complex = 0.0) -> ClosedCurve:
    alpha = _uniform_alpha(n)
    return ClosedCurve(center + a * np.cos(alpha) + 1j * b * np.sin(alpha))


def limacon_curve(n: int, a: float = 1.0, b: float = 2.0) -> ClosedCurve:
    """r = a + b cos(theta); b > a gives an inner loop through the pole."""
    alpha = _uniform_alpha(n)
    return ClosedCurve((a + b * np.cos(alpha)) * np.exp(1j * alpha))


def cardioid_curve(n: int) -> ClosedCurve:
    """r = 1 - cos(theta), with a cusp at alpha = 0."""
    alpha = _uniform_alpha(n)
    return ClosedCurve((1.0 - np.cos(alpha)) * np.exp(1j * alpha))


def lobes_curve(n: int, gap: float = 0.0) -> ClosedCurve:
    """Vertical peanut in the right half-plane.

    The leftmost points are the samples at alpha = 3pi/4 and 5pi/4 (exact when
    n is divisible by 8), located at (gap, +1) and (gap, -1) with vertical
    tangents. At gap = 0 the squared curve touches itself at (-1, 0).
    """
    alpha = _uniform_alpha(n)
    r = 1.0 - 0.5 * np.cos(2 * alpha)
    return ClosedCurve(1.0 + gap + np.sqrt(2.0) * r * np.exp(1j * alpha))


def lobe_tips(gap: float = 0.0) -> Tuple[complex, complex]:
    return complex(gap, 1.0), complex(gap, -1.0)


def polygon_curve(vertices: Sequence[complex], per_edge: int = 5) -> ClosedCurve:
    """Closed polygon with each edge subdivided into per_edge pieces."""
    verts = np.asarray(vertices, dtype=complex)
    t = np.arange(per_edge) / per_edge
    pieces = [a + t * (b - a) for a, b in zip(verts, np.roll(verts, -1))]
    return ClosedCurve(np.concatenate(pieces))


def disk_union_curve(n: int, radius: float = 1.2,
                     centers: Tuple[complex, complex] = (1.25 + 1.0j, 1.25 - 1.0j)) -> ClosedCurve:
    """Boundary of the union of two disks mirrored across the real axis.

    The leftmost point of each disk (center - radius) is an exact sample.
    """
    upper = complex(centers[0])
    half_gap = upper.imag
    if radius <= half_gap:
        raise ValueError("Disks must overlap")
    dx = np.sqrt(radius ** 2 - half_gap ** 2)
    right, left = upper.real + dx, upper.real - dx
    phi_r = np.angle(right - upper)
    phi_l = np.angle(left - upper) + TWO_PI
    step = (phi_l - phi_r) / max(n // 2, 2)
    n1 = max(int(round((np.pi - phi_r) / step)), 1)
    n2 = max(int(round((phi_l - np.pi) / step)), 2)
    first = phi_r + (np.pi - phi_r) * np.arange(1, n1 + 1) / n1
    second = np.pi + (phi_l - np.pi) * np.arange(1, n2) / n2
    arc = upper + radius * np.exp(1j * np.concatenate([first, second]))
    arc[n1 - 1] = complex(upper.real - radius, upper.imag)
    lower = np.conj(arc[::-1])
    return ClosedCurve(np.concatenate([[right], arc, [left], lower]))
