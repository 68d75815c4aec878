#!/usr/bin/env python3
"""
Conformal Frames for the Tilde Plane
====================================

The simulator works in the image of the fluid domain under the branch map
P(z) = sqrt(z). Everything it needs from the map is a per-point frame:

- A, the real 2x2 Jacobian of P evaluated at P^-1(z~)
- Q2 = |P'(P^-1(z~))|^2, the conformal weight
- Ainv and the frame gradient dA[k] = d_k A

All of these are closed-form functions of the complex derivative
p(z~) = P'(P^-1(z~)) and of its z~-derivative. Points are handled as
complex numbers throughout; x + iy.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from errors import ConfigError, PointOnCut, SingularPoint

logger = logging.getLogger(__name__)

# Rotation by +pi/2
J = np.array([[0.0, -1.0], [1.0, 0.0]])

# |z~| below this is treated as the map's singular point
SINGULAR_RADIUS = 1e-10

ComplexLike = Union[complex, np.ndarray]


def as_complex(point) -> ComplexLike:
    """Accept complex numbers, (x, y) pairs or (..., 2) arrays."""
    if isinstance(point, (complex, float, int)):
        return complex(point)
    arr = np.asarray(point)
    if np.iscomplexobj(arr):
        return arr
    if arr.shape == (2,):
        return complex(arr[0], arr[1])
    return arr[..., 0] + 1j * arr[..., 1]


def complex_matrix(p: ComplexLike) -> np.ndarray:
    """Real 2x2 matrix of multiplication by p: [[Re p, -Im p], [Im p, Re p]]."""
    p = np.asarray(p, dtype=complex)
    out = np.empty(p.shape + (2, 2))
    out[..., 0, 0] = p.real
    out[..., 0, 1] = -p.imag
    out[..., 1, 0] = p.imag
    out[..., 1, 1] = p.real
    return out


@dataclass(frozen=True)
class ConformalFrame:
    """Frame of the map at one tilde-plane point."""
    point: complex
    A: np.ndarray
    Q2: float
    Ainv: np.ndarray


@dataclass(frozen=True)
class FrameField:
    """Frames at many points, stored as stacked arrays.

    dA[..., k, :, :] is the derivative of A along coordinate k.
    """
    points: np.ndarray
    p: np.ndarray
    dp: np.ndarray
    A: np.ndarray
    Ainv: np.ndarray
    Q2: np.ndarray
    dA: np.ndarray

    def __len__(self) -> int:
        return len(self.points)

    def at(self, index: int) -> ConformalFrame:
        return ConformalFrame(
            point=complex(self.points[index]),
            A=self.A[index].copy(),
            Q2=float(self.Q2[index]),
            Ainv=self.Ainv[index].copy(),
        )


class BranchCut:
    """Explicit slit Gamma in the physical plane.

    The cut is a polyline leaving the origin with strictly increasing radius;
    its last segment is continued as a ray. The branch of sqrt takes arguments
    in (theta(r), theta(r) + 2pi) where theta(r) is the unwrapped angle of the
    cut at radius r.
    """

    def __init__(self, vertices: Sequence, tolerance: float = 1e-10):
        arr = np.asarray(vertices)
        if np.iscomplexobj(arr) or arr.ndim == 1:
            verts = arr.astype(complex).ravel()
        else:
            verts = arr[:, 0] + 1j * arr[:, 1]
        if len(verts) < 2:
            raise ConfigError("Branch cut needs at least two vertices")
        if abs(verts[0]) > tolerance:
            raise ConfigError(f"Branch cut must start at the origin, got {verts[0]}")
        radii = np.abs(verts)
        if np.any(np.diff(radii) <= 0):
            raise ConfigError("Branch cut radius must increase strictly along the polyline")

        direction = verts[-1] - verts[-2]
        direction /= abs(direction)
        far = verts[-1] + direction * 1e6 * max(1.0, radii[-1])
        self.vertices = np.append(verts, far)
        self.radii = np.abs(self.vertices)
        self.tolerance = tolerance

        # start angle normalized to [-pi, pi) so the default cut is the principal branch
        theta0 = float(np.mod(np.angle(verts[1]) + np.pi, 2 * np.pi) - np.pi)
        angles = np.unwrap(np.angle(self.vertices[1:]))
        angles += theta0 - angles[0]
        self.angles = np.concatenate([[theta0], angles])

    @classmethod
    def ray(cls, angle: float) -> "BranchCut":
        """Straight cut from the origin along the given direction."""
        return cls([0.0, np.exp(1j * angle)])

    @classmethod
    def negative_real_axis(cls) -> "BranchCut":
        return cls([0.0 + 0.0j, -1.0 + 0.0j])

    @classmethod
    def positive_real_axis(cls) -> "BranchCut":
        return cls([0.0 + 0.0j, 1.0 + 0.0j])

    def angle_at(self, r: np.ndarray) -> np.ndarray:
        """Unwrapped angle of the cut at radius r."""
        r = np.clip(np.asarray(r, dtype=float), 0.0, self.radii[-1])
        seg = np.clip(np.searchsorted(self.radii, r, side="right") - 1, 0, len(self.radii) - 2)
        start = self.vertices[seg]
        edge = self.vertices[seg + 1] - start
        ee = np.abs(edge) ** 2
        b = (np.conj(start) * edge).real
        disc = np.maximum(b * b - ee * (np.abs(start) ** 2 - r * r), 0.0)
        t = np.clip((-b + np.sqrt(disc)) / ee, 0.0, 1.0)
        on_cut = start + t * edge
        raw = np.angle(on_cut)
        ref = self.angles[seg + 1]
        theta = raw + 2 * np.pi * np.round((ref - raw) / (2 * np.pi))
        return np.where(r > 0, theta, self.angles[0])

    def distance(self, z: ComplexLike) -> np.ndarray:
        """Distance from z to the cut polyline."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        start = self.vertices[:-1][None, :]
        edge = (self.vertices[1:] - self.vertices[:-1])[None, :]
        t = ((np.conj(edge) * (z[:, None] - start)).real / np.abs(edge) ** 2).clip(0.0, 1.0)
        return np.min(np.abs(z[:, None] - start - t * edge), axis=1)


class ConformalMap:
    """Interface shared by the maps the simulator can run with."""

    name = "abstract"

    def forward(self, z: ComplexLike) -> ComplexLike:
        raise NotImplementedError

    def inverse(self, zt: ComplexLike) -> ComplexLike:
        raise NotImplementedError

    def derivative(self, zt: ComplexLike) -> ComplexLike:
        """p(z~) = P'(P^-1(z~))."""
        raise NotImplementedError

    def derivative_slope(self, zt: ComplexLike) -> ComplexLike:
        """dp/dz~."""
        raise NotImplementedError

    def inverse_log_slope(self, zt: ComplexLike) -> ComplexLike:
        """F''/F' for F = P^-1, equal to -p'/p."""
        return -self.derivative_slope(zt) / self.derivative(zt)

    def frame_at(self, zt) -> ConformalFrame:
        return self.frames(np.array([as_complex(zt)])).at(0)

    def frames(self, points: np.ndarray) -> FrameField:
        points = np.asarray(points, dtype=complex)
        p = np.asarray(self.derivative(points), dtype=complex) * np.ones_like(points)
        dp = np.asarray(self.derivative_slope(points), dtype=complex) * np.ones_like(points)
        A = complex_matrix(p)
        Q2 = np.abs(p) ** 2
        Ainv = complex_matrix(1.0 / p)
        dA = np.stack([complex_matrix(dp), complex_matrix(1j * dp)], axis=-3)
        return FrameField(points=points, p=p, dp=dp, A=A, Ainv=Ainv, Q2=Q2, dA=dA)


class SqrtMap(ConformalMap):
    """Branch map P(z) = sqrt(z) with an explicit cut."""

    name = "sqrt"

    def __init__(self, cut: Optional[BranchCut] = None):
        self.cut = cut or BranchCut.negative_real_axis()

    def forward(self, z: ComplexLike) -> ComplexLike:
        scalar = np.isscalar(z) or np.ndim(z) == 0
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        off = self.cut.distance(z)
        bad = off < self.cut.tolerance * np.maximum(1.0, np.abs(z))
        if np.any(bad):
            raise PointOnCut(f"Point {z[bad][0]} lies on the branch cut")
        r = np.abs(z)
        theta_cut = self.cut.angle_at(r)
        phi = theta_cut + np.mod(np.angle(z) - theta_cut, 2 * np.pi)
        out = np.sqrt(r) * np.exp(0.5j * phi)
        return complex(out[0]) if scalar else out

    def inverse(self, zt: ComplexLike) -> ComplexLike:
        return np.asarray(zt, dtype=complex) ** 2 if not np.isscalar(zt) else complex(zt) ** 2

    def _guard(self, zt: ComplexLike) -> np.ndarray:
        zt = np.asarray(zt, dtype=complex)
        if np.any(np.abs(zt) < SINGULAR_RADIUS):
            raise SingularPoint("Frame requested at the singular point of the map")
        return zt

    def derivative(self, zt: ComplexLike) -> ComplexLike:
        return 0.5 / self._guard(zt)

    def derivative_slope(self, zt: ComplexLike) -> ComplexLike:
        zt = self._guard(zt)
        return -0.5 / zt ** 2


class ScaledMap(ConformalMap):
    """P(z) = k z, giving the constant frame A = k I.

    k = 1 is the identity map; k = 1/2 reproduces the frame of the branch
    map at z~ = 1.
    """

    name = "scaled"

    def __init__(self, scale: float = 1.0):
        if scale == 0:
            raise ConfigError("Scaled map needs a nonzero factor")
        self.scale = scale

    def forward(self, z: ComplexLike) -> ComplexLike:
        return self.scale * np.asarray(z, dtype=complex) if not np.isscalar(z) else self.scale * complex(z)

    def inverse(self, zt: ComplexLike) -> ComplexLike:
        return np.asarray(zt, dtype=complex) / self.scale if not np.isscalar(zt) else complex(zt) / self.scale

    def derivative(self, zt: ComplexLike) -> ComplexLike:
        return np.full(np.shape(zt), self.scale, dtype=complex)

    def derivative_slope(self, zt: ComplexLike) -> ComplexLike:
        return np.zeros(np.shape(zt), dtype=complex)


def build_map(name: str = "sqrt", cut: Optional[BranchCut] = None, scale: float = 1.0) -> ConformalMap:
    if name == "sqrt":
        return SqrtMap(cut)
    if name in ("scaled", "identity"):
        return ScaledMap(1.0 if name == "identity" else scale)
    raise ConfigError(f"Unknown conformal map '{name}'")


def map_forward(z, cut: Optional[BranchCut] = None) -> ComplexLike:
    return SqrtMap(cut).forward(as_complex(z))


def map_inverse(zt) -> ComplexLike:
    zt = as_complex(zt)
    return zt * zt


def frame_at(zt, conformal_map: Optional[ConformalMap] = None) -> ConformalFrame:
    return (conformal_map or SqrtMap()).frame_at(zt)


def transform_normal(n, frame: ConformalFrame) -> np.ndarray:
    """Tilde normal -J A J n; for a conformal frame this equals A n."""
    n = np.asarray(n, dtype=float)
    if not np.any(n):
        raise ValueError("Normal vector must be nonzero")
    return -J @ frame.A @ J @ n


@dataclass(frozen=True)
class IdentityReport:
    gram_deviation: float
    inverse_deviation: float
    samples: int

    @property
    def max_deviation(self) -> float:
        return max(self.gram_deviation, self.inverse_deviation)


def identity_deviation(frame: ConformalFrame) -> IdentityReport:
    """Deviation of one frame from A A^T = Q2 I and Q2 A^-1 = -J A^T J."""
    return frame_identity_deviation(frame.A, frame.Q2, frame.Ainv)


def frame_identity_deviation(A: np.ndarray, Q2, Ainv: Optional[np.ndarray] = None) -> IdentityReport:
    """Identity deviations of stacked frames A[..., 2, 2] with weights Q2[...].

    Ainv defaults to the numerical inverse of A, so a frame whose entries
    were edited by hand is judged on its own.
    """
    A = np.asarray(A, dtype=float)
    Q2 = np.asarray(Q2, dtype=float)[..., None, None]
    Ainv = np.linalg.inv(A) if Ainv is None else np.asarray(Ainv, dtype=float)
    AT = np.swapaxes(A, -1, -2)
    gram = A @ AT - Q2 * np.eye(2)
    # for a conformal frame Q2 A^-1 = A^T, which -J A^T J reproduces
    inverse = Q2 * Ainv + J @ AT @ J
    return IdentityReport(
        gram_deviation=float(np.max(np.abs(gram))),
        inverse_deviation=float(np.max(np.abs(inverse))),
        samples=int(np.prod(A.shape[:-2], dtype=int)),
    )


def check_identities(samples: Iterable, conformal_map: Optional[ConformalMap] = None) -> IdentityReport:
    points = np.atleast_1d(as_complex(np.asarray(list(samples))))
    frames = (conformal_map or SqrtMap()).frames(points)
    report = frame_identity_deviation(frames.A, frames.Q2, frames.Ainv)
    logger.debug(f"Identity check over {report.samples} points: "
                 f"gram {report.gram_deviation:.2e} | inverse {report.inverse_deviation:.2e}")
    return report
