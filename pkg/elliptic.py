#!/usr/bin/env python3
"""
Weighted Elliptic Solves on the Fixed Tilde Domain
==================================================

DiscreteDomain is a boundary-fitted polar grid of a star-shaped tilde
domain: nodes x = c + rho R(theta) e^{i theta} with rho_j = (j + 1/2) drho,
drho = 1 / (M - 1/2), so ring j = M - 1 is the boundary. Node n = j * Ntheta + k.

On it live:

- first-derivative matrices Dx, Dy built from discrete metrics
- the Laplacian L (compact conservative stencil on interior rows)
- the A-divergence Tr(grad v A), the projector R, the corrector pressure
  and boundary stresses

Linear systems are factored once with SuperLU and reused through a shared
LRU cache; every solve is checked with one step of iterative refinement.
"""

import hashlib
import logging
import threading
from collections import deque
from dataclasses import dataclass
from typing import Callable, Dict, Hashable, Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import splu

from conformal import ConformalMap, FrameField, SqrtMap
from curve import ClosedCurve, circle_curve
from errors import ConfigError, IllPosed, SolverDiverged

logger = logging.getLogger(__name__)

SOLVER_TOL = 1e-10


@dataclass(frozen=True)
class Factorization:
    """SuperLU factors together with the matrix they came from."""
    lu: object
    matrix: sparse.csc_matrix

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self.lu.solve(rhs)


class FactorCache:
    """LRU cache of sparse LU factorizations, shared between domains."""

    def __init__(self, max_size: int = 32):
        self.max_size = max_size
        self.cache: Dict[Hashable, object] = {}
        self.access_order = deque()
        self.lock = threading.RLock()
        self.hits = 0

    def get(self, key: Hashable):
        with self.lock:
            if key in self.cache:
                self.access_order.remove(key)
                self.access_order.append(key)
                self.hits += 1
                return self.cache[key]
            return None

    def put(self, key: Hashable, factor) -> None:
        if self.max_size == 0:
            return
        with self.lock:
            if key in self.cache:
                self.access_order.remove(key)
            elif len(self.cache) >= self.max_size and self.access_order:
                oldest = self.access_order.popleft()
                del self.cache[oldest]
            self.cache[key] = factor
            self.access_order.append(key)

    def size(self) -> int:
        return len(self.cache)

    def clear(self) -> None:
        with self.lock:
            self.cache.clear()
            self.access_order.clear()


FACTOR_CACHE = FactorCache()


def _centered_periodic(n: int, h: float) -> sparse.csr_matrix:
    return ((_shift(n, 1, True) - _shift(n, -1, True)) / (2 * h)).tocsr()


def _radial_derivative(m: int, h: float) -> sparse.csr_matrix:
    """Centered inside; four-point one-sided rows at both ends with the same h^2 f'''/6 error."""
    D = sparse.lil_matrix((m, m))
    for j in range(1, m - 1):
        D[j, j - 1] = -0.5 / h
        D[j, j + 1] = 0.5 / h
    D[0, 0:4] = np.array([-2.0, 3.5, -2.0, 0.5]) / h
    D[m - 1, m - 4:m] = np.array([-0.5, 2.0, -3.5, 2.0]) / h
    return D.tocsr()


def _shift(n: int, offset: int, periodic: bool) -> sparse.csr_matrix:
    """(S f)_i = f_{i + offset}; out-of-range entries are dropped unless periodic."""
    rows = np.arange(n)
    cols = rows + offset
    if periodic:
        cols = np.mod(cols, n)
    else:
        keep = (cols >= 0) & (cols < n)
        rows, cols = rows[keep], cols[keep]
    return sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))


def polygon_centroid(points: np.ndarray) -> complex:
    nxt = np.roll(points, -1)
    cross = (np.conj(points) * nxt).imag
    area = 0.5 * cross.sum()
    return complex(np.sum((points + nxt) * cross) / (6.0 * area))


class DiscreteDomain:
    """Immutable boundary-fitted discretization of a star-shaped tilde domain."""

    def __init__(self, curve: ClosedCurve, radial: int = 16, angular: int = 64,
                 conformal_map: Optional[ConformalMap] = None, frame_offset: complex = 0.0,
                 center: Optional[complex] = None, solver_tol: float = SOLVER_TOL,
                 cache: Optional[FactorCache] = None):
        if radial < 4:
            raise ConfigError(f"Need at least 4 radial levels, got {radial}")
        if angular < 8:
            raise ConfigError(f"Need at least 8 angular points, got {angular}")
        self.curve = curve
        self.radial = radial
        self.angular = angular
        self.conformal_map = conformal_map or SqrtMap()
        self.frame_offset = complex(frame_offset)
        self.solver_tol = solver_tol
        self.cache = cache if cache is not None else FACTOR_CACHE
        self.center = complex(polygon_centroid(curve.points) if center is None else center)

        self._radius = self._radius_spline(curve.points)
        self.drho = 1.0 / (radial - 0.5)
        self.dtheta = 2 * np.pi / angular
        rho = (np.arange(radial) + 0.5) * self.drho
        theta = self.dtheta * np.arange(angular)
        R = self._radius(theta)
        self.nodes = (self.center + np.outer(rho, R * np.exp(1j * theta))).ravel()
        self.size = radial * angular
        self.boundary_index = np.arange((radial - 1) * angular, self.size)
        self.interior_index = np.arange(0, (radial - 1) * angular)
        self.boundary_points = self.nodes[self.boundary_index]

        self._build_operators()
        self._build_frames()
        self._checksum = None
        logger.debug(f"Domain built: {radial}x{angular} nodes, area {self.weights.sum():.6f}")

    # -- geometry -----------------------------------------------------------

    def _radius_spline(self, points: np.ndarray) -> CubicSpline:
        rel = points - self.center
        if self.curve.orientation() < 0:
            rel = rel[::-1]
        start = int(np.argmin(np.mod(np.angle(rel), 2 * np.pi)))
        rel = np.roll(rel, -start)
        angles = np.unwrap(np.mod(np.angle(rel), 2 * np.pi))
        if np.any(np.diff(angles) <= 0) or angles[-1] - angles[0] >= 2 * np.pi:
            raise ConfigError("Domain boundary is not star-shaped about its center")
        radii = np.abs(rel)
        base = float(angles[0])
        knots = np.append(angles, base + 2 * np.pi)
        return _PeriodicRadius(CubicSpline(knots, np.append(radii, radii[0]), bc_type="periodic"), base)

    def radius(self, theta: np.ndarray) -> np.ndarray:
        return self._radius(theta)

    def contains(self, points: np.ndarray) -> np.ndarray:
        rel = np.asarray(points, dtype=complex) - self.center
        return np.abs(rel) <= self._radius(np.angle(rel)) * (1 + 1e-12)

    def grid(self, field: np.ndarray) -> np.ndarray:
        return np.asarray(field).reshape(field.shape[:-1] + (self.radial, self.angular))

    @property
    def checksum(self) -> str:
        if self._checksum is None:
            h = hashlib.sha256()
            h.update(np.ascontiguousarray(self.nodes).tobytes())
            h.update(np.array([self.frame_offset.real, self.frame_offset.imag]).tobytes())
            h.update(self.conformal_map.name.encode())
            self._checksum = h.hexdigest()
        return self._checksum

    # -- operators ------------------------------------------------------------

    def _build_operators(self):
        M, N = self.radial, self.angular
        I_r, I_t = sparse.identity(M, format="csr"), sparse.identity(N, format="csr")
        self.Drho = sparse.kron(_radial_derivative(M, self.drho), I_t, format="csr")
        self.Dtheta = sparse.kron(I_r, _centered_periodic(N, self.dtheta), format="csr")

        x, y = self.nodes.real, self.nodes.imag
        x_r, x_t = self.Drho @ x, self.Dtheta @ x
        y_r, y_t = self.Drho @ y, self.Dtheta @ y
        jac = x_r * y_t - x_t * y_r
        if np.any(jac <= 0):
            raise ConfigError("Grid metric is not positive; domain too irregular for this resolution")
        self.jacobian = jac
        rho_x, rho_y = y_t / jac, -x_t / jac
        th_x, th_y = -y_r / jac, x_r / jac
        self.Dx = (sparse.diags(rho_x) @ self.Drho + sparse.diags(th_x) @ self.Dtheta).tocsr()
        self.Dy = (sparse.diags(rho_y) @ self.Drho + sparse.diags(th_y) @ self.Dtheta).tocsr()

        a = jac * (rho_x ** 2 + rho_y ** 2)
        b = jac * (rho_x * th_x + rho_y * th_y)
        c = jac * (th_x ** 2 + th_y ** 2)
        Sr_up = sparse.kron(_shift(M, 1, False), I_t, format="csr")
        Sr_dn = sparse.kron(_shift(M, -1, False), I_t, format="csr")
        St_up = sparse.kron(I_r, _shift(N, 1, True), format="csr")
        St_dn = sparse.kron(I_r, _shift(N, -1, True), format="csr")
        I = sparse.identity(self.size, format="csr")

        # rho-faces j + 1/2; the face below ring 0 carries no flux
        a_f = 0.5 * (a + Sr_up @ a)
        b_f = 0.5 * (b + Sr_up @ b)
        flux_r = (sparse.diags(a_f) @ (Sr_up - I) / self.drho
                  + sparse.diags(b_f) @ ((I + Sr_up) @ (St_up - St_dn)) / (4 * self.dtheta))
        # theta-faces k + 1/2
        c_g = 0.5 * (c + St_up @ c)
        b_g = 0.5 * (b + St_up @ b)
        flux_t = (sparse.diags(c_g) @ (St_up - I) / self.dtheta
                  + sparse.diags(b_g) @ (0.5 * (I + St_up) @ self.Drho))
        compact = sparse.diags(1.0 / jac) @ ((I - Sr_dn) @ flux_r / self.drho
                                             + (I - St_dn) @ flux_t / self.dtheta)
        composite = self.Dx @ self.Dx + self.Dy @ self.Dy
        interior = np.zeros(self.size)
        interior[self.interior_index] = 1.0
        self.L = (sparse.diags(interior) @ compact + sparse.diags(1.0 - interior) @ composite).tocsr()

        weights = jac * self.drho * self.dtheta
        weights[self.boundary_index] *= 0.5
        self.weights = weights

        bi = self.boundary_index
        grad_rho = np.stack([rho_x[bi], rho_y[bi]])
        self.normal_tilde = grad_rho / np.linalg.norm(grad_rho, axis=0)
        self.arc_weights = np.abs(self.Dtheta @ self.nodes)[bi] * self.dtheta
        self.perimeter = float(self.arc_weights.sum())

    def _build_frames(self):
        frames = self.frames_at(self.nodes)
        self.frames: FrameField = frames
        self.A = frames.A
        self.Ainv = frames.Ainv
        self.Q2 = frames.Q2
        self.dA = frames.dA
        self.phys_weights = self.weights / self.Q2
        bi = self.boundary_index
        m = np.einsum("nij,jn->in", self.Ainv[bi], self.normal_tilde)
        self.m = m
        self.m_perp = np.stack([-m[1], m[0]])
        self.m_norm2 = np.sum(m ** 2, axis=0)
        if np.min(self.m_norm2) <= 1e-14:
            raise IllPosed("Boundary normal |A^-1 n|^2 is not bounded away from zero")

        self.B = self._a_divergence_matrix()
        self.ATgrad = self._a_transpose_gradient_matrix()

    def frames_at(self, points: np.ndarray) -> FrameField:
        """Analytic frames at tilde points, shifted by the domain's frame offset."""
        return self.conformal_map.frames(np.asarray(points, dtype=complex) + self.frame_offset)

    def _a_divergence_matrix(self) -> sparse.csr_matrix:
        D = (self.Dx, self.Dy)
        blocks = [sum(sparse.diags(self.A[:, k, i]) @ D[k] for k in range(2)) for i in range(2)]
        return sparse.hstack(blocks, format="csr")

    def _a_transpose_gradient_matrix(self) -> sparse.csr_matrix:
        D = (self.Dx, self.Dy)
        blocks = [[sum(sparse.diags(self.A[:, k, i]) @ D[k] for k in range(2))] for i in range(2)]
        return sparse.bmat(blocks, format="csr")

    def stress_rows(self, p: np.ndarray, r: np.ndarray) -> sparse.csr_matrix:
        """Rows mapping stacked v to p . S r at boundary nodes, S = grad v A + (grad v A)^T."""
        bi = self.boundary_index
        Ab = self.A[bi]
        Ar = np.einsum("nkj,jn->kn", Ab, r)
        Ap = np.einsum("nkj,jn->kn", Ab, p)
        D = (self.Dx[bi], self.Dy[bi])
        blocks = []
        for i in range(2):
            coef = [p[i] * Ar[k] + r[i] * Ap[k] for k in range(2)]
            blocks.append(sparse.diags(coef[0]) @ D[0] + sparse.diags(coef[1]) @ D[1])
        return sparse.hstack(blocks, format="csr")

    # -- fields -------------------------------------------------------------

    def gradient(self, f: np.ndarray) -> np.ndarray:
        return np.stack([self.Dx @ f, self.Dy @ f])

    def velocity_gradient(self, v: np.ndarray) -> np.ndarray:
        """G[i, k, n] = d_k v_i at node n."""
        return np.stack([self.gradient(v[0]), self.gradient(v[1])])

    def a_transpose_gradient(self, f: np.ndarray) -> np.ndarray:
        return (self.ATgrad @ f).reshape(2, self.size)

    def laplacian(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.ndim == 1:
            return self.L @ v
        return np.stack([self.L @ comp for comp in v])

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """Weighted inner product sum f . g W / Q2."""
        prod = f * g
        if prod.ndim > 1:
            prod = prod.sum(axis=0)
        return float(np.sum(prod * self.phys_weights))

    def norm(self, f: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(f, f), 0.0)))

    def w_norm(self, f: np.ndarray) -> float:
        """Plain quadrature norm with weights W."""
        sq = f ** 2 if f.ndim == 1 else np.sum(f ** 2, axis=0)
        return float(np.sqrt(np.sum(sq * self.weights)))

    # -- solves -------------------------------------------------------------

    def factor(self, key: Hashable, build: Callable[[], sparse.spmatrix]) -> Factorization:
        full_key = (self.checksum, key)
        lu = self.cache.get(full_key)
        if lu is None:
            matrix = build().tocsc()
            try:
                lu = Factorization(splu(matrix), matrix)
            except RuntimeError as e:
                raise IllPosed(f"Factorization of {key} failed: {e}") from e
            self.cache.put(full_key, lu)
            logger.debug(f"Factored {key}: {matrix.shape[0]} unknowns, {matrix.nnz} nonzeros")
        return lu

    def solve(self, key: Hashable, build: Callable[[], sparse.spmatrix], rhs: np.ndarray) -> np.ndarray:
        """Direct solve with one refinement step and a relative residual check."""
        if not np.all(np.isfinite(rhs)):
            raise SolverDiverged(f"Non-finite right-hand side for {key}")
        lu = self.factor(key, build)
        x = lu.solve(rhs)
        r = rhs - lu.matrix @ x
        x = x + lu.solve(r)
        residual = np.linalg.norm(rhs - lu.matrix @ x)
        scale = max(np.linalg.norm(rhs), 1e-300)
        if not np.all(np.isfinite(x)) or residual > self.solver_tol * scale and residual > 1e-300:
            raise SolverDiverged(f"Solve {key} residual {residual / scale:.3e} above {self.solver_tol:.1e}")
        return x

    def _poisson_matrix(self) -> sparse.csr_matrix:
        interior = np.zeros(self.size)
        interior[self.interior_index] = 1.0
        return (sparse.diags(interior * self.Q2) @ self.L + sparse.diags(1.0 - interior)).tocsr()

    def solve_weighted_poisson(self, rhs: np.ndarray, bc: np.ndarray) -> np.ndarray:
        """Q2 L psi = rhs at interior nodes, psi = bc on the boundary."""
        b = np.array(rhs, dtype=float, copy=True)
        b[self.boundary_index] = bc
        return self.solve("poisson", self._poisson_matrix, b)

    def a_divergence(self, v: np.ndarray) -> np.ndarray:
        return self.B @ np.asarray(v).reshape(-1)

    def _projection_matrix(self) -> sparse.csr_matrix:
        # Tr(grad(A^T grad .) A) is Q2 times the Laplacian for a conformal frame
        ii = self.interior_index
        return (self.B @ self.ATgrad).tocsr()[ii][:, ii]

    def lift_potential(self, defect: np.ndarray) -> np.ndarray:
        """psi zero on the boundary with Tr(grad(A^T grad psi) A) = defect at interior nodes."""
        psi = np.zeros(self.size)
        psi[self.interior_index] = self.solve("projection", self._projection_matrix,
                                              np.asarray(defect, dtype=float)[self.interior_index])
        return psi

    def project_R(self, v: np.ndarray) -> np.ndarray:
        """v - A^T grad psi with Q2 Lap psi = Tr(grad v A) inside and psi = 0 on the boundary.

        The Laplacian here is the composition of the discrete A-divergence
        with A^T grad, so Rv has no interior A-divergence and R(A^T grad phi)
        vanishes for every phi zero on the boundary.
        """
        v = np.asarray(v, dtype=float)
        psi = self.lift_potential(self.a_divergence(v))
        return v - self.a_transpose_gradient(psi)

    def symmetric_gradient(self, v: np.ndarray) -> np.ndarray:
        """S = grad v A + (grad v A)^T per node, shape (2, 2, n)."""
        GA = np.einsum("ikn,nkj->ijn", self.velocity_gradient(v), self.A)
        return GA + np.swapaxes(GA, 0, 1)

    def normal_stress_datum(self, v: np.ndarray) -> np.ndarray:
        """m . S m / |m|^2 at boundary nodes."""
        S = self.symmetric_gradient(v)[:, :, self.boundary_index]
        return np.einsum("in,ijn,jn->n", self.m, S, self.m) / self.m_norm2

    def corrector_pressure(self, u0: np.ndarray) -> np.ndarray:
        """-Q2 L q = Tr(grad u0 A grad u0 A) inside, q |m|^2 = m . S m on the boundary."""
        u0 = np.asarray(u0, dtype=float)
        GA = np.einsum("ikn,nkj->ijn", self.velocity_gradient(u0), self.A)
        source = np.einsum("ijn,jin->n", GA, GA)
        return self.solve_weighted_poisson(-source, self.normal_stress_datum(u0))

    def boundary_stress(self, v: np.ndarray, q: np.ndarray) -> np.ndarray:
        """(q I - S) m at boundary nodes, shape (2, n_boundary)."""
        bi = self.boundary_index
        S = self.symmetric_gradient(v)[:, :, bi]
        return q[bi] * self.m - np.einsum("ijn,jn->in", S, self.m)


class _PeriodicRadius:
    """R(theta) through a periodic spline whose knots start at an arbitrary angle."""

    def __init__(self, spline: CubicSpline, base: float):
        self.spline = spline
        self.base = base

    def __call__(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return self.spline(self.base + np.mod(theta - self.base, 2 * np.pi))


def disk_domain(center: complex = 2.0, radius: float = 0.8, radial: int = 16, angular: int = 64,
                conformal_map: Optional[ConformalMap] = None, samples: int = 256,
                frame_offset: complex = 0.0) -> DiscreteDomain:
    """Disk-shaped tilde domain."""
    return DiscreteDomain(circle_curve(samples, radius, center), radial, angular,
                          conformal_map=conformal_map, center=center, frame_offset=frame_offset)
