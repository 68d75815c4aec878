#!/usr/bin/env python3
"""
Linear Fixed-Domain Stokes System
=================================

    v_t - Q2 L v + A^T grad q = f
    Tr(grad v A)              = g
    (q I - S(v)) m            = h        on the boundary, m = A^-1 n~
    v(0)                      = v0

Every time step (backward Euler, sigma = 1/dt) and every resolvent solve
(sigma = lam + 1) is the same stationary system in the unknowns
[v1, v2, q]:

- v rows, interior: sigma v - Q2 L v + A^T grad q = f + sigma v_prev
- v1 rows, boundary: tangential stress  -m_perp . S m = h . m_perp
- v2 rows, boundary: Tr(grad v A) = g
- q rows, interior: pressure equation, the A-divergence of the momentum rows
      Q2 L q - B(Q2 L v) = B(f + sigma v_prev) - sigma g + pressure_source
- q rows, boundary: normal stress  q |m|^2 - m . S m = h . m
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import sparse

from elliptic import DiscreteDomain
from errors import CompatibilityViolated, OutOfRange
from initdata import ChartStream, enforce_compatibility, perp_velocity, tangential_stress

logger = logging.getLogger(__name__)

COMPAT_TOL = 1e-8


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, T]."""
    T: float
    dt: float
    steps: int

    def __post_init__(self):
        if self.T <= 0 or self.dt <= 0 or self.steps < 1:
            raise OutOfRange(f"Invalid time grid T={self.T}, dt={self.dt}, steps={self.steps}")
        if abs(self.steps * self.dt - self.T) > 1e-12 * max(1.0, self.T):
            raise OutOfRange(f"steps * dt = {self.steps * self.dt} does not match T = {self.T}")

    @classmethod
    def from_steps(cls, T: float, steps: int) -> "TimeGrid":
        return cls(T, T / steps, steps)

    @classmethod
    def from_dt(cls, T: float, dt: float) -> "TimeGrid":
        steps = int(round(T / dt))
        if steps < 1 or abs(steps * dt - T) > 1e-9 * max(1.0, T):
            raise OutOfRange(f"T = {T} is not a whole number of steps dt = {dt}")
        return cls(T, T / steps, steps)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.steps + 1)


@dataclass(frozen=True, eq=False)
class LinearData:
    """Time-indexed data, one entry per grid time.

    f: (nt+1, 2, n), g: (nt+1, n), h: (nt+1, 2, nb), v0: (2, n).
    pressure_source: optional (nt+1, n) added to the interior pressure rows.
    g_rate0: d/dt g at t = 0 for the initial pressure; a forward difference
    of g when absent.
    """
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray
    v0: np.ndarray
    pressure_source: Optional[np.ndarray] = None
    g_rate0: Optional[np.ndarray] = None

    @classmethod
    def zeros(cls, dom: DiscreteDomain, grid: TimeGrid) -> "LinearData":
        nt, n, nb = grid.steps + 1, dom.size, len(dom.boundary_index)
        return cls(np.zeros((nt, 2, n)), np.zeros((nt, n)), np.zeros((nt, 2, nb)), np.zeros((2, n)))

    def source(self, k: int) -> np.ndarray:
        if self.pressure_source is None:
            return 0.0
        return self.pressure_source[k]

    def __sub__(self, other: "LinearData") -> "LinearData":
        def diff(a, b):
            if a is None and b is None:
                return None
            return (0.0 if a is None else a) - (0.0 if b is None else b)

        return LinearData(self.f - other.f, self.g - other.g, self.h - other.h, self.v0 - other.v0,
                          diff(self.pressure_source, other.pressure_source),
                          diff(self.g_rate0, other.g_rate0))


@dataclass
class StepResidual:
    time: float
    linear: float
    momentum: float
    a_divergence: float
    stress: float


@dataclass(frozen=True, eq=False)
class LinearSolution:
    times: np.ndarray
    v: np.ndarray
    q: np.ndarray
    initial_rate: np.ndarray
    residuals: List[StepResidual] = field(default_factory=list)

    def energy(self, dom: DiscreteDomain) -> np.ndarray:
        """Weighted energy sum |v|^2 W / Q2 per time."""
        return np.array([dom.inner(v, v) for v in self.v])


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

def _masks(dom: DiscreteDomain) -> Tuple[sparse.spmatrix, sparse.spmatrix]:
    interior = np.zeros(dom.size)
    interior[dom.interior_index] = 1.0
    return sparse.diags(interior), sparse.diags(1.0 - interior)


def _boundary_embed(dom: DiscreteDomain, rows: sparse.spmatrix) -> sparse.csr_matrix:
    """Place rows defined on boundary nodes into full n-row blocks."""
    P = sparse.csr_matrix((np.ones(len(dom.boundary_index)), (dom.boundary_index, np.arange(len(dom.boundary_index)))),
                          shape=(dom.size, len(dom.boundary_index)))
    return (P @ rows).tocsr()


def system_matrix(dom: DiscreteDomain, sigma: float) -> sparse.csr_matrix:
    """Stationary saddle-point matrix for unknowns [v1, v2, q]."""
    n = dom.size
    P_in, _ = _masks(dom)
    Q2L = (sparse.diags(dom.Q2) @ dom.L).tocsr()
    momentum = P_in @ (sigma * sparse.identity(n) - Q2L)
    tangential = _boundary_embed(dom, -dom.stress_rows(dom.m_perp, dom.m))
    adiv = _boundary_embed(dom, dom.B[dom.boundary_index])
    normal = _boundary_embed(dom, -dom.stress_rows(dom.m, dom.m))
    lap_v = -P_in @ dom.B @ sparse.block_diag([Q2L, Q2L])
    norm2 = np.zeros(n)
    norm2[dom.boundary_index] = dom.m_norm2
    AT = dom.ATgrad
    return sparse.bmat([
        [momentum + tangential[:, :n], tangential[:, n:], P_in @ AT[:n]],
        [adiv[:, :n], momentum + adiv[:, n:], P_in @ AT[n:]],
        [lap_v[:, :n] + normal[:, :n], lap_v[:, n:] + normal[:, n:], P_in @ Q2L + sparse.diags(norm2)],
    ], format="csr")


def system_rhs(dom: DiscreteDomain, sigma: float, f: np.ndarray, g: np.ndarray, h: np.ndarray,
               v_prev: Optional[np.ndarray] = None, source=0.0) -> np.ndarray:
    n, bi = dom.size, dom.boundary_index
    forcing = np.array(f, dtype=float, copy=True)
    if v_prev is not None:
        forcing = forcing + sigma * v_prev
    b = np.zeros(3 * n)
    b[:2 * n] = forcing.reshape(-1)
    b[bi] = np.sum(h * dom.m_perp, axis=0)
    b[n + bi] = g[bi]
    pressure = dom.B @ forcing.reshape(-1) - sigma * g + source
    b[2 * n:] = pressure
    b[2 * n + bi] = np.sum(h * dom.m, axis=0)
    return b


def stationary_solve(dom: DiscreteDomain, sigma: float, f: np.ndarray, g: np.ndarray, h: np.ndarray,
                     v_prev: Optional[np.ndarray] = None, source=0.0) -> Tuple[np.ndarray, np.ndarray]:
    b = system_rhs(dom, sigma, f, g, h, v_prev, source)
    x = dom.solve(("stokes", float(sigma)), lambda: system_matrix(dom, sigma), b)
    n = dom.size
    return x[:2 * n].reshape(2, n), x[2 * n:]


def resolvent_solve(dom: DiscreteDomain, lam: float, rhs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(lam + 1) v - Q2 L v + A^T grad q = R rhs with zero A-divergence and zero stress."""
    if lam < 0:
        raise OutOfRange(f"Resolvent parameter must be >= 0, got {lam}")
    n, nb = dom.size, len(dom.boundary_index)
    projected = dom.project_R(rhs)
    return stationary_solve(dom, lam + 1.0, projected, np.zeros(n), np.zeros((2, nb)))


# ---------------------------------------------------------------------------
# Time marching
# ---------------------------------------------------------------------------

def traction(dom: DiscreteDomain, v: np.ndarray, q: np.ndarray) -> np.ndarray:
    return dom.boundary_stress(v, q)


def compatibility_defect(dom: DiscreteDomain, data: LinearData) -> Tuple[float, float]:
    """Boundary-row defects of v0 against g(0) and the tangential part of h(0)."""
    bi = dom.boundary_index
    adiv = dom.a_divergence(data.v0)[bi] - data.g[0][bi]
    tang = -tangential_stress(dom, data.v0) * dom.m_norm2 - np.sum(data.h[0] * dom.m_perp, axis=0)
    return float(np.max(np.abs(adiv))), float(np.max(np.abs(tang)))


def _data_scale(data: LinearData) -> float:
    return max(1.0, float(np.max(np.abs(data.v0))), float(np.max(np.abs(data.g[0]))),
               float(np.max(np.abs(data.h[0]))))


def check_data(dom: DiscreteDomain, data: LinearData, tol: float = COMPAT_TOL) -> None:
    adiv, tang = compatibility_defect(dom, data)
    scale = _data_scale(data)
    if max(adiv, tang) > tol * scale:
        raise CompatibilityViolated(
            f"Initial data incompatible: A-divergence defect {adiv:.3e}, tangential stress defect {tang:.3e}"
        )


def initial_pressure(dom: DiscreteDomain, grid: TimeGrid, data: LinearData) -> np.ndarray:
    """Quasi-static pressure at t = 0 from the pressure equation with v = v0."""
    v0 = data.v0
    g_rate = data.g_rate0 if data.g_rate0 is not None else (data.g[1] - data.g[0]) / grid.dt
    lap_v = np.stack([dom.Q2 * (dom.L @ c) for c in v0])
    rhs = dom.B @ (data.f[0] + lap_v).reshape(-1) - g_rate + data.source(0)
    datum = (dom.normal_stress_datum(v0) * dom.m_norm2 + np.sum(data.h[0] * dom.m, axis=0)) / dom.m_norm2
    return dom.solve_weighted_poisson(rhs, datum)


def momentum_operator(dom: DiscreteDomain, v: np.ndarray, q: np.ndarray) -> np.ndarray:
    """-Q2 L v + A^T grad q at every node."""
    return -np.stack([dom.Q2 * (dom.L @ c) for c in v]) + dom.a_transpose_gradient(q)


def evolve(dom: DiscreteDomain, grid: TimeGrid, data: LinearData, compat_tol: float = COMPAT_TOL,
           check: bool = True) -> LinearSolution:
    """Backward-Euler march of the linear system with residuals per step."""
    if check:
        check_data(dom, data, compat_tol)
    sigma = 1.0 / grid.dt
    times = grid.times
    nt = grid.steps + 1
    v = np.zeros((nt, 2, dom.size))
    q = np.zeros((nt, dom.size))
    v[0] = data.v0
    q[0] = initial_pressure(dom, grid, data)
    rate = data.f[0] - momentum_operator(dom, v[0], q[0])
    residuals = []
    for k in range(1, nt):
        v[k], q[k] = stationary_solve(dom, sigma, data.f[k], data.g[k], data.h[k], v[k - 1], data.source(k))
        residuals.append(step_residual(dom, sigma, times[k], v[k], q[k], v[k - 1], data, k))
        logger.debug(f"Step {k}/{nt - 1}: momentum {residuals[-1].momentum:.3e}, "
                     f"stress {residuals[-1].stress:.3e}")
    return LinearSolution(times, v, q, rate, residuals)


def step_residual(dom: DiscreteDomain, sigma: float, t: float, v: np.ndarray, q: np.ndarray,
                  v_prev: np.ndarray, data: LinearData, k: int) -> StepResidual:
    ii = dom.interior_index
    mom = sigma * (v - v_prev) + momentum_operator(dom, v, q) - data.f[k]
    adiv = dom.a_divergence(v) - data.g[k]
    stress = traction(dom, v, q) - data.h[k]
    b = system_rhs(dom, sigma, data.f[k], data.g[k], data.h[k], v_prev, data.source(k))
    lu = dom.factor(("stokes", float(sigma)), lambda: system_matrix(dom, sigma))
    x = np.concatenate([v.reshape(-1), q])
    linear = np.linalg.norm(lu.matrix @ x - b) / max(np.linalg.norm(b), 1e-300)
    return StepResidual(t, float(linear), float(np.max(np.abs(mom[:, ii]))),
                        float(np.max(np.abs(adiv))), float(np.max(np.abs(stress))))


def operator_data(dom: DiscreteDomain, grid: TimeGrid, v: np.ndarray, q: np.ndarray) -> LinearData:
    """Data that the histories (v, q) satisfy exactly under the discrete scheme."""
    sigma = 1.0 / grid.dt
    nt = grid.steps + 1
    n = dom.size
    f = np.zeros((nt, 2, n))
    g = np.array([dom.a_divergence(vk) for vk in v])
    h = np.array([traction(dom, v[k], q[k]) for k in range(nt)])
    source = np.zeros((nt, n))
    ii = dom.interior_index
    for k in range(nt):
        if k == 0:
            f[0] = sigma * (v[1] - v[0]) + momentum_operator(dom, v[0], q[0])
            continue
        f[k] = sigma * (v[k] - v[k - 1]) + momentum_operator(dom, v[k], q[k])
        lap_v = np.stack([dom.Q2 * (dom.L @ c) for c in v[k]])
        lhs = dom.Q2 * (dom.L @ q[k]) - dom.B @ lap_v.reshape(-1)
        rhs = dom.B @ (f[k] + sigma * v[k - 1]).reshape(-1) - sigma * g[k]
        source[k, ii] = (lhs - rhs)[ii]
    g_rate0 = sigma * (g[1] - g[0])
    lap_v0 = np.stack([dom.Q2 * (dom.L @ c) for c in v[0]])
    lhs0 = dom.Q2 * (dom.L @ q[0])
    rhs0 = dom.B @ (f[0] + lap_v0).reshape(-1) - g_rate0
    source[0, ii] = (lhs0 - rhs0)[ii]
    return LinearData(f, g, h, v[0].copy(), source, None)


# ---------------------------------------------------------------------------
# Data reduction
# ---------------------------------------------------------------------------

def stream_lift(dom: DiscreteDomain, eta: np.ndarray, builder: Optional[ChartStream] = None,
                tol: float = COMPAT_TOL) -> np.ndarray:
    """w = -J A^T grad psi with psi = d_n psi = 0 and m_perp . S(w) m = eta on the boundary.

    psi = -eta lam^2 / 2 times the chart cutoff, per time level; eta has shape
    (nt+1, nb) on the boundary nodes.
    """
    eta = np.atleast_2d(np.asarray(eta, dtype=float))
    builder = builder or ChartStream(dom)
    scale = max(1.0, float(np.max(np.abs(eta))))
    if np.max(np.abs(eta[0])) > tol * scale:
        raise CompatibilityViolated(f"Stress lift needs eta(0) = 0, got {np.max(np.abs(eta[0])):.3e}")
    w = np.zeros((len(eta), 2, dom.size))
    zero = np.zeros(eta.shape[1])
    for k, row in enumerate(eta):
        if not np.any(row):
            continue
        # m_perp . S(w) m = -d_n^2 psi when psi and d_n psi vanish on the boundary
        _, grad = builder.field(zero, -row, base=0.0)
        w[k] = perp_velocity(dom, grad)
    return w


@dataclass
class Reduction:
    """Outcome of the four-step reduction.

    v4, q4: the constructed part; residual: what remains to be solved, with
    zero initial velocity and vanishing g, h at t = 0 (to scheme order).
    """
    v4: np.ndarray
    q4: np.ndarray
    residual: LinearData
    diagnostics: Dict[str, float] = field(default_factory=dict)


def reduce_data(dom: DiscreteDomain, grid: TimeGrid, data: LinearData, builder: Optional[ChartStream] = None,
                compat_tol: float = COMPAT_TOL) -> Reduction:
    check_data(dom, data, compat_tol)
    t = grid.times
    nt = grid.steps + 1
    bi = dom.boundary_index
    diag: Dict[str, float] = {}

    # 1: match the t = 0 traces
    q0 = initial_pressure(dom, grid, data)
    rate = data.f[0] - momentum_operator(dom, data.v0, q0)
    lift = t * np.exp(-t ** 2)
    v1 = data.v0[None] + lift[:, None, None] * rate[None]
    q1 = np.repeat(q0[None], nt, axis=0)

    # 2: A-divergence, measured against its t = 0 value
    defect = np.array([data.g[k] - dom.a_divergence(v1[k]) for k in range(nt)])
    offset = defect[0].copy()
    defect -= offset
    v2 = v1.copy()
    for k in range(1, nt):
        if np.any(defect[k]):
            v2[k] = v1[k] + dom.a_transpose_gradient(dom.lift_potential(defect[k]))
    diag["step2_a_divergence"] = float(max(np.max(np.abs(dom.a_divergence(v2[k]) - data.g[k] + offset))
                                           for k in range(nt)))

    # 3: tangential stress
    tang_target = -np.sum(data.h * dom.m_perp[None], axis=1)
    current = np.array([tangential_stress(dom, v2[k]) * dom.m_norm2 for k in range(nt)])
    eta = tang_target - current
    eta -= eta[0]
    w = stream_lift(dom, eta, builder)
    v3 = v2 + w
    diag["step3_tangential"] = float(np.max(np.abs(
        np.array([tangential_stress(dom, w[k]) * dom.m_norm2 for k in range(nt)]) - eta)))
    diag["step3_w0"] = float(np.max(np.abs(w[0])))
    diag["step3_a_divergence"] = float(max(np.max(np.abs(dom.a_divergence(wk))) for wk in w))

    # 4: normal stress by a harmonic pressure shift
    q4 = q1.copy()
    zero = np.zeros(dom.size)
    for k in range(nt):
        target = np.sum(data.h[k] * dom.m, axis=0) / dom.m_norm2 + dom.normal_stress_datum(v3[k])
        bc = target - q1[k][bi]
        if np.any(bc):
            q4[k] = q1[k] + dom.solve_weighted_poisson(zero, bc)
    v4 = v3
    stress = np.array([traction(dom, v4[k], q4[k]) - data.h[k] for k in range(nt)])
    diag["step4_normal_stress"] = float(np.max(np.abs(np.sum(stress * dom.m[None], axis=1))))

    residual = data - operator_data(dom, grid, v4, q4)
    diag["residual_v0"] = float(np.max(np.abs(residual.v0)))
    diag["residual_g0"] = float(np.max(np.abs(residual.g[0])))
    diag["residual_h0"] = float(np.max(np.abs(residual.h[0])))
    diag["residual_Rf0"] = float(np.max(np.abs(dom.project_R(residual.f[0]))))
    logger.info("Reduction: " + ", ".join(f"{k}={v:.3e}" for k, v in diag.items()))
    return Reduction(v4, q4, residual, diag)


def manufactured_data(dom: DiscreteDomain, grid: TimeGrid, velocity, pressure) -> LinearData:
    """Continuous data of analytic (v, q) for convergence studies.

    velocity(t, x, y) returns (v, grad v, lap v, v_t) with shapes (2, n),
    (2, 2, n), (2, n), (2, n); pressure(t, x, y) returns (q, grad q).
    """
    x, y = dom.nodes.real, dom.nodes.imag
    bi = dom.boundary_index
    nt = grid.steps + 1
    f = np.zeros((nt, 2, dom.size))
    g = np.zeros((nt, dom.size))
    h = np.zeros((nt, 2, len(bi)))
    for k, tk in enumerate(grid.times):
        v, grad_v, lap_v, v_t = velocity(tk, x, y)
        q, grad_q = pressure(tk, x, y)
        at_grad_q = np.einsum("nki,kn->in", dom.A, grad_q)
        f[k] = v_t - dom.Q2 * lap_v + at_grad_q
        GA = np.einsum("ikn,nkj->ijn", grad_v, dom.A)
        g[k] = np.einsum("iin->n", GA)
        S = (GA + np.swapaxes(GA, 0, 1))[:, :, bi]
        h[k] = q[bi] * dom.m - np.einsum("ijn,jn->in", S, dom.m)
    v0 = velocity(0.0, x, y)[0]
    return LinearData(f, g, h, v0, None, None)


def with_exact_start(data: LinearData, dom: DiscreteDomain) -> LinearData:
    """Same data with v0 corrected so the discrete boundary rows hold at t = 0."""
    return replace(data, v0=enforce_compatibility(dom, data.v0, data.g[0], data.h[0]))
