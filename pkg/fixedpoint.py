#!/usr/bin/env python3
"""
Picard Iteration on the Fixed Lagrangian Domain
===============================================

Unknowns are v = w + phi, q = q_w + q_phi and the flow X with
dX/dt = A(X) v. phi is an explicit lift of v0 that makes every iterate
w vanish to second order at t = 0. Each iteration:

1. assembles the data (f, g, h) of the linear system from the previous
   iterate: the gap between the moved-frame operators (zeta, A(X)) and the
   frozen ones, plus the corrector's own defect
2. solves the linear system for (w, q_w)
3. integrates the new flow with the trapezoid rule, A evaluated
   analytically at the moved points

Operators on both sides of each gap go through the same code path, so an
identity flow gives exactly zero iterate data.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union

import numpy as np

from config import PicardSettings
from conformal import J
from elliptic import DiscreteDomain
from errors import FoldingDetected, NoContraction, ResolutionLost
from initdata import InitialVelocity
from norms import DomainNorms
from stokes_linear import LinearData, LinearSolution, TimeGrid, evolve, operator_data

logger = logging.getLogger(__name__)

COND_LIMIT = 1e8
IDENTITY = np.eye(2)


def lift_profile(t):
    """t exp(-t^2) and its derivative."""
    e = np.exp(-np.asarray(t, dtype=float) ** 2)
    return t * e, (1.0 - 2.0 * t ** 2) * e


# ---------------------------------------------------------------------------
# Corrector
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Corrector:
    """phi = v0 + t e^{-t^2} rate with rate = Q2 L v0 - A^T grad q_phi.

    zeta_phi = I - t e^{-t^2} grad(A v0), A_phi = A + t e^{-t^2} d_k A (A v0)_k.
    """
    v0: np.ndarray
    q_phi: np.ndarray
    rate: np.ndarray
    grad_Av0: np.ndarray
    dA_along: np.ndarray
    A: np.ndarray

    def phi(self, t: float) -> np.ndarray:
        return self.v0 + lift_profile(t)[0] * self.rate

    def phi_t(self, t: float) -> np.ndarray:
        return lift_profile(t)[1] * self.rate

    def zeta(self, t: float) -> np.ndarray:
        """(2, 2, n)."""
        return IDENTITY[:, :, None] - lift_profile(t)[0] * self.grad_Av0

    def A_phi(self, t: float) -> np.ndarray:
        """(n, 2, 2)."""
        return self.A + lift_profile(t)[0] * self.dA_along


def build_corrector(dom: DiscreteDomain, v0: Union[InitialVelocity, np.ndarray]) -> Corrector:
    v0 = v0.v0 if isinstance(v0, InitialVelocity) else np.asarray(v0, dtype=float)
    q_phi = dom.corrector_pressure(v0)
    rate = np.stack([dom.Q2 * (dom.L @ c) for c in v0]) - dom.a_transpose_gradient(q_phi)
    Av0 = np.einsum("nij,jn->in", dom.A, v0)
    grad_Av0 = dom.velocity_gradient(Av0)
    dA_along = np.einsum("nkij,kn->nij", dom.dA, Av0)
    logger.debug(f"Corrector: max|q_phi| = {np.max(np.abs(q_phi)):.4g}, max|rate| = {np.max(np.abs(rate)):.4g}")
    return Corrector(v0, q_phi, rate, grad_Av0, dA_along, dom.A)


# ---------------------------------------------------------------------------
# Flow map
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FlowMap:
    """Positions X(alpha, t) of the domain nodes, shape (nt+1, n) complex.

    X(0) is the node set; a translated start is carried by the domain's
    frame offset.
    """
    times: np.ndarray
    X: np.ndarray

    @classmethod
    def identity(cls, dom: DiscreteDomain, times: np.ndarray) -> "FlowMap":
        return cls(np.asarray(times), np.repeat(dom.nodes[None], len(times), axis=0))

    def displacement(self, dom: DiscreteDomain) -> np.ndarray:
        d = self.X - dom.nodes[None]
        return np.stack([d.real, d.imag], axis=1)

    def boundary(self, dom: DiscreteDomain, k: int) -> np.ndarray:
        return self.X[k, dom.boundary_index]


def flow_jacobian(dom: DiscreteDomain, X: np.ndarray) -> np.ndarray:
    """grad X = I + D(X - alpha), shape (2, 2, n)."""
    d = X - dom.nodes
    disp = np.stack([d.real, d.imag])
    return IDENTITY[:, :, None] + dom.velocity_gradient(disp)


def inverse_jacobian(F: np.ndarray) -> np.ndarray:
    """zeta = (grad X)^-1 per node with folding and conditioning guards."""
    a, b, c, d = F[0, 0], F[0, 1], F[1, 0], F[1, 1]
    det = a * d - b * c
    if np.any(det <= 0):
        worst = int(np.argmin(det))
        raise FoldingDetected(f"Flow map folds at node {worst}: det grad X = {det[worst]:.3e}")
    cond = np.linalg.cond(np.moveaxis(F, -1, 0))
    if np.any(cond > COND_LIMIT):
        raise ResolutionLost(f"grad X condition number {np.max(cond):.3e} exceeds {COND_LIMIT:.0e}")
    return np.stack([np.stack([d, -b]), np.stack([-c, a])]) / det


def grad_j(F: np.ndarray) -> np.ndarray:
    """-J grad X J per node, the cofactor matrix."""
    return -np.einsum("ij,jkn,kl->iln", J, F, J)


def flow_update(dom: DiscreteDomain, grid: TimeGrid, X_prev: FlowMap, v_prev: np.ndarray) -> FlowMap:
    """X(t) = alpha + int_0^t A(X_prev) v_prev by the trapezoid rule."""
    nt = grid.steps + 1
    velocity = np.empty((nt, dom.size), dtype=complex)
    for k in range(nt):
        A = dom.frames_at(X_prev.X[k]).A
        Av = np.einsum("nij,jn->in", A, v_prev[k])
        velocity[k] = Av[0] + 1j * Av[1]
    X = np.empty_like(velocity)
    X[0] = dom.nodes
    increments = 0.5 * grid.dt * (velocity[1:] + velocity[:-1])
    X[1:] = dom.nodes[None] + np.cumsum(increments, axis=0)
    for k in range(1, nt):
        inverse_jacobian(flow_jacobian(dom, X[k]))
    return FlowMap(X_prev.times, X)


# ---------------------------------------------------------------------------
# Right-hand sides
# ---------------------------------------------------------------------------

def _lagrangian_laplacian(dom: DiscreteDomain, v: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    """zeta_kj d_k (zeta_lj d_l v) per component."""
    G = dom.velocity_gradient(v)
    Gz = np.einsum("iln,ljn->ijn", G, zeta)
    out = np.zeros_like(v)
    for i in range(2):
        for j in range(2):
            dG = dom.gradient(Gz[i, j])
            out[i] += zeta[0, j] * dG[0] + zeta[1, j] * dG[1]
    return out


def _pressure_gradient(dom: DiscreteDomain, q: np.ndarray, zeta: np.ndarray, A: np.ndarray) -> np.ndarray:
    """(zeta A)^T grad q."""
    M = np.einsum("kjn,nji->kin", zeta, A)
    return np.einsum("kin,kn->in", M, dom.gradient(q))


def _trace(G: np.ndarray, zeta: np.ndarray, A: np.ndarray) -> np.ndarray:
    """Tr(G zeta A)."""
    M = np.einsum("kjn,nji->kin", zeta, A)
    return np.einsum("ikn,kin->n", G, M)


def _traction(dom: DiscreteDomain, q: np.ndarray, G: np.ndarray, zeta: np.ndarray, A: np.ndarray,
              normal: np.ndarray) -> np.ndarray:
    """(q I - (G zeta A + (G zeta A)^T)) normal at the boundary nodes."""
    bi = dom.boundary_index
    M = np.einsum("kjn,nji->kin", zeta[:, :, bi], A[bi])
    GM = np.einsum("ikn,kjn->ijn", G[:, :, bi], M)
    S = GM + np.swapaxes(GM, 0, 1)
    return q[bi] * normal - np.einsum("ijn,jn->in", S, normal)


def _frame_normal(dom: DiscreteDomain, Ainv: np.ndarray, cof: np.ndarray) -> np.ndarray:
    """A^-1 (grad_J X) n~_0 at the boundary nodes."""
    bi = dom.boundary_index
    moved = np.einsum("ijn,jn->in", cof[:, :, bi], dom.normal_tilde)
    return np.einsum("nij,jn->in", Ainv[bi], moved)


@dataclass(frozen=True, eq=False)
class IterationState:
    """One Picard iterate; w and q_w are time histories."""
    n: int
    w: np.ndarray
    q_w: np.ndarray
    X: FlowMap

    @classmethod
    def seed(cls, dom: DiscreteDomain, grid: TimeGrid) -> "IterationState":
        nt = grid.steps + 1
        return cls(0, np.zeros((nt, 2, dom.size)), np.zeros((nt, dom.size)), FlowMap.identity(dom, grid.times))

    def velocity(self, corr: Corrector, times: np.ndarray) -> np.ndarray:
        return np.array([self.w[k] + corr.phi(t) for k, t in enumerate(times)])


@dataclass(frozen=True, eq=False)
class AssembledData:
    """Iterate part and corrector part of the linear data.

    f_iter, g_iter, h_iter: the moved-frame gaps with v = w + phi.
    g_bar: g_iter with the zeta_phi / A_phi split of the phi terms.
    f_phi, g_phi, h_phi: the corrector defects.
    """
    f_iter: np.ndarray
    g_iter: np.ndarray
    h_iter: np.ndarray
    g_bar: np.ndarray
    f_phi: np.ndarray
    g_phi: np.ndarray
    h_phi: np.ndarray

    def linear_data(self) -> LinearData:
        nt, _, n = self.f_iter.shape
        return LinearData(
            f=self.f_iter + self.f_phi,
            g=self.g_bar + self.g_phi,
            h=self.h_iter + self.h_phi,
            v0=np.zeros((2, n)),
            g_rate0=np.zeros(n),
        )


def assemble_rhs(dom: DiscreteDomain, grid: TimeGrid, state: IterationState, corr: Corrector) -> AssembledData:
    nt, n = grid.steps + 1, dom.size
    nb = len(dom.boundary_index)
    eye = np.repeat(IDENTITY[:, :, None], n, axis=2)
    cof_id = grad_j(eye)
    normal_lin = _frame_normal(dom, dom.Ainv, cof_id)
    G0 = dom.velocity_gradient(corr.v0)
    lap_rate = np.stack([dom.Q2 * (dom.L @ c) for c in corr.rate])

    f_iter = np.zeros((nt, 2, n))
    g_iter = np.zeros((nt, n))
    g_bar = np.zeros((nt, n))
    h_iter = np.zeros((nt, 2, nb))
    f_phi = np.zeros((nt, 2, n))
    g_phi = np.zeros((nt, n))
    h_phi = np.zeros((nt, 2, nb))
    zero_q = np.zeros(n)

    for k, t in enumerate(grid.times):
        phi = corr.phi(t)
        v = state.w[k] + phi
        q = state.q_w[k] + corr.q_phi
        frames = dom.frames_at(state.X.X[k])
        F = flow_jacobian(dom, state.X.X[k])
        zeta = inverse_jacobian(F)
        G = dom.velocity_gradient(v)
        Gphi = dom.velocity_gradient(phi)

        visc = frames.Q2 * _lagrangian_laplacian(dom, v, zeta) - dom.Q2 * _lagrangian_laplacian(dom, v, eye)
        press = _pressure_gradient(dom, q, zeta, frames.A) - _pressure_gradient(dom, q, eye, dom.A)
        f_iter[k] = visc - press
        g_iter[k] = _trace(G, eye, dom.A) - _trace(G, zeta, frames.A)
        zeta_phi, A_phi = corr.zeta(t), corr.A_phi(t)
        g_bar[k] = g_iter[k] + _trace(Gphi, zeta_phi, A_phi) - _trace(Gphi, eye, dom.A)
        normal_x = _frame_normal(dom, frames.Ainv, grad_j(F))
        h_iter[k] = _traction(dom, q, G, eye, dom.A, normal_lin) - _traction(dom, q, G, zeta, frames.A, normal_x)

        # corrector defects, measured from their t = 0 values
        lift, dlift = lift_profile(t)
        f_phi[k] = (1.0 - dlift) * corr.rate + lift * lap_rate
        g_phi[k] = _trace(G0, eye, dom.A) - _trace(Gphi, zeta_phi, A_phi)
        h_phi[k] = (_traction(dom, zero_q, G0, eye, dom.A, normal_lin)
                    - _traction(dom, zero_q, Gphi, eye, dom.A, normal_lin))
    return AssembledData(f_iter, g_iter, h_iter, g_bar, f_phi, g_phi, h_phi)


# ---------------------------------------------------------------------------
# Iteration
# ---------------------------------------------------------------------------

@dataclass
class PicardRecord:
    iteration: int
    dw: float
    dq: float
    dX: float
    combined: float
    factor: float
    wall_time: float


@dataclass
class PicardResult:
    state: IterationState
    corrector: Corrector
    history: List[PicardRecord] = field(default_factory=list)
    converged: bool = False
    reference_norm: float = 0.0
    solution: Optional[LinearSolution] = None

    @property
    def factors(self) -> List[float]:
        return [r.factor for r in self.history if np.isfinite(r.factor)]

    def contraction_factor(self) -> float:
        """Largest factor over the last half of the iteration."""
        factors = self.factors
        if not factors:
            return 0.0
        return float(max(factors[len(factors) // 2:]))

    def geometric_tail(self) -> bool:
        """Every ratio over the last half of the run is below one."""
        return self.contraction_factor() < 1.0

    def tail_bound(self) -> float:
        """A-posteriori bound on the distance to the fixed point from the last factor."""
        factors = self.factors
        if not factors or factors[-1] >= 1.0:
            return float("inf")
        last = factors[-1]
        return self.history[-1].combined * last / (1.0 - last)

    def velocity(self, times: np.ndarray) -> np.ndarray:
        return self.state.velocity(self.corrector, times)

    def pressure(self) -> np.ndarray:
        return self.state.q_w + self.corrector.q_phi[None]


class DifferenceNorm:
    """Combined discrete norm of successive iterate differences."""

    def __init__(self, dom: DiscreteDomain, settings: PicardSettings):
        self.dom = dom
        self.norms = DomainNorms(dom, s=settings.s, n_box=settings.n_box)

    def __call__(self, grid: TimeGrid, old: IterationState, new: IterationState) -> Dict[str, float]:
        dw = new.w - old.w
        dq = new.q_w - old.q_w
        dX = new.X.displacement(self.dom) - old.X.displacement(self.dom)
        T = grid.T
        parts = {
            "dw": self.norms.velocity(dw, T) if np.any(dw) else 0.0,
            "dq": self.norms.pressure(dq, T).total if np.any(dq) else 0.0,
            "dX": self.norms.flow(dX, T) if np.any(dX) else 0.0,
        }
        parts["combined"] = parts["dw"] + parts["dq"] + parts["dX"]
        return parts


def picard_run(dom: DiscreteDomain, grid: TimeGrid, v0: Union[InitialVelocity, np.ndarray],
               settings: Optional[PicardSettings] = None, norm: Optional[DifferenceNorm] = None,
               corrector: Optional[Corrector] = None) -> PicardResult:
    """Iterate from w = 0, q_w = 0, X = alpha until successive differences fall below tol.

    The threshold is tol * max(1, norm of the first iterate).
    """
    settings = settings or PicardSettings()
    norm = norm or DifferenceNorm(dom, settings)
    corr = corrector or build_corrector(dom, v0)
    state = IterationState.seed(dom, grid)
    result = PicardResult(state, corr)
    previous = None
    stalled = 0
    for it in range(1, settings.max_iter + 1):
        start = time.time()
        data = assemble_rhs(dom, grid, state, corr).linear_data()
        solution = evolve(dom, grid, data)
        X_new = flow_update(dom, grid, state.X, state.velocity(corr, grid.times))
        new = IterationState(it, solution.v, solution.q, X_new)
        diff = norm(grid, state, new)
        if it == 1:
            result.reference_norm = diff["combined"]
        factor = diff["combined"] / previous if previous else float("nan")
        record = PicardRecord(it, diff["dw"], diff["dq"], diff["dX"], diff["combined"], factor, time.time() - start)
        result.history.append(record)
        result.state, result.solution = new, solution
        state = new
        logger.info(f"Picard {it}: difference {diff['combined']:.3e}, factor {factor:.3f}")

        if diff["combined"] <= settings.tol * max(1.0, result.reference_norm):
            result.converged = True
            break
        stalled = stalled + 1 if np.isfinite(factor) and factor > 1.0 else 0
        if stalled >= settings.stall_limit:
            raise NoContraction(
                f"Contraction factor above 1 for {stalled} consecutive iterations; shorten T", result.history
            )
        previous = diff["combined"]
    if not result.converged:
        logger.warning(f"Picard stopped after {settings.max_iter} iterations without reaching tol")
    return result


@dataclass
class NonlinearResidual:
    linear: Dict[str, float]
    flow: float

    @property
    def total(self) -> float:
        return max(max(self.linear.values()), self.flow)


def nonlinear_residual(dom: DiscreteDomain, grid: TimeGrid, result: PicardResult) -> NonlinearResidual:
    """Re-assemble the fixed-point residual of a converged iterate.

    Compares the data that (w, q_w) satisfy under the linear scheme with
    the data assembled from (w, q_w, X), and X with its own flow update.
    """
    state, corr = result.state, result.corrector
    own = operator_data(dom, grid, state.w, state.q_w)
    assembled = assemble_rhs(dom, grid, state, corr).linear_data()
    gap = assembled - own
    linear = {
        "f": float(np.max(np.abs(gap.f[1:][:, :, dom.interior_index]))),
        "g": float(np.max(np.abs(gap.g[1:][:, dom.boundary_index]))),
        "h": float(np.max(np.abs(gap.h[1:]))),
    }
    X_again = flow_update(dom, grid, state.X, state.velocity(corr, grid.times))
    flow = float(np.max(np.abs(X_again.X - state.X.X)))
    return NonlinearResidual(linear, flow)
