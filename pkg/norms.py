#!/usr/bin/env python3
"""
Discrete Space-Time Sobolev Norms
=================================

Fractional norms are Fourier multipliers on a periodic box:

    ||f||^2 = (prod L) / (prod n)^2 * sum_k (1 + |xi_k|^2)^s |F_k|^2,
    xi_k = 2 pi k / L

Time histories on [0, T] are extended by even reflection to period 2T, and
half the squared norm of the extension is kept. Fields living on the
curvilinear domain are carried to a periodic box by BoxExtension before
any multiplier is applied.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.spatial import Delaunay, cKDTree

from errors import OutOfRange

logger = logging.getLogger(__name__)

TWO_PI = 2 * np.pi


class NormKind(Enum):
    H_HT = "H_ht"
    HBAR_HT = "Hbar_ht"
    F = "F"
    LINF_QUARTER = "LinfQuarter"
    SOBOLEV_SPATIAL = "SobolevSpatial"
    SOBOLEV_TEMPORAL = "SobolevTemporal"


@dataclass(frozen=True)
class NormSpec:
    """Which norm to take; gamma only matters for the flow-map norm."""
    kind: NormKind
    s: float
    gamma: Optional[float] = None
    T: float = 1.0
    epsilon: float = 0.05

    def __post_init__(self):
        if self.kind is NormKind.F:
            gamma = self.s - 1.0 - self.epsilon if self.gamma is None else self.gamma
            if not (self.s - 1.0 - self.epsilon - 1e-12 <= gamma < self.s - 1.0):
                raise OutOfRange(f"gamma={gamma} outside (s-1-eps, s-1) for s={self.s}")
            object.__setattr__(self, "gamma", gamma)
        if self.T <= 0:
            raise OutOfRange("Time horizon must be positive")


def _frequencies(n: int, length: float) -> np.ndarray:
    return TWO_PI * np.fft.fftfreq(n, d=length / n)


def spatial_sobolev_norm(samples: np.ndarray, s: float,
                         lengths: Optional[Sequence[float]] = None) -> float:
    """H^s norm of periodic samples on a box (default side 2 pi)."""
    samples = np.asarray(samples)
    if lengths is None:
        lengths = [TWO_PI] * samples.ndim
    return mixed_norm(samples[None], 0.0, s, T=None, lengths=lengths)


def reflect_in_time(history: np.ndarray) -> np.ndarray:
    """Even extension of a uniform history on [0, T] to a 2T-periodic one."""
    if history.shape[0] < 2:
        return history
    return np.concatenate([history, history[-2:0:-1]], axis=0)


def mixed_norm(history: np.ndarray, r_t: float, s_x: float, T: Optional[float],
               lengths: Sequence[float], vector: bool = False) -> float:
    """H^{r_t}([0,T]; H^{s_x}) norm of a uniformly sampled history.

    history has shape (nt, *space) or, with vector=True, (nt, c, *space)
    where the c components are summed in the squared norm. T=None drops the
    time axis and uses history[0].
    """
    history = np.asarray(history, dtype=float)
    timed = T is not None
    data = reflect_in_time(history) if timed else history[0]
    first_space = int(timed) + int(vector)
    fft_axes = ((0,) if timed else ()) + tuple(range(first_space, data.ndim))
    spectrum = np.fft.fftn(data, axes=fft_axes) if fft_axes else data
    power = np.abs(spectrum) ** 2
    if vector:
        power = power.sum(axis=int(timed))

    weight = np.ones(power.shape)
    factor = 1.0
    if timed:
        n_ext = power.shape[0]
        xi_t = _frequencies(n_ext, 2 * T)
        weight = weight * ((1.0 + xi_t ** 2) ** r_t).reshape((-1,) + (1,) * (power.ndim - 1))
        factor *= 0.5 * (2 * T) / n_ext ** 2
    xi2 = np.zeros(power.shape)
    for k, length in enumerate(lengths):
        axis = int(timed) + k
        n = power.shape[axis]
        shape = [1] * power.ndim
        shape[axis] = n
        xi2 = xi2 + (_frequencies(n, length) ** 2).reshape(shape)
        factor *= length / n ** 2
    weight = weight * (1.0 + xi2) ** s_x
    return float(np.sqrt(max(float(np.sum(power * weight)) * factor, 0.0)))


def temporal_sobolev_norm(history: np.ndarray, r: float, T: float) -> float:
    """H^r([0,T]) norm of a scalar history."""
    return mixed_norm(np.asarray(history, dtype=float), r, 0.0, T, lengths=())


def linf_quarter(history: np.ndarray, times: np.ndarray,
                 slice_norm: Optional[Callable[[np.ndarray], float]] = None) -> float:
    """sup over t > 0 of t^(-1/4) times the slice norm."""
    slice_norm = slice_norm or (lambda a: float(np.sqrt(np.sum(np.asarray(a, dtype=float) ** 2))))
    values = [slice_norm(history[k]) * t ** -0.25 for k, t in enumerate(times) if t > 0]
    return max(values, default=0.0)


def parabolic_norm(history: np.ndarray, spec: NormSpec,
                   lengths: Optional[Sequence[float]] = None, vector: bool = False) -> float:
    """Space-time norm of a history of periodic samples."""
    history = np.asarray(history, dtype=float)
    if not np.any(history):
        return 0.0
    n_space = history.ndim - (2 if vector else 1)
    lengths = list(lengths) if lengths is not None else [TWO_PI] * n_space
    nt = history.shape[0]
    times = np.linspace(0.0, spec.T, nt)
    s = spec.s

    def mixed(r_t: float, s_x: float) -> float:
        return mixed_norm(history, r_t, s_x, spec.T, lengths, vector)

    def slice_norm(order: float) -> Callable[[np.ndarray], float]:
        if n_space == 0:
            return lambda a: float(np.sqrt(np.sum(np.asarray(a) ** 2)))
        return lambda a: mixed_norm(a[None], 0.0, order, None, lengths, vector)

    if spec.kind is NormKind.H_HT:
        return mixed(0.0, s) + mixed(s / 2, 0.0)
    if spec.kind is NormKind.HBAR_HT:
        return mixed(0.0, s) + mixed((s + 1) / 2, -1.0)
    if spec.kind is NormKind.F:
        return linf_quarter(history, times, slice_norm(s + 1)) + mixed(2.0, spec.gamma)
    if spec.kind is NormKind.LINF_QUARTER:
        return linf_quarter(history, times, slice_norm(s))
    if spec.kind is NormKind.SOBOLEV_SPATIAL:
        return mixed(0.0, s)
    if spec.kind is NormKind.SOBOLEV_TEMPORAL:
        return mixed(s, 0.0)
    raise OutOfRange(f"Unsupported norm kind {spec.kind}")


# ---------------------------------------------------------------------------
# Domain fields
# ---------------------------------------------------------------------------

def smoothstep(x: np.ndarray) -> np.ndarray:
    """Quintic 6x^5 - 15x^4 + 10x^3 clipped to [0, 1]."""
    x = np.clip(x, 0.0, 1.0)
    return x ** 3 * (10.0 - 15.0 * x + 6.0 * x * x)


class BoxExtension:
    """Linear map from node values on the domain to samples on a periodic box.

    Box points inside the node hull use barycentric interpolation on a
    Delaunay triangulation of the nodes, points outside take the nearest
    node, and everything is multiplied by a window that is 1 on the domain
    and decays smoothly to 0 well before the box edge.
    """

    def __init__(self, domain, n_box: int = 64, margin: float = 0.3):
        nodes = domain.nodes
        xy = np.column_stack([nodes.real, nodes.imag])
        lo, hi = xy.min(axis=0), xy.max(axis=0)
        extent = hi - lo
        pad = margin * extent.max()
        self.origin = lo - pad
        self.lengths = tuple(float(v) for v in extent + 2 * pad)
        self.n_box = n_box
        gx = self.origin[0] + self.lengths[0] * np.arange(n_box) / n_box
        gy = self.origin[1] + self.lengths[1] * np.arange(n_box) / n_box
        X, Y = np.meshgrid(gx, gy, indexing="ij")
        box = np.column_stack([X.ravel(), Y.ravel()])

        tri = Delaunay(xy)
        simplex = tri.find_simplex(box)
        inside = simplex >= 0
        rows, cols, vals = [], [], []
        if np.any(inside):
            T = tri.transform[simplex[inside]]
            b = np.einsum("nij,nj->ni", T[:, :2], box[inside] - T[:, 2])
            bary = np.column_stack([b, 1.0 - b.sum(axis=1)])
            idx = np.nonzero(inside)[0]
            rows.append(np.repeat(idx, 3))
            cols.append(tri.simplices[simplex[inside]].ravel())
            vals.append(bary.ravel())
        if np.any(~inside):
            _, nearest = cKDTree(xy).query(box[~inside])
            idx = np.nonzero(~inside)[0]
            rows.append(idx)
            cols.append(nearest)
            vals.append(np.ones(len(idx)))
        self.matrix = sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(len(box), len(nodes)),
        )

        boundary = domain.boundary_points
        gap, _ = cKDTree(np.column_stack([boundary.real, boundary.imag])).query(box)
        width = 0.5 * pad
        window = 1.0 - smoothstep(gap / width)
        window[domain.contains(box[:, 0] + 1j * box[:, 1])] = 1.0
        self.window = window
        logger.debug(f"Box extension: {n_box}x{n_box} box, side {self.lengths[0]:.3f} x {self.lengths[1]:.3f}")

    def apply(self, values: np.ndarray) -> np.ndarray:
        """(..., n_nodes) -> (..., n_box, n_box)."""
        values = np.asarray(values, dtype=float)
        lead = values.shape[:-1]
        flat = values.reshape(-1, values.shape[-1])
        out = (self.matrix @ flat.T).T * self.window[None, :]
        return out.reshape(lead + (self.n_box, self.n_box))


@dataclass(frozen=True)
class PressureNorm:
    """Three-term proxy of the pressure-space norm."""
    sup_gradient: float
    gradient_parabolic: float
    boundary_trace: float
    proxy: bool = True

    @property
    def total(self) -> float:
        return self.sup_gradient + self.gradient_parabolic + self.boundary_trace


@dataclass
class NormReport:
    """Norm values of one solution history."""
    values: Dict[str, float] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def rows(self) -> List[Tuple[str, float]]:
        return sorted(self.values.items())


class DomainNorms:
    """Norms of velocity, pressure and flow-map histories on a DiscreteDomain."""

    def __init__(self, domain, s: float = 2.25, n_box: int = 64, gamma: Optional[float] = None):
        self.domain = domain
        self.s = s
        self.gamma = s - 1.05 if gamma is None else gamma
        self.box = BoxExtension(domain, n_box=n_box)

    def _extend_vector(self, history: np.ndarray) -> np.ndarray:
        # (nt, 2, n) -> (nt, 2, n_box, n_box)
        return self.box.apply(history)

    def velocity(self, history: np.ndarray, T: float, order: Optional[float] = None) -> float:
        order = self.s + 1 if order is None else order
        spec = NormSpec(NormKind.H_HT, order, T=T)
        return parabolic_norm(self._extend_vector(history), spec, self.box.lengths, vector=True)

    def pressure(self, history: np.ndarray, T: float) -> PressureNorm:
        history = np.asarray(history, dtype=float)
        dom = self.domain
        gx = (dom.Dx @ history.T).T
        gy = (dom.Dy @ history.T).T
        energy = np.sqrt(np.sum(dom.weights[None, :] * (gx ** 2 + gy ** 2), axis=1))
        grad = np.stack([gx, gy], axis=1)
        spec = NormSpec(NormKind.H_HT, self.s - 1, T=T)
        parabolic = parabolic_norm(self._extend_vector(grad), spec, self.box.lengths, vector=True)
        trace = history[:, dom.boundary_index]
        trace_spec = NormSpec(NormKind.H_HT, self.s - 0.5, T=T)
        boundary = parabolic_norm(trace, trace_spec, [dom.perimeter])
        return PressureNorm(float(energy.max(initial=0.0)), parabolic, boundary)

    def flow(self, history: np.ndarray, T: float) -> float:
        spec = NormSpec(NormKind.F, self.s, gamma=self.gamma, T=T, epsilon=self.s - 1 - self.gamma)
        return parabolic_norm(self._extend_vector(history), spec, self.box.lengths, vector=True)

    def hbar(self, history: np.ndarray, T: float) -> float:
        """L^2 H^s plus H^{(s+1)/2} H^-1, the latter through the weighted-Poisson preimage."""
        history = np.asarray(history, dtype=float)
        if not np.any(history):
            return 0.0
        ext = self.box.apply(history)
        first = mixed_norm(ext, 0.0, self.s, T, self.box.lengths)
        zero = np.zeros(len(self.domain.boundary_index))
        preimage = np.array([self.domain.solve_weighted_poisson(g, zero) for g in history])
        second = mixed_norm(self.box.apply(preimage), (self.s + 1) / 2, 1.0, T, self.box.lengths)
        return first + second

    def combined(self, dw: np.ndarray, dq: np.ndarray, dX: np.ndarray, T: float) -> float:
        return self.velocity(dw, T) + self.pressure(dq, T).total + self.flow(dX, T)

    def report(self, v: np.ndarray, q: np.ndarray, T: float) -> NormReport:
        report = NormReport()
        report.values["velocity_H_ht"] = self.velocity(v, T)
        pr = self.pressure(q, T)
        report.values["pressure_sup_grad"] = pr.sup_gradient
        report.values["pressure_grad_H_ht"] = pr.gradient_parabolic
        report.values["pressure_trace_H_ht"] = pr.boundary_trace
        report.values["pressure_total"] = pr.total
        report.notes.append("pressure norm is a three-term proxy")
        return report


# ---------------------------------------------------------------------------
# Interpolation-lemma arithmetic and probes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentCheck:
    s: float
    case: int
    p: float
    q: float
    lam: float
    flags: Dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.flags.values())


def interpolation_exponents(s: float, epsilon: float = 0.05, tol: float = 1e-14) -> List[ExponentCheck]:
    """Hoelder/Young exponents of the two interpolation cases for 2 < s < 2.5."""
    if not 2.0 < s < 2.5:
        raise OutOfRange(f"s={s} outside (2, 2.5)")
    gamma = s - 1.0 - epsilon
    checks = []

    q, p = 4.0 / (s + 1.0), 4.0 / (3.0 - s)
    lam = (s + 1.0) * (3.0 - s) / 4.0
    checks.append(ExponentCheck(s, 2, p, q, lam, {
        "conjugate": abs(1.0 / p + 1.0 / q - 1.0) <= tol,
        "lambda_in_unit": 0.0 < lam < 1.0,
        "space_power": abs(lam * p - (s + 1.0)) <= 1e-12,
        "time_power": abs((s + 1.0) * q - 4.0) <= 1e-12,
        "gamma_window": (1.0 - lam) * q < gamma < s - 1.0,
        "side_condition": s > 1.0,
    }))

    q, p = 4.0 / (s - 0.5), 4.0 / (4.5 - s)
    lam = (s + 1.0) * (9.0 - 2.0 * s) / 16.0
    checks.append(ExponentCheck(s, 4, p, q, lam, {
        "conjugate": abs(1.0 / p + 1.0 / q - 1.0) <= tol,
        "lambda_in_unit": 0.0 < lam < 1.0,
        "space_power": abs(2.0 * lam * p - (s + 1.0)) <= 1e-12,
        "time_power": abs((s - 0.5) * q - 4.0) <= 1e-12,
        "gamma_window": 2.0 * (1.0 - lam) * q < gamma < s - 1.0,
        "side_condition": s > 1.5,
    }))
    return checks


@dataclass
class ProbeTable:
    lemma: str
    rows: List[Tuple[str, float, float, float]] = field(default_factory=list)

    @property
    def max_ratio(self) -> float:
        return max((r[3] for r in self.rows), default=0.0)


def inequality_probe(lemma: str, family: Sequence[Tuple[str, np.ndarray, np.ndarray]],
                     s: float = 2.25, epsilon: float = 0.25, T: float = 1.0,
                     q: float = 2.0) -> ProbeTable:
    """Empirical LHS/RHS ratios of an inequality over a family of samples.

    'product': ||v w||_{H^0} against ||v||_{H^{1/q}} ||w||_{H^{1/p}} on the
    2 pi torus, family members (label, v, w).
    'time_integral': ||int_0^t v||_{H^{s+1-eps}} against T^eps ||v||_{H^s} in
    time, family members (label, v, unused).
    """
    table = ProbeTable(lemma)
    if lemma == "product":
        p = q / (q - 1.0)
        for label, v, w in family:
            lhs = spatial_sobolev_norm(v * w, 0.0)
            rhs = spatial_sobolev_norm(v, 1.0 / q) * spatial_sobolev_norm(w, 1.0 / p)
            table.rows.append((label, lhs, rhs, lhs / rhs if rhs > 0 else np.inf))
    elif lemma == "time_integral":
        for label, v, _ in family:
            v = np.asarray(v, dtype=float)
            dt = T / (len(v) - 1)
            V = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * dt)])
            lhs = temporal_sobolev_norm(V, s + 1 - epsilon, T)
            rhs = T ** epsilon * temporal_sobolev_norm(v, s, T)
            table.rows.append((label, lhs, rhs, lhs / rhs if rhs > 0 else np.inf))
    else:
        raise OutOfRange(f"Unknown probe '{lemma}'")
    logger.info(f"Probe {lemma}: {len(table.rows)} members, max ratio {table.max_ratio:.4g}")
    return table
