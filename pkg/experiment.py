#!/usr/bin/env python3
"""
Splash Scenarios and Studies
============================

Orchestration on top of the solver modules:

- run_scenario: evolve a tilde domain window by window, classify the
  physical preimage of the moving boundary and bisect the first transition
  from a simple curve to a touching or crossing one
- stability_study: base run against epsilon-translated runs
- convergence_study: manufactured problems at nested resolutions
- emit_plots: CSV tables and deterministic SVG figures

A kinematic mode moves the curve with a prescribed constant velocity instead
of the solver, so detection and bisection can be checked against closed-form
crossing times.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import CloughTocher2DInterpolator, CubicHermiteSpline
from scipy.spatial import cKDTree

import plots
from config import ScenarioConfig
from conformal import BranchCut, SqrtMap
from curve import (ClosedCurve, PreimageCase, PreimageCaseKind, circle_curve, classify_preimage,
                   disk_union_curve, ellipse_curve, lobes_curve)
from elliptic import DiscreteDomain, disk_domain
from errors import ConfigError, NoTouchWithinHorizon, OutOfRange, ResolutionLost
from field_io import SolutionWriter, read_curve, read_stream_samples, write_csv, write_history
from fixedpoint import PicardResult, nonlinear_residual, picard_run
from initdata import (InitialVelocity, boundary_chart, build_stream, check_compatibility,
                      enforce_compatibility, set_splash_velocity)
from stokes_linear import TimeGrid, evolve, manufactured_data, with_exact_start

logger = logging.getLogger(__name__)

KINEMATIC_TOUCH = 1e-9
JUMP_FACTOR = 10.0
MAX_BISECTIONS = 200


# ---------------------------------------------------------------------------
# Run statistics and timeline
# ---------------------------------------------------------------------------

@dataclass
class RunStats:
    """Counters for the final summary block."""
    windows: int = 0
    picard_iterations: int = 0
    factors: List[float] = field(default_factory=list)
    outputs: int = 0
    bisections: int = 0
    t_star: Optional[float] = None
    start_time: float = field(default_factory=time.time)

    @property
    def elapsed(self) -> float:
        return time.time() - self.start_time

    def record(self, result: PicardResult) -> None:
        self.windows += 1
        self.picard_iterations += len(result.history)
        self.factors.extend(result.factors)

    def summary_lines(self) -> List[str]:
        worst = max(self.factors) if self.factors else float("nan")
        lines = [
            f"Windows: {self.windows}",
            f"Picard iterations: {self.picard_iterations}",
            f"Largest contraction factor: {worst:.4f}",
            f"Timeline outputs: {self.outputs}",
            f"Bisection steps: {self.bisections}",
            f"Wall time: {self.elapsed:.2f}s",
        ]
        if self.t_star is not None:
            lines.append(f"Splash time t*: {self.t_star:.9g}")
        return lines


@dataclass
class TimelineEntry:
    time: float
    case: PreimageCaseKind
    approach: float
    chord_arc: float
    curve: np.ndarray
    norms: Dict[str, float] = field(default_factory=dict)


@dataclass
class Timeline:
    entries: List[TimelineEntry] = field(default_factory=list)
    t_star: Optional[float] = None
    bracket: Optional[Tuple[float, float]] = None
    windows: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def times(self) -> np.ndarray:
        return np.array([e.time for e in self.entries])

    @property
    def cases(self) -> List[PreimageCaseKind]:
        return [e.case for e in self.entries]

    @property
    def approach(self) -> np.ndarray:
        return np.array([e.approach for e in self.entries])

    def monotone_violations(self) -> int:
        """Output times before the transition where the approach distance did not decrease."""
        simple = [e.approach for e in self.entries if e.case is PreimageCaseKind.SIMPLE]
        return int(sum(b >= a for a, b in zip(simple, simple[1:])))

    def in_order(self) -> bool:
        """Simple cases first, then touching, crossing only after a transition."""
        rank = {PreimageCaseKind.SIMPLE: 0, PreimageCaseKind.TOUCHING: 1, PreimageCaseKind.CROSSING: 2}
        ranks = [rank[c] for c in self.cases]
        return all(b >= a for a, b in zip(ranks, ranks[1:]))

    def rows(self) -> List[Tuple]:
        rows = []
        for e in self.entries:
            norms = ";".join(f"{k}={v:.6g}" for k, v in sorted(e.norms.items()))
            rows.append((e.time, e.case.value, e.approach, e.chord_arc, norms))
        return rows


# ---------------------------------------------------------------------------
# Scenario setup
# ---------------------------------------------------------------------------

def parse_cut(text: str) -> BranchCut:
    """negative-real, positive-real, ray:<degrees> or poly:x,y;x,y;..."""
    text = text.strip()
    if text == "negative-real":
        return BranchCut.negative_real_axis()
    if text == "positive-real":
        return BranchCut.positive_real_axis()
    kind, _, rest = text.partition(":")
    try:
        if kind == "ray":
            return BranchCut.ray(np.deg2rad(float(rest)))
        if kind == "poly":
            verts = [complex(*(float(c) for c in pair.split(","))) for pair in rest.split(";") if pair.strip()]
            return BranchCut(verts)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Malformed branch cut {text!r}: {e}") from e
    raise ConfigError(f"Unknown branch cut {text!r}")


def initial_curve(cfg: ScenarioConfig) -> ClosedCurve:
    """Unperturbed tilde curve."""
    n = cfg.curve_samples
    if cfg.curve == "lobes":
        return lobes_curve(n, cfg.gap)
    if cfg.curve == "disk_union":
        radius = 1.2
        return disk_union_curve(n, radius, (radius + cfg.gap + 1j, radius + cfg.gap - 1j))
    if cfg.curve == "circle":
        return circle_curve(n, 0.8, 2.0)
    if cfg.curve == "ellipse":
        return ellipse_curve(n, 0.8, 0.5, 2.0)
    path = Path(cfg.curve)
    if not path.exists():
        raise ConfigError(f"Unknown curve {cfg.curve!r}: not a builtin name or an existing file")
    return read_curve(path)


def perturbed_curve(cfg: ScenarioConfig, base: Optional[ClosedCurve] = None) -> ClosedCurve:
    """Tilde curve after the epsilon translation, in either plane."""
    base = base or initial_curve(cfg)
    if cfg.epsilon == 0:
        return base
    if cfg.perturb == "tilde":
        return base.translated(cfg.offset)
    cmap = SqrtMap(parse_cut(cfg.cut))
    return ClosedCurve(cmap.forward(cmap.inverse(base.points) + cfg.offset), base.period)


def build_domain(cfg: ScenarioConfig, base: Optional[ClosedCurve] = None, offset: Optional[complex] = None) -> DiscreteDomain:
    """Domain of the scenario.

    A tilde translation keeps the base grid and shifts the frames; a physical
    translation regrids the mapped curve.
    """
    base = base or initial_curve(cfg)
    cmap = SqrtMap(parse_cut(cfg.cut))
    s = cfg.solver
    if cfg.perturb == "tilde" or cfg.epsilon == 0:
        shift = cfg.offset if offset is None else offset
        return DiscreteDomain(base, s.radial, s.angular, conformal_map=cmap, frame_offset=shift,
                              solver_tol=s.solver_tol)
    return DiscreteDomain(perturbed_curve(cfg, base), s.radial, s.angular, conformal_map=cmap,
                          solver_tol=s.solver_tol)


def classify(points: np.ndarray, touch_tol: Optional[float] = None, chord_arc: bool = False) -> PreimageCase:
    return classify_preimage(ClosedCurve(points), touch_tol, with_chord_arc=chord_arc)


def check_initial_case(cfg: ScenarioConfig, base: Optional[ClosedCurve] = None) -> PreimageCase:
    """The starting preimage must be a simple curve."""
    points = perturbed_curve(cfg, base).points
    case = classify(points, _touch_tol(cfg))
    if case.case is not PreimageCaseKind.SIMPLE:
        raise ConfigError(f"Initial preimage is {case.case.value}; reduce epsilon or move the curve")
    return case


def _touch_tol(cfg: ScenarioConfig, points: Optional[np.ndarray] = None) -> Optional[float]:
    if cfg.touch_tol is not None or cfg.mode != "kinematic" or points is None:
        return cfg.touch_tol
    return KINEMATIC_TOUCH * ClosedCurve(points * points).diameter()


def splash_targets(points: np.ndarray) -> Tuple[complex, complex]:
    """Leftmost samples of the upper and lower halves, the arcs that meet in a splash."""
    upper = np.where(points.imag > 0)[0]
    lower = np.where(points.imag < 0)[0]
    if len(upper) == 0 or len(lower) == 0:
        raise ConfigError("Curve has no samples on one side of the real axis to aim at")
    return (complex(points[upper[np.argmin(points[upper].real)]]),
            complex(points[lower[np.argmin(points[lower].real)]]))


def initial_velocity(cfg: ScenarioConfig, dom: DiscreteDomain) -> np.ndarray:
    """Stream-function data, splash aiming and the compatibility correction."""
    chart = boundary_chart(dom, cfg.solver.blend_fraction)
    alpha = chart.curve.alpha
    if cfg.stream == "mode":
        def psi0(points):
            return cfg.amplitude * np.cos(cfg.stream_mode * np.angle(points - dom.center))
    elif cfg.stream == "file":
        psi0 = read_stream_samples(cfg.stream_file, alpha)
    else:
        psi0 = np.zeros(len(alpha))
    iv: InitialVelocity = build_stream(dom, psi0, chart)
    if cfg.stream == "splash":
        found, _ = chart.locate(np.array(splash_targets(chart.curve.points)))
        points = chart.point(found)
        iv = set_splash_velocity(iv, points, [cfg.aim, cfg.aim], cfg.amplitude)
    v0 = enforce_compatibility(dom, iv.v0)
    report = check_compatibility(dom, v0)
    logger.info(f"Initial data: max|v0| = {np.max(np.abs(v0)):.4g}, "
                f"boundary A-divergence {report.details['boundary_a_divergence']:.2e}, "
                f"tangential stress {report.tangential_stress:.2e}")
    return v0


# ---------------------------------------------------------------------------
# Bisection
# ---------------------------------------------------------------------------

@dataclass
class Bisection:
    lo: float
    hi: float
    case_lo: PreimageCase
    case_hi: PreimageCase
    steps: int

    @property
    def t_star(self) -> float:
        return 0.5 * (self.lo + self.hi)


def bisect_transition(classify_at: Callable[[float], PreimageCase], lo: float, hi: float, tol: float,
                      case_lo: Optional[PreimageCase] = None, case_hi: Optional[PreimageCase] = None) -> Bisection:
    """Shrink [lo, hi] around the first time the preimage stops being simple."""
    case_lo = case_lo or classify_at(lo)
    case_hi = case_hi or classify_at(hi)
    if case_lo.case is not PreimageCaseKind.SIMPLE or case_hi.case is PreimageCaseKind.SIMPLE:
        raise OutOfRange(f"[{lo}, {hi}] does not bracket a transition")
    steps = 0
    while hi - lo > tol:
        if steps >= MAX_BISECTIONS:
            logger.warning(f"Bisection stopped at the iteration cap with width {hi - lo:.3e}")
            break
        mid = 0.5 * (lo + hi)
        case = classify_at(mid)
        if case.case is PreimageCaseKind.SIMPLE:
            lo, case_lo = mid, case
        else:
            hi, case_hi = mid, case
        steps += 1
    logger.info(f"Transition bracketed in [{lo:.9g}, {hi:.9g}] after {steps} steps: {case_hi.case.value}")
    return Bisection(lo, hi, case_lo, case_hi, steps)


def _check_resolution(bis: Bisection, previous: TimelineEntry, points_lo: np.ndarray) -> None:
    """A crossing must be preceded by a near touch at the resolved tolerance."""
    if bis.case_hi.case is not PreimageCaseKind.CROSSING:
        return
    rate = max((previous.approach - bis.case_lo.approach) / max(bis.lo - previous.time, 1e-300), 0.0)
    allowed = JUMP_FACTOR * rate * (bis.hi - bis.lo) + 1e-6 * ClosedCurve(points_lo * points_lo).diameter()
    if bis.case_lo.approach > allowed:
        raise ResolutionLost(f"Preimage crossed without touching: approach {bis.case_lo.approach:.3e} "
                             f"just before the crossing exceeds {allowed:.3e}")


# ---------------------------------------------------------------------------
# Scenario runs
# ---------------------------------------------------------------------------

def _entry(t: float, points: np.ndarray, case: PreimageCase, norms: Optional[Dict[str, float]] = None) -> TimelineEntry:
    return TimelineEntry(float(t), case.case, float(case.approach), float(case.chord_arc),
                         points * points, dict(norms or {}))


def run_kinematic(cfg: ScenarioConfig, stats: Optional[RunStats] = None) -> Timeline:
    """Translate the tilde curve at cfg.kinematic_velocity and locate the splash time."""
    stats = stats or RunStats()
    start = perturbed_curve(cfg).points
    velocity = cfg.kinematic_velocity
    tol = _touch_tol(cfg, start)

    def positions(t: float) -> np.ndarray:
        return start + t * velocity

    def classify_at(t: float) -> PreimageCase:
        return classify(positions(t), tol)

    timeline = Timeline()
    steps = int(round(cfg.horizon / cfg.dt))
    previous = None
    for k in range(steps + 1):
        t = k * cfg.dt
        case = classify(positions(t), tol, chord_arc=(k % cfg.output_every == 0))
        if k == 0 and case.case is not PreimageCaseKind.SIMPLE:
            raise ConfigError(f"Initial preimage is {case.case.value}")
        if case.case is not PreimageCaseKind.SIMPLE:
            bis = bisect_transition(classify_at, previous.time, t, cfg.resolved_time_tol,
                                    case_hi=case)
            _check_resolution(bis, previous, positions(bis.lo))
            timeline.entries.append(_entry(bis.hi, positions(bis.hi), bis.case_hi))
            timeline.t_star, timeline.bracket = bis.t_star, (bis.lo, bis.hi)
            stats.bisections += bis.steps
            stats.t_star = bis.t_star
            stats.outputs = len(timeline)
            return timeline
        entry = _entry(t, positions(t), case)
        if k % cfg.output_every == 0:
            timeline.entries.append(entry)
        previous = entry
    stats.outputs = len(timeline)
    raise NoTouchWithinHorizon(f"No touch within horizon {cfg.horizon}", timeline)


@dataclass
class WindowRun:
    start: float
    grid: TimeGrid
    domain: DiscreteDomain
    result: PicardResult
    v: np.ndarray
    q: np.ndarray
    X: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.start + self.grid.times

    def boundary(self, k: int) -> np.ndarray:
        return self.X[k, self.domain.boundary_index]

    def dense_boundary(self) -> Callable[[float], np.ndarray]:
        """Hermite interpolant of the boundary trajectories, slopes A(X) v."""
        dom = self.domain
        bi = dom.boundary_index
        pos = self.X[:, bi]
        slopes = np.empty_like(pos)
        for k in range(len(pos)):
            A = dom.frames_at(self.result.state.X.X[k, bi]).A
            Av = np.einsum("nij,jn->in", A, self.v[k][:, bi])
            slopes[k] = Av[0] + 1j * Av[1]
        y = np.concatenate([pos.real, pos.imag], axis=1)
        dy = np.concatenate([slopes.real, slopes.imag], axis=1)
        spline = CubicHermiteSpline(self.times, y, dy, axis=0)
        nb = len(bi)

        def at(t: float) -> np.ndarray:
            values = spline(t)
            return values[:nb] + 1j * values[nb:]

        return at

    def energy(self, k: int) -> float:
        return 0.5 * self.domain.inner(self.v[k], self.v[k])


def run_window(dom: DiscreteDomain, v0: np.ndarray, cfg: ScenarioConfig, start: float = 0.0) -> WindowRun:
    grid = TimeGrid.from_dt(cfg.window, cfg.dt)
    result = picard_run(dom, grid, v0, cfg.picard)
    v = result.velocity(grid.times)
    X = result.state.X.X + dom.frame_offset
    return WindowRun(start, grid, dom, result, v, result.pressure(), X)


def restart_domain(cfg: ScenarioConfig, run: WindowRun) -> Tuple[DiscreteDomain, np.ndarray]:
    """Regrid the moved boundary and carry the end velocity over."""
    old = run.domain
    try:
        dom = DiscreteDomain(ClosedCurve(run.boundary(-1)), cfg.solver.radial, cfg.solver.angular,
                             conformal_map=old.conformal_map, solver_tol=cfg.solver.solver_tol)
    except ConfigError as e:
        raise ResolutionLost(f"Moved boundary cannot be regridded: {e}") from e
    moved = np.column_stack([run.X[-1].real, run.X[-1].imag])
    targets = np.column_stack([dom.nodes.real, dom.nodes.imag])
    values = CloughTocher2DInterpolator(moved, run.v[-1].T)(targets)
    missing = np.any(~np.isfinite(values), axis=1)
    if np.any(missing):
        _, nearest = cKDTree(moved).query(targets[missing])
        values[missing] = run.v[-1].T[nearest]
        logger.debug(f"Remap: {int(missing.sum())} nodes outside the old hull filled from nearest nodes")
    v = dom.project_R(values.T)
    return dom, enforce_compatibility(dom, v)


def run_scenario(cfg: ScenarioConfig, writer: Optional[SolutionWriter] = None,
                 stats: Optional[RunStats] = None) -> Timeline:
    """Evolve until the preimage stops being simple, then bisect the transition time.

    Raises NoTouchWithinHorizon, carrying the timeline, when the horizon
    passes without a transition.
    """
    stats = stats if stats is not None else RunStats()
    if cfg.mode == "kinematic":
        return run_kinematic(cfg, stats)

    base = initial_curve(cfg)
    check_initial_case(cfg, base)
    dom = build_domain(cfg, base)
    v0 = initial_velocity(cfg, dom)
    tol = cfg.touch_tol
    timeline = Timeline()
    t0, window = 0.0, 0
    previous: Optional[TimelineEntry] = None
    step_count = 0
    windows = int(np.ceil(cfg.horizon / cfg.window - 1e-9))

    while window < windows:
        logger.info(f"Window {window + 1}/{windows}: t = {t0:.6g}, {dom.size} nodes")
        run = run_window(dom, v0, cfg, t0)
        stats.record(run.result)
        timeline.windows = window + 1
        residuals = run.result.solution.residuals if run.result.solution is not None else []
        first = 0 if window == 0 else 1
        for k in range(first, run.grid.steps + 1):
            t = run.times[k]
            points = run.boundary(k)
            recorded = step_count % cfg.output_every == 0
            step_count += 1
            case = classify(points, tol, chord_arc=recorded)
            norms = {"energy": run.energy(k), "max_speed": float(np.max(np.abs(run.v[k]))),
                     "picard_factor": run.result.contraction_factor()}
            if case.case is not PreimageCaseKind.SIMPLE:
                if previous is None:
                    raise ConfigError(f"Initial preimage is {case.case.value}")
                dense = run.dense_boundary()
                bis = bisect_transition(lambda s: classify(dense(s), tol), previous.time, t,
                                        cfg.resolved_time_tol, case_hi=case)
                _check_resolution(bis, previous, dense(bis.lo))
                timeline.entries.append(_entry(bis.hi, dense(bis.hi), bis.case_hi, norms))
                timeline.t_star, timeline.bracket = bis.t_star, (bis.lo, bis.hi)
                stats.bisections += bis.steps
                stats.t_star = bis.t_star
                stats.outputs = len(timeline)
                if writer is not None:
                    writer.add(dom, window, t, run.v[k], run.q[k], energy=norms["energy"],
                               case=case.case.value, approach=case.approach, force=True)
                logger.info(f"Splash transition at t* = {bis.t_star:.9g} ({bis.case_hi.case.value})")
                return timeline
            entry = _entry(t, points, case, norms)
            if recorded:
                timeline.entries.append(entry)
                if writer is not None:
                    res = residuals[k - 1] if k >= 1 and k - 1 < len(residuals) else None
                    writer.add(dom, window, t, run.v[k], run.q[k],
                               residuals=(res.momentum, res.stress) if res else (0.0, 0.0),
                               energy=norms["energy"], case=case.case.value, approach=case.approach,
                               force=True)
            previous = entry
        stats.outputs = len(timeline)
        if writer is not None:
            write_history(writer.out_dir / f"picard_w{window:03d}.csv", run.result.history)
        window += 1
        t0 += cfg.window
        if window < windows:
            dom, v0 = restart_domain(cfg, run)
    raise NoTouchWithinHorizon(f"No touch within horizon {cfg.horizon}", timeline)


# ---------------------------------------------------------------------------
# Structural stability
# ---------------------------------------------------------------------------

@dataclass
class StabilityRow:
    epsilon: float
    distance: float
    flow_distance: float
    ratio: float
    per_epsilon: float


@dataclass
class StabilityTable:
    rows: List[StabilityRow] = field(default_factory=list)

    def distance(self, epsilon: float) -> float:
        for row in self.rows:
            if row.epsilon == epsilon:
                return row.distance
        raise KeyError(epsilon)

    def flatness(self) -> float:
        """Spread of distance / epsilon relative to its mean over the positive epsilons."""
        values = np.array([r.per_epsilon for r in self.rows if r.epsilon > 0])
        if len(values) == 0:
            return 0.0
        return float((values.max() - values.min()) / values.mean())


def _translated_run(cfg: ScenarioConfig, base: ClosedCurve, v0: np.ndarray, epsilon: float) -> np.ndarray:
    dom = build_domain(cfg, base, offset=epsilon * cfg.direction)
    v = enforce_compatibility(dom, v0)
    grid = TimeGrid.from_dt(cfg.window, cfg.dt)
    result = picard_run(dom, grid, v, cfg.picard)
    return result.state.X.X + dom.frame_offset


def stability_study(cfg: ScenarioConfig, eps_list: Sequence[float], workers: int = 1) -> StabilityTable:
    """Distance sup_t max_alpha |X - X_eps| between the base run and translated runs.

    Every run shares the base grid and window; translated runs see the frames
    at shifted points and start from the same nodal velocity.
    """
    if cfg.perturb != "tilde":
        raise ConfigError("Stability runs translate the tilde domain; set perturb = tilde")
    if any(e < 0 for e in eps_list):
        raise ConfigError("epsilon values must be non-negative")
    base_cfg = cfg.with_epsilon(0.0)
    base = initial_curve(base_cfg)
    check_initial_case(base_cfg, base)
    for eps in eps_list:
        check_initial_case(cfg.with_epsilon(eps), base)
    dom = build_domain(base_cfg, base)
    v0 = initial_velocity(base_cfg, dom)
    reference = _translated_run(base_cfg, base, v0, 0.0)

    def one(eps: float) -> np.ndarray:
        logger.info(f"Stability run epsilon = {eps:.3e}")
        return _translated_run(base_cfg, base, v0, eps)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        histories = list(pool.map(one, eps_list))

    table = StabilityTable()
    previous = None
    for eps, X in zip(eps_list, histories):
        distance = float(np.max(np.abs(X - reference)))
        flow = float(np.max(np.abs((X - eps * cfg.direction) - reference)))
        ratio = distance / previous if previous else float("nan")
        table.rows.append(StabilityRow(eps, distance, flow, ratio, distance / eps if eps > 0 else float("nan")))
        previous = distance
        logger.info(f"epsilon {eps:.3e}: distance {distance:.4e}, ratio {ratio:.3f}")
    return table


# ---------------------------------------------------------------------------
# Convergence studies
# ---------------------------------------------------------------------------

KINDS = ("poisson", "stokes_linear", "picard")


@dataclass
class ConvergenceStudy:
    kind: str
    resolutions: List[Tuple[int, int]] = field(default_factory=list)
    h: List[float] = field(default_factory=list)
    errors: List[float] = field(default_factory=list)

    @property
    def order(self) -> float:
        """Least-squares slope of log error against log h."""
        if len(self.h) < 2:
            return float("nan")
        return float(np.polyfit(np.log(self.h), np.log(self.errors), 1)[0])

    def rates(self) -> List[Optional[float]]:
        out: List[Optional[float]] = [None]
        for k in range(1, len(self.h)):
            out.append(float(np.log(self.errors[k - 1] / self.errors[k]) / np.log(self.h[k - 1] / self.h[k])))
        return out


def level_resolution(level: int) -> Tuple[int, int]:
    return 8 * 2 ** level, 32 * 2 ** level


def _poisson_error(radial: int, angular: int) -> float:
    dom = disk_domain(radial=radial, angular=angular)
    x, y = dom.nodes.real, dom.nodes.imag
    exact = np.sin(x) * np.cos(y) + x * y ** 2
    lap = -2 * np.sin(x) * np.cos(y) + 2 * x
    u = dom.solve_weighted_poisson(dom.Q2 * lap, exact[dom.boundary_index])
    return float(np.max(np.abs(u - exact)))


def stokes_fixture(t: float, x: np.ndarray, y: np.ndarray):
    """(1 + t)(cos y, sin x), linear in time so backward Euler has no time error."""
    s = 1.0 + t
    zero = np.zeros_like(x)
    V = np.stack([np.cos(y), np.sin(x)])
    grad = np.stack([np.stack([zero, -np.sin(y)]), np.stack([np.cos(x), zero])])
    lap = np.stack([-np.cos(y), -np.sin(x)])
    return s * V, s * grad, s * lap, V


def stokes_pressure(t: float, x: np.ndarray, y: np.ndarray):
    s = 1.0 + t
    return s * x * y, s * np.stack([y, x])


def _stokes_error(radial: int, angular: int, T: float = 0.05, steps: int = 4) -> float:
    dom = disk_domain(radial=radial, angular=angular)
    grid = TimeGrid.from_steps(T, steps)
    data = with_exact_start(manufactured_data(dom, grid, stokes_fixture, stokes_pressure), dom)
    sol = evolve(dom, grid, data)
    exact = stokes_fixture(T, dom.nodes.real, dom.nodes.imag)[0]
    return float(np.max(np.abs(sol.v[-1] - exact)))


def _picard_residual(radial: int, angular: int, T: float = 0.01, steps: int = 4) -> float:
    dom = disk_domain(radial=radial, angular=angular)
    iv = build_stream(dom, lambda p: 0.05 * np.cos(2 * np.angle(p - dom.center)))
    v0 = enforce_compatibility(dom, iv.v0)
    grid = TimeGrid.from_steps(T, steps)
    result = picard_run(dom, grid, v0)
    return nonlinear_residual(dom, grid, result).total


def convergence_study(kind: str, levels: int = 3) -> ConvergenceStudy:
    if kind not in KINDS:
        raise ConfigError(f"Unknown study {kind!r}; choose from {KINDS}")
    if levels < 3:
        raise ConfigError("A convergence study needs at least 3 levels")
    error = {"poisson": _poisson_error, "stokes_linear": _stokes_error, "picard": _picard_residual}[kind]
    study = ConvergenceStudy(kind)
    for level in range(levels):
        radial, angular = level_resolution(level)
        err = error(radial, angular)
        study.resolutions.append((radial, angular))
        study.h.append(1.0 / (radial - 0.5))
        study.errors.append(err)
        logger.info(f"{kind} level {level}: {radial}x{angular}, error {err:.4e}")
    logger.info(f"{kind}: observed order {study.order:.3f}")
    return study


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

Emittable = Union[Timeline, StabilityTable, ConvergenceStudy]


def emit_plots(data: Emittable, out_dir: Union[str, Path]) -> List[Path]:
    """CSV of the underlying numbers and an SVG figure."""
    out_dir = Path(out_dir)
    if isinstance(data, Timeline):
        csv_path = write_csv(out_dir / "timeline.csv", ("time", "case", "approach", "chord_arc", "norms"),
                             data.rows())
        svg = plots.plot_timeline(out_dir / "timeline.svg", data.times, [c.value for c in data.cases],
                                  data.approach, [e.curve for e in data.entries], data.t_star)
    elif isinstance(data, StabilityTable):
        csv_path = write_csv(out_dir / "stability.csv",
                             ("epsilon", "distance", "flow_distance", "ratio", "distance_over_epsilon"),
                             ((r.epsilon, r.distance, r.flow_distance, r.ratio, r.per_epsilon) for r in data.rows))
        svg = plots.plot_stability(out_dir / "stability.svg", [r.epsilon for r in data.rows],
                                   [r.distance for r in data.rows])
    elif isinstance(data, ConvergenceStudy):
        csv_path = write_csv(out_dir / f"convergence_{data.kind}.csv", ("radial", "angular", "h", "error"),
                             ((r[0], r[1], h, e) for r, h, e in zip(data.resolutions, data.h, data.errors)))
        svg = plots.plot_convergence(out_dir / f"convergence_{data.kind}.svg", data.h, data.errors,
                                     data.order if len(data.h) >= 2 else 0.0, title=data.kind)
    else:
        raise TypeError(f"Nothing to plot for {type(data).__name__}")
    return [csv_path, svg]
