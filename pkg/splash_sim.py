#!/usr/bin/env python3
"""
Splash Simulator - Command Line Interface
=========================================

Subcommands:
- simulate:    evolve a scenario to its splash time
- check-curve: chord-arc and splash classification of a curve file
- stability:   base run against epsilon-translated runs
- converge:    manufactured-solution refinement study
- norms:       norm report of an exported solution history

Exit codes: 0 success, 1 interrupted, 2 scenario errors, 3 I/O errors.
"""

import argparse
import json
import logging
import signal
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence

import numpy as np

from config import ScenarioConfig, as_dict, load_defaults, load_scenario, logging_settings
from curve import classify_preimage, classify_splash, chord_arc_constant, self_intersections
from elliptic import FACTOR_CACHE
from errors import IoFailure, NoTouchWithinHorizon, SplashSimError
from experiment import KINDS, RunStats, Timeline, convergence_study, emit_plots, run_scenario, stability_study
from field_io import SolutionWriter, load_history, read_curve
from norms import DomainNorms

logger = logging.getLogger("splash_sim")


def setup_logging(level: str = "INFO", log_file: str = "splash_sim.log") -> None:
    """File and console handlers on the root logger."""
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler()
        ],
        force=True,
    )


class SplashSession:
    """One CLI run: output directory, solution writer and statistics.

    SIGINT and SIGTERM flush the partial results before exiting.
    """

    def __init__(self, cfg: ScenarioConfig, out_dir: Path, quiet: bool = False):
        self.cfg = cfg
        self.out_dir = Path(out_dir)
        self.quiet = quiet
        self.stats = RunStats()
        self.writer = SolutionWriter(self.out_dir, cfg.output.snapshot_every)
        self.timeline: Optional[Timeline] = None
        FACTOR_CACHE.max_size = cfg.solver.cache_size
        self._previous = {}
        for sig in (signal.SIGINT, signal.SIGTERM):
            self._previous[sig] = signal.signal(sig, self._signal_handler)

    def _signal_handler(self, signum, frame):
        logger.info("Interruption received, writing partial results...")
        self.save()
        self._print_final_stats()
        sys.exit(1)

    def save(self) -> None:
        try:
            self.writer.flush()
            (self.out_dir / "scenario.json").write_text(json.dumps(as_dict(self.cfg), indent=2))
            if self.timeline is not None and self.cfg.output.plots:
                emit_plots(self.timeline, self.out_dir)
        except (OSError, IoFailure) as e:
            logger.error(f"Saving results failed: {e}")

    def restore_signals(self) -> None:
        for sig, handler in self._previous.items():
            signal.signal(sig, handler)

    def _print_final_stats(self):
        if self.quiet:
            return
        print("\n" + "=" * 60)
        print("FINAL STATISTICS - SPLASH SIMULATOR")
        print("=" * 60)
        for line in self.stats.summary_lines():
            print(line)
        print(f"Factorizations cached:  {FACTOR_CACHE.size()} (hits {FACTOR_CACHE.hits})")
        print(f"Output directory:       {self.out_dir}")
        print("=" * 60)


@contextmanager
def splash_session(cfg: ScenarioConfig, out_dir: Path, quiet: bool = False) -> Iterator[SplashSession]:
    session = SplashSession(cfg, out_dir, quiet)
    try:
        yield session
    finally:
        session.save()
        session._print_final_stats()
        session.restore_signals()


def create_cli_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splash-sim",
        description="Splash Simulator - free-boundary Navier-Stokes splash runs",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Usage examples:
  %(prog)s --out runs/lobes simulate scenario.cfg     # evolve to the splash time
  %(prog)s simulate scenario.cfg --mode kinematic     # prescribed translation, no solver
  %(prog)s check-curve boundary.curve                 # chord-arc and touch pairs
  %(prog)s stability scenario.cfg --eps 1e-3 5e-4     # epsilon-translated runs
  %(prog)s converge poisson --levels 3                # refinement study
  %(prog)s --format csv norms runs/lobes/manifest.csv # norms of an exported history
        """
    )
    parser.add_argument('--out', '-o', type=str, default=None,
                        help='Output directory (default: [output] out_dir from config.ini)')
    parser.add_argument('--format', '-f', choices=['text', 'json', 'csv'], default=None,
                        help='Table format on stdout (default: text)')
    parser.add_argument('--config-defaults', type=str, default=None,
                        help='Alternative defaults file (default: packaged config.ini)')
    parser.add_argument('--quiet', '-q', action='store_true', help='Quiet mode (results only)')
    parser.add_argument('--verbose', '-v', action='store_true', help='Verbose output')

    sub = parser.add_subparsers(dest='command', required=True)

    sim = sub.add_parser('simulate', help='Run a scenario to its splash time')
    sim.add_argument('config', type=str, help='Scenario file (flat key = value)')
    sim.add_argument('--mode', choices=['solver', 'kinematic'], default=None, help='Override the scenario mode')
    sim.add_argument('--horizon', type=float, default=None, help='Override the time horizon')

    check = sub.add_parser('check-curve', help='Classify a curve file')
    check.add_argument('curve', type=str, help='Curve file')
    check.add_argument('--pair-tol', type=float, default=None,
                       help='Touch distance (default: 1e-6 times the diameter)')
    check.add_argument('--tilde', action='store_true', help='Also classify the squared preimage')

    stab = sub.add_parser('stability', help='Structural stability study')
    stab.add_argument('config', type=str, help='Scenario file')
    stab.add_argument('--eps', type=float, nargs='+', default=[1e-3, 5e-4, 2.5e-4],
                      help='Translation sizes (default: 1e-3 5e-4 2.5e-4)')
    stab.add_argument('--workers', type=int, default=1, help='Concurrent runs (default: 1)')

    conv = sub.add_parser('converge', help='Manufactured-solution convergence study')
    conv.add_argument('kind', choices=KINDS, help='Problem to refine')
    conv.add_argument('--levels', type=int, default=3, help='Number of resolutions (default: 3)')

    nrm = sub.add_parser('norms', help='Norm report of a solution manifest')
    nrm.add_argument('manifest', type=str, help='manifest.csv of a simulate run')
    nrm.add_argument('--s', type=float, default=2.25, help='Regularity index (default: 2.25)')
    nrm.add_argument('--n-box', type=int, default=32, help='Box grid size for the norms (default: 32)')
    return parser


def format_output(header: Sequence[str], rows: Sequence[Sequence[Any]], format_type: str) -> str:
    """Render a table as text, json or csv."""
    def cell(x):
        if isinstance(x, (float, np.floating)):
            return f"{x:.6g}"
        return str(x)

    if format_type == 'json':
        return json.dumps([dict(zip(header, [x if not isinstance(x, np.floating) else float(x) for x in row]))
                           for row in rows], indent=2)
    if format_type == 'csv':
        lines = [",".join(header)]
        lines.extend(",".join(cell(x) for x in row) for row in rows)
        return "\n".join(lines)
    widths = [max([len(h)] + [len(cell(row[i])) for row in rows]) for i, h in enumerate(header)]
    lines = [" | ".join(h.ljust(w) for h, w in zip(header, widths)), "-+-".join("-" * w for w in widths)]
    lines.extend(" | ".join(cell(x).ljust(w) for x, w in zip(row, widths)) for row in rows)
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args, cfg: ScenarioConfig, out_dir: Path, fmt: str) -> int:
    with splash_session(cfg, out_dir, args.quiet) as session:
        if not args.quiet:
            print("=== Splash Simulator ===")
            print(f"Mode: {cfg.mode} | Curve: {cfg.curve} | epsilon: {cfg.epsilon}")
            print(f"Window: {cfg.window} | dt: {cfg.dt} | Horizon: {cfg.horizon}")
            print("-" * 50)
        try:
            session.timeline = run_scenario(cfg, session.writer, session.stats)
        except NoTouchWithinHorizon as e:
            session.timeline = e.timeline
            raise
        timeline = session.timeline
        print(format_output(("time", "case", "approach", "chord_arc", "norms"), timeline.rows(), fmt))
        if timeline.t_star is not None:
            print(f"t* = {timeline.t_star:.9g} in [{timeline.bracket[0]:.9g}, {timeline.bracket[1]:.9g}]")
    return 0


def cmd_check_curve(args, fmt: str) -> int:
    c = read_curve(args.curve)
    pair_tol = args.pair_tol if args.pair_tol is not None else 1e-6 * c.diameter()
    verdict = classify_splash(c, pair_tol)
    rows: List[List[Any]] = [
        ["samples", c.n],
        ["chord_arc_constant", chord_arc_constant(c)],
        ["self_intersections", len(self_intersections(c))],
        ["status", verdict.status.value],
        ["touch_pairs", ";".join(f"{a:.6g}/{b:.6g}" for a, b in verdict.touch_pairs)],
    ]
    if args.tilde:
        case = classify_preimage(c, with_chord_arc=True)
        rows.append(["preimage_case", case.case.value])
        rows.append(["preimage_approach", case.approach])
    print(format_output(("quantity", "value"), rows, fmt))
    return 0


def cmd_stability(args, cfg: ScenarioConfig, out_dir: Path, fmt: str) -> int:
    table = stability_study(cfg, args.eps, workers=args.workers)
    rows = [(r.epsilon, r.distance, r.flow_distance, r.ratio, r.per_epsilon) for r in table.rows]
    print(format_output(("epsilon", "distance", "flow_distance", "ratio", "distance_over_eps"), rows, fmt))
    if cfg.output.plots:
        emit_plots(table, out_dir)
    return 0


def cmd_converge(args, out_dir: Path, fmt: str, plots: bool) -> int:
    study = convergence_study(args.kind, args.levels)
    rates = study.rates()
    rows = [(f"{r[0]}x{r[1]}", h, e, "---" if rate is None else rate)
            for r, h, e, rate in zip(study.resolutions, study.h, study.errors, rates)]
    print(format_output(("grid", "h", "error", "rate"), rows, fmt))
    print(f"Observed order ({args.kind}): {study.order:.3f}")
    if plots:
        emit_plots(study, out_dir)
    return 0


def cmd_norms(args, fmt: str) -> int:
    rows = []
    for index, (dom, snaps) in enumerate(load_history(args.manifest)):
        if len(snaps) < 2:
            logger.warning(f"Domain {index} has {len(snaps)} snapshot(s); skipped")
            continue
        T = snaps[-1].time - snaps[0].time
        v = np.array([s.v for s in snaps])
        q = np.array([s.q for s in snaps])
        report = DomainNorms(dom, s=args.s, n_box=args.n_box).report(v, q, T)
        rows.extend((index, name, value) for name, value in report.rows())
    print(format_output(("window", "norm", "value"), rows, fmt))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = create_cli_parser()
    args = parser.parse_args(argv)

    defaults = load_defaults(args.config_defaults)
    level, log_file = logging_settings(defaults)
    setup_logging(level, log_file)
    if args.quiet:
        logging.getLogger().setLevel(logging.ERROR)
    elif args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    try:
        base = load_scenario(None, defaults=args.config_defaults)
        out_dir = Path(args.out or base.output.out_dir)
        fmt = args.format or base.output.default_format
        if args.command == 'simulate':
            overrides: Dict[str, Any] = {"mode": args.mode, "horizon": args.horizon}
            cfg = load_scenario(args.config, overrides, defaults=args.config_defaults)
            return cmd_simulate(args, cfg, out_dir, fmt)
        if args.command == 'check-curve':
            return cmd_check_curve(args, fmt)
        if args.command == 'stability':
            cfg = load_scenario(args.config, defaults=args.config_defaults)
            return cmd_stability(args, cfg, out_dir, fmt)
        if args.command == 'converge':
            return cmd_converge(args, out_dir, fmt, base.output.plots)
        if args.command == 'norms':
            return cmd_norms(args, fmt)
    except SplashSimError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return IoFailure.exit_code
    except KeyboardInterrupt:
        logger.info("User interruption")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
