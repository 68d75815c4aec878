#!/usr/bin/env python3
"""Deterministic SVG figures for timelines and studies."""

import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from errors import IoFailure  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
CASE_COLORS = {
    "CaseA_Simple": "#1f77b4",
    "CaseB_Touching": "#ff7f0e",
    "CaseC_Crossing": "#d62728",
}

matplotlib.rcParams["svg.hashsalt"] = "splash-sim"
matplotlib.rcParams["svg.fonttype"] = "none"


def _save(fig, path: PathLike) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise IoFailure(f"Cannot write figure {path}: {e}") from e
    finally:
        plt.close(fig)
    logger.debug(f"Figure written: {path}")
    return path


def plot_timeline(path: PathLike, times: Sequence[float], cases: Sequence[str], approach: Sequence[float],
                  curves: Sequence[np.ndarray], t_star: Optional[float] = None) -> Path:
    """Preimage curves coloured by case, and approach distance against time."""
    fig, (ax_curve, ax_dist) = plt.subplots(1, 2, figsize=(11, 5))
    for z, case in zip(curves, cases):
        z = np.asarray(z)
        closed = np.append(z, z[:1])
        ax_curve.plot(closed.real, closed.imag, color=CASE_COLORS.get(case, "k"), linewidth=0.8)
    ax_curve.set_aspect("equal", adjustable="datalim")
    ax_curve.set_title("Physical preimage")
    ax_curve.set_xlabel("x")
    ax_curve.set_ylabel("y")

    if len(times):
        t = np.asarray(times, dtype=float)
        d = np.asarray(approach, dtype=float)
        colors = [CASE_COLORS.get(c, "k") for c in cases]
        ax_dist.plot(t, d, "-", color="0.6", linewidth=0.8)
        ax_dist.scatter(t, d, c=colors, s=12, zorder=3)
    if t_star is not None:
        ax_dist.axvline(t_star, color="k", linestyle=":", linewidth=0.8)
        ax_dist.annotate(f"t* = {t_star:.6g}", xy=(t_star, 0.0), xytext=(4, 12),
                         textcoords="offset points", fontsize=8)
    ax_dist.set_xlabel("t")
    ax_dist.set_ylabel("approach distance")
    ax_dist.grid(True, alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def plot_convergence(path: PathLike, h: Sequence[float], errors: Sequence[float], order: float,
                     title: str = "") -> Path:
    """Log-log error plot with the fitted slope."""
    fig, ax = plt.subplots(figsize=(6, 5))
    h = np.asarray(h, dtype=float)
    err = np.asarray(errors, dtype=float)
    if len(h):
        ax.loglog(h, err, "o-", color="#1f77b4", linewidth=1.5, markersize=5, label="error")
        ref = err[0] * (h / h[0]) ** order
        ax.loglog(h, ref, "k:", linewidth=0.8, label=f"slope {order:.2f}")
        ax.legend(fontsize=8, loc="lower right")
    ax.set_xlabel("h")
    ax.set_ylabel("error")
    ax.set_title(title, fontsize=11)
    ax.grid(True, alpha=0.3, which="both")
    fig.tight_layout()
    return _save(fig, path)


def plot_stability(path: PathLike, eps: Sequence[float], distance: Sequence[float]) -> Path:
    fig, ax = plt.subplots(figsize=(6, 5))
    eps = np.asarray(eps, dtype=float)
    distance = np.asarray(distance, dtype=float)
    keep = eps > 0
    if np.any(keep):
        ax.loglog(eps[keep], distance[keep], "s-", color="#2ca02c", label="sup-time distance")
        ax.loglog(eps[keep], eps[keep] * distance[keep][0] / eps[keep][0], "k:", linewidth=0.8, label="linear")
        ax.legend(fontsize=8, loc="lower right")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("distance")
    ax.grid(True, alpha=0.3, which="both")
    fig.tight_layout()
    return _save(fig, path)
