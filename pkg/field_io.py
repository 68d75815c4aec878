#!/usr/bin/env python3
"""
Curve, snapshot and manifest files.

Curves:     ``curve v1 N=<count> period=<period>`` then ``alpha x y`` rows.
Snapshots:  ``# snapshot v1 checksum=<sha256> time=<t> n=<nodes>`` then
            ``node_id v1 v2 q`` rows, tied to the domain they were written on.
Manifest:   CSV, one row per snapshot, plus a ``domain_<k>.json`` sidecar per
            domain so the history can be reloaded without the scenario.
"""

import csv
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from conformal import BranchCut, build_map
from curve import ClosedCurve
from elliptic import DiscreteDomain
from errors import DomainMismatch, IoFailure

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
CURVE_MAGIC = "curve"
SNAPSHOT_MAGIC = "# snapshot"
VERSION = "v1"
MANIFEST_FIELDS = ("time", "window", "snapshot", "domain", "momentum_residual", "stress_residual",
                   "energy", "case", "approach")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _header_fields(line: str, magic: str, source: PathLike) -> Dict[str, str]:
    parts = line.split()
    expected = magic.split()
    if parts[:len(expected)] != expected or len(parts) <= len(expected) or parts[len(expected)] != VERSION:
        raise IoFailure(f"{source}: expected a '{magic} {VERSION}' header, got {line.strip()!r}")
    out = {}
    for item in parts[len(expected) + 1:]:
        key, sep, value = item.partition("=")
        if not sep:
            raise IoFailure(f"{source}: malformed header field {item!r}")
        out[key] = value
    return out


def _read_lines(path: PathLike) -> List[str]:
    try:
        with open(path, "r") as f:
            return [line for line in f if line.strip()]
    except OSError as e:
        raise IoFailure(f"Cannot read {path}: {e}") from e


def _write_text(path: PathLike, text: str) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            f.write(text)
    except OSError as e:
        raise IoFailure(f"Cannot write {path}: {e}") from e


# ---------------------------------------------------------------------------
# Curves
# ---------------------------------------------------------------------------

def format_curve(curve: ClosedCurve) -> str:
    lines = [f"{CURVE_MAGIC} {VERSION} N={curve.n} period={_fmt(curve.period)}"]
    for a, z in zip(curve.alpha, curve.points):
        lines.append(f"{_fmt(a)} {_fmt(z.real)} {_fmt(z.imag)}")
    return "\n".join(lines) + "\n"


def write_curve(path: PathLike, curve: ClosedCurve) -> Path:
    _write_text(path, format_curve(curve))
    return Path(path)


def _curve_table(path: PathLike) -> Tuple[float, np.ndarray]:
    lines = _read_lines(path)
    if not lines:
        raise IoFailure(f"{path}: empty curve file")
    header = _header_fields(lines[0], CURVE_MAGIC, path)
    try:
        count = int(header["N"])
        period = float(header.get("period", 2 * np.pi))
        table = np.array([[float(x) for x in line.split()] for line in lines[1:]])
    except (KeyError, ValueError) as e:
        raise IoFailure(f"{path}: malformed curve data: {e}") from e
    if table.ndim != 2 or table.shape[0] != count or table.shape[1] != 3:
        raise IoFailure(f"{path}: expected {count} rows of 'alpha x y', got shape {table.shape}")
    return period, table


def read_curve(path: PathLike) -> ClosedCurve:
    period, table = _curve_table(path)
    return ClosedCurve(table[:, 1] + 1j * table[:, 2], period)


def read_stream_samples(path: PathLike, alpha: np.ndarray) -> np.ndarray:
    """psi0 samples from a curve-format file whose third column holds psi0.

    Values are interpolated periodically in normalized parameter onto alpha.
    """
    period, table = _curve_table(path)
    source = table[:, 0] / period
    order = np.argsort(source)
    xp = np.concatenate([source[order] - 1.0, source[order], source[order] + 1.0])
    fp = np.tile(table[order, 2], 3)
    target = np.mod(np.asarray(alpha, dtype=float) / (2 * np.pi), 1.0)
    return np.interp(target, xp, fp)


# ---------------------------------------------------------------------------
# Snapshots
# ---------------------------------------------------------------------------

@dataclass
class Snapshot:
    checksum: str
    time: float
    v: np.ndarray
    q: np.ndarray


def write_snapshot(path: PathLike, dom: DiscreteDomain, time: float, v: np.ndarray, q: np.ndarray) -> Path:
    v = np.asarray(v, dtype=float)
    q = np.asarray(q, dtype=float)
    if v.shape != (2, dom.size) or q.shape != (dom.size,):
        raise IoFailure(f"Snapshot fields do not match the domain: v {v.shape}, q {q.shape}, n = {dom.size}")
    lines = [f"{SNAPSHOT_MAGIC} {VERSION} checksum={dom.checksum} time={_fmt(time)} n={dom.size}"]
    lines.extend(f"{i} {_fmt(v[0, i])} {_fmt(v[1, i])} {_fmt(q[i])}" for i in range(dom.size))
    _write_text(path, "\n".join(lines) + "\n")
    return Path(path)


def read_snapshot(path: PathLike, dom: Optional[DiscreteDomain] = None) -> Snapshot:
    lines = _read_lines(path)
    if not lines:
        raise IoFailure(f"{path}: empty snapshot")
    header = _header_fields(lines[0], SNAPSHOT_MAGIC, path)
    try:
        n = int(header["n"])
        time = float(header["time"])
        checksum = header["checksum"]
        table = np.array([[float(x) for x in line.split()] for line in lines[1:]])
    except (KeyError, ValueError) as e:
        raise IoFailure(f"{path}: malformed snapshot: {e}") from e
    if table.shape != (n, 4) or np.any(table[:, 0] != np.arange(n)):
        raise IoFailure(f"{path}: expected {n} rows 'node_id v1 v2 q'")
    if dom is not None and dom.checksum != checksum:
        raise DomainMismatch(f"{path} was written on domain {checksum[:12]}, not {dom.checksum[:12]}")
    return Snapshot(checksum, time, table[:, 1:3].T.copy(), table[:, 3].copy())


# ---------------------------------------------------------------------------
# Domain sidecars
# ---------------------------------------------------------------------------

def domain_record(dom: DiscreteDomain, curve_file: str) -> Dict[str, Any]:
    cmap = dom.conformal_map
    record = {
        "checksum": dom.checksum,
        "curve": curve_file,
        "radial": dom.radial,
        "angular": dom.angular,
        "map": cmap.name,
        "center": [dom.center.real, dom.center.imag],
        "frame_offset": [dom.frame_offset.real, dom.frame_offset.imag],
    }
    if hasattr(cmap, "scale"):
        record["scale"] = cmap.scale
    if hasattr(cmap, "cut"):
        verts = cmap.cut.vertices[:-1]
        record["cut"] = [[z.real, z.imag] for z in verts]
    return record


def write_domain(out_dir: PathLike, dom: DiscreteDomain, stem: str) -> Path:
    out_dir = Path(out_dir)
    curve_file = f"{stem}.curve"
    write_curve(out_dir / curve_file, dom.curve)
    path = out_dir / f"{stem}.json"
    _write_text(path, json.dumps(domain_record(dom, curve_file), indent=2))
    return path


def load_domain(path: PathLike) -> DiscreteDomain:
    """Rebuild a domain from its sidecar and verify the checksum."""
    path = Path(path)
    try:
        record = json.loads(path.read_text())
    except (OSError, ValueError) as e:
        raise IoFailure(f"Cannot read domain sidecar {path}: {e}") from e
    curve = read_curve(path.parent / record["curve"])
    cut = BranchCut([complex(x, y) for x, y in record["cut"]]) if "cut" in record else None
    cmap = build_map(record["map"], cut, record.get("scale", 1.0))
    dom = DiscreteDomain(curve, record["radial"], record["angular"], conformal_map=cmap,
                         frame_offset=complex(*record["frame_offset"]), center=complex(*record["center"]))
    if dom.checksum != record["checksum"]:
        raise DomainMismatch(f"Rebuilt domain {dom.checksum[:12]} does not match sidecar {record['checksum'][:12]}")
    return dom


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
    except OSError as e:
        raise IoFailure(f"Cannot write {path}: {e}") from e
    return Path(path)


def read_manifest(path: PathLike) -> List[Dict[str, str]]:
    try:
        with open(path, "r", newline="") as f:
            rows = list(csv.DictReader(f))
    except OSError as e:
        raise IoFailure(f"Cannot read manifest {path}: {e}") from e
    if rows and not {"time", "snapshot", "domain"} <= set(rows[0]):
        raise IoFailure(f"{path} is not a solution manifest")
    return rows


def write_history(path: PathLike, history: Sequence[Any]) -> Path:
    """Picard iteration history as CSV."""
    records = [asdict(r) for r in history]
    header = list(records[0]) if records else ["iteration", "dw", "dq", "dX", "combined", "factor", "wall_time"]
    return write_csv(path, header, ([r[k] for k in header] for r in records))


class SolutionWriter:
    """Per-run directory of snapshots, domain sidecars and a manifest."""

    def __init__(self, out_dir: PathLike, every: int = 1):
        self.out_dir = Path(out_dir)
        self.every = max(1, int(every))
        self.rows: List[Dict[str, Any]] = []
        self._domains: Dict[str, str] = {}
        self._count = 0
        try:
            (self.out_dir / "snapshots").mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise IoFailure(f"Cannot create output directory {self.out_dir}: {e}") from e

    def domain_file(self, dom: DiscreteDomain) -> str:
        if dom.checksum not in self._domains:
            stem = f"domain_{len(self._domains)}"
            write_domain(self.out_dir, dom, stem)
            self._domains[dom.checksum] = f"{stem}.json"
        return self._domains[dom.checksum]

    def add(self, dom: DiscreteDomain, window: int, time: float, v: np.ndarray, q: np.ndarray,
            residuals: Tuple[float, float] = (0.0, 0.0), energy: float = 0.0,
            case: str = "", approach: float = float("nan"), force: bool = False) -> None:
        self._count += 1
        if not force and (self._count - 1) % self.every:
            return
        name = f"snapshots/w{window:03d}_t{time:.6f}.txt"
        write_snapshot(self.out_dir / name, dom, time, v, q)
        self.rows.append({
            "time": float(time), "window": window, "snapshot": name, "domain": self.domain_file(dom),
            "momentum_residual": float(residuals[0]), "stress_residual": float(residuals[1]),
            "energy": float(energy), "case": case, "approach": float(approach),
        })

    def flush(self) -> Path:
        path = self.out_dir / "manifest.csv"
        write_csv(path, MANIFEST_FIELDS, ([row[k] for k in MANIFEST_FIELDS] for row in self.rows))
        logger.info(f"Manifest written: {path} ({len(self.rows)} snapshots)")
        return path


def load_history(manifest: PathLike) -> List[Tuple[DiscreteDomain, List[Snapshot]]]:
    """Snapshots grouped by domain, in manifest order."""
    manifest = Path(manifest)
    rows = read_manifest(manifest)
    groups: Dict[str, Tuple[DiscreteDomain, List[Snapshot]]] = {}
    order: List[str] = []
    for row in rows:
        key = row["domain"]
        if key not in groups:
            groups[key] = (load_domain(manifest.parent / key), [])
            order.append(key)
        dom, snaps = groups[key]
        snaps.append(read_snapshot(manifest.parent / row["snapshot"], dom))
    return [groups[k] for k in order]
