#!/usr/bin/env python3
"""
Scenario and solver configuration.

Packaged defaults live in config.ini next to this module. Scenario files are
flat ``key = value`` text; every key must name a default from one of the
sections, and the values are layered over the defaults before typing.
"""

import configparser
import logging
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

from errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULTS_FILE = Path(__file__).with_name("config.ini")
SECTIONS = ("scenario", "solver", "picard", "output", "logging")
MODES = ("solver", "kinematic")
PLANES = ("tilde", "physical")
STREAMS = ("zero", "splash", "mode", "file")


@dataclass(frozen=True)
class SolverSettings:
    radial: int = 16
    angular: int = 64
    solver_tol: float = 1e-10
    compat_tol: float = 1e-8
    cache_size: int = 32
    blend_fraction: float = 0.5


@dataclass(frozen=True)
class PicardSettings:
    max_iter: int = 20
    tol: float = 1e-8
    s: float = 2.25
    n_box: int = 32
    stall_limit: int = 3


@dataclass(frozen=True)
class OutputSettings:
    out_dir: str = "output"
    default_format: str = "text"
    plots: bool = True
    snapshot_every: int = 1


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a splash run needs.

    curve is a builtin name (lobes, disk_union, circle, ellipse) or a path to
    a curve file. direction is the unit translation b; epsilon scales it.
    """
    mode: str = "solver"
    curve: str = "lobes"
    curve_samples: int = 128
    gap: float = 0.3
    cut: str = "negative-real"
    epsilon: float = 0.0
    direction: complex = 1.0 + 0.0j
    perturb: str = "tilde"
    stream: str = "splash"
    stream_mode: int = 2
    stream_file: str = ""
    amplitude: float = 0.5
    aim: complex = -1.0 + 0.0j
    window: float = 0.02
    dt: float = 0.002
    horizon: float = 0.2
    output_every: int = 1
    touch_tol: Optional[float] = None
    time_tol: Optional[float] = None
    kinematic_velocity: complex = -1.0 + 0.0j
    solver: SolverSettings = SolverSettings()
    picard: PicardSettings = PicardSettings()
    output: OutputSettings = OutputSettings()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.perturb not in PLANES:
            raise ConfigError(f"perturb must be one of {PLANES}, got {self.perturb!r}")
        if self.stream not in STREAMS:
            raise ConfigError(f"stream must be one of {STREAMS}, got {self.stream!r}")
        if self.stream == "file" and not self.stream_file:
            raise ConfigError("stream = file needs stream_file")
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be non-negative, got {self.epsilon}")
        if abs(abs(self.direction) - 1.0) > 1e-12:
            raise ConfigError(f"direction must be a unit vector, got |b| = {abs(self.direction):.6g}")
        if self.dt <= 0 or self.window <= 0 or self.horizon <= 0:
            raise ConfigError("dt, window and horizon must be positive")
        steps = self.window / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigError(f"window {self.window} is not a whole number of steps dt = {self.dt}")
        if self.output_every < 1:
            raise ConfigError("output_every must be at least 1")

    @property
    def offset(self) -> complex:
        return self.epsilon * self.direction

    @property
    def resolved_time_tol(self) -> float:
        return self.dt / 10 if self.time_tol is None else self.time_tol

    def with_epsilon(self, epsilon: float) -> "ScenarioConfig":
        return replace(self, epsilon=epsilon)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _strip(raw: str) -> str:
    return raw.strip().strip('"').strip("'")


def parse_complex(raw: str) -> complex:
    """'x, y' or 'x' or a Python complex literal like '1-2j'."""
    text = _strip(raw)
    try:
        if "," in text:
            x, y = (float(part) for part in text.split(","))
            return complex(x, y)
        return complex(text.replace(" ", ""))
    except ValueError as e:
        raise ConfigError(f"Cannot read {raw!r} as a point") from e


def _coerce(raw: str, target: Any) -> Any:
    text = _strip(raw)
    if target is None:
        # optional floats default to 'auto'
        return None if text.lower() in ("auto", "none", "") else float(text)
    if isinstance(target, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if isinstance(target, int):
        return int(text)
    if isinstance(target, float):
        return float(text)
    if isinstance(target, complex):
        return parse_complex(text)
    return text


def _typed(cls, values: Mapping[str, str], skip: Tuple[str, ...] = ()) -> Dict[str, Any]:
    out = {}
    for f in fields(cls):
        if f.name in skip or f.name not in values:
            continue
        try:
            out[f.name] = _coerce(values[f.name], f.default)
        except ValueError as e:
            raise ConfigError(f"Malformed value for {f.name}: {e}") from e
    return out


def load_defaults(path: Optional[Union[str, Path]] = None) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    path = Path(path) if path is not None else DEFAULTS_FILE
    if path.exists():
        parser.read(path)
    for section in SECTIONS:
        if not parser.has_section(section):
            parser.add_section(section)
    return parser


def _key_index(parser: configparser.ConfigParser) -> Dict[str, str]:
    index = {}
    for section in SECTIONS:
        for key in parser[section]:
            index[key] = section
    for section, cls in (("scenario", ScenarioConfig), ("solver", SolverSettings),
                         ("picard", PicardSettings), ("output", OutputSettings)):
        for f in fields(cls):
            if f.name not in ("solver", "picard", "output"):
                index.setdefault(f.name, section)
    return index


def layer(parser: configparser.ConfigParser, text: str, source: str = "<scenario>") -> configparser.ConfigParser:
    """Merge flat key = value text into the sectioned defaults."""
    flat = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        flat.read_string("[scenario]\n" + text, source=source)
    except configparser.Error as e:
        raise ConfigError(f"Cannot parse {source}: {e}") from e
    index = _key_index(parser)
    for key, value in flat["scenario"].items():
        if key not in index:
            raise ConfigError(f"Unknown configuration key {key!r} in {source}")
        parser[index[key]][key] = value
    return parser


def build_config(parser: configparser.ConfigParser, overrides: Optional[Mapping[str, Any]] = None) -> ScenarioConfig:
    solver = SolverSettings(**_typed(SolverSettings, parser["solver"]))
    picard = PicardSettings(**_typed(PicardSettings, parser["picard"]))
    output = OutputSettings(**_typed(OutputSettings, parser["output"]))
    values = _typed(ScenarioConfig, parser["scenario"], skip=("solver", "picard", "output"))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(values) - {f.name for f in fields(ScenarioConfig)}
    if unknown:
        raise ConfigError(f"Unknown scenario overrides: {sorted(unknown)}")
    return ScenarioConfig(solver=solver, picard=picard, output=output, **values)


def load_scenario(path: Optional[Union[str, Path]] = None, overrides: Optional[Mapping[str, Any]] = None,
                  defaults: Optional[Union[str, Path]] = None) -> ScenarioConfig:
    """Defaults, then the scenario file, then keyword overrides."""
    parser = load_defaults(defaults)
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigError(f"Cannot read scenario file {path}: {e}") from e
        layer(parser, text, str(path))
        logger.info(f"Loaded scenario {path}")
    return build_config(parser, overrides)


def logging_settings(parser: Optional[configparser.ConfigParser] = None) -> Tuple[str, str]:
    parser = parser or load_defaults()
    section = parser["logging"]
    return _strip(section.get("log_level", "INFO")).upper(), _strip(section.get("log_file", "splash_sim.log"))


def as_dict(cfg: ScenarioConfig) -> Dict[str, Any]:
    """Flat view for manifests and sidecars; complex values as [x, y]."""
    out: Dict[str, Any] = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if f.name in ("solver", "picard", "output"):
            out.update({sub.name: getattr(value, sub.name) for sub in fields(value)})
        elif isinstance(value, complex):
            out[f.name] = [value.real, value.imag]
        else:
            out[f.name] = value
    return out

