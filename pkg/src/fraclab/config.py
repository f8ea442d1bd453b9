"""Run configuration for the command line front end.

A run is described by a flat key-value file with a single section whose
name is the command, e.g.

    [cutoff]
    domain = koch
    level = 7
    s = 0.3
    p = 1.0
    n_grid = 8,16,32,64
    seed = 1
    samples = 200000
    output_dir = out

Every key has a typed default; command line flags override file values.
Unknown keys are rejected rather than ignored, and `validate` reports the
full list of precondition violations without running anything.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import math
from dataclasses import dataclass

COMMANDS = ("dimension", "tube", "seminorm", "hardy", "density", "cutoff",
            "koch", "reduction", "scaling")

DOMAINS = ("disk", "square", "koch", "comb")

FIELD_NAMES = ("const", "indicator", "coord_x1", "coord_x2", "dist", "distpow")

PHI_KINDS = ("power", "tabulated")

METHODS = ("montecarlo", "grid")


class ConfigError(ValueError):
    """Malformed configuration: unknown key, bad literal, missing section."""


@dataclass(frozen=True)
class RunConfig:
    command: str = "dimension"
    domain: str = "disk"
    level: int = 7              # koch substitution depth / comb tooth count
    s: float = 0.5
    p: float = 2.0
    field: str = "indicator"
    n_grid: tuple = (8, 16, 32, 64, 128, 256)
    seed: int = 0
    samples: int = 1_000_000
    output_dir: str = "out"
    method: str = "montecarlo"  # seminorm estimator backend
    grid_n: int = 48
    r_min: float = 1e-3         # tube fit window
    r_max: float = 1e-1
    n_r: int = 12
    kappa: float = 0.05         # plumpness constant to certify
    R_loc: float = 2.0          # localization factor, and psi check range
    eta: float = 0.5            # scaling exponent claimed for phi
    H: float = 1.0
    phi_kind: str = "power"
    phi_exponent: float = 0.5
    phi_breaks: tuple = ()
    phi_values: tuple = ()
    tube_level: int = 9         # finer prefractal for the koch tube fit


def _parse_int(text: str) -> int:
    return int(text.strip())


def _parse_float(text: str) -> float:
    v = float(text.strip())
    if math.isnan(v):
        raise ValueError("nan is not a valid value")
    return v


def _parse_str(text: str) -> str:
    return text.strip()


def _parse_int_tuple(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(tok.strip()) for tok in text.split(","))


def _parse_float_tuple(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(tok.strip()) for tok in text.split(","))


_PARSERS = {
    "command": _parse_str,
    "domain": _parse_str,
    "level": _parse_int,
    "s": _parse_float,
    "p": _parse_float,
    "field": _parse_str,
    "n_grid": _parse_int_tuple,
    "seed": _parse_int,
    "samples": _parse_int,
    "output_dir": _parse_str,
    "method": _parse_str,
    "grid_n": _parse_int,
    "r_min": _parse_float,
    "r_max": _parse_float,
    "n_r": _parse_int,
    "kappa": _parse_float,
    "R_loc": _parse_float,
    "eta": _parse_float,
    "H": _parse_float,
    "phi_kind": _parse_str,
    "phi_exponent": _parse_float,
    "phi_breaks": _parse_float_tuple,
    "phi_values": _parse_float_tuple,
    "tube_level": _parse_int,
}

KEYS = tuple(f.name for f in dataclasses.fields(RunConfig) if f.name != "command")
assert set(_PARSERS) == set(KEYS) | {"command"}


def _format_value(v) -> str:
    if isinstance(v, tuple):
        return ",".join(_format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_ini(cfg: RunConfig) -> str:
    """Serialize with every key explicit; from_ini(to_ini(c)) == c."""
    lines = [f"[{cfg.command}]"]
    for name in KEYS:
        lines.append(f"{name} = {_format_value(getattr(cfg, name))}")
    return "\n".join(lines) + "\n"


def from_ini(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keys are case-sensitive (R_loc, H)
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"cannot parse config file: {e}") from None
    sections = cp.sections()
    if len(sections) != 1:
        raise ConfigError(
            f"config must have exactly one [command] section, found {len(sections)}")
    command = sections[0]
    if command not in COMMANDS:
        raise ConfigError(
            f"unknown command section [{command}]; expected one of {', '.join(COMMANDS)}")
    values = {"command": command}
    for key, raw in cp.items(command):
        if key not in _PARSERS or key == "command":
            raise ConfigError(f"unknown config key {key!r} in section [{command}]")
        try:
            values[key] = _PARSERS[key](raw)
        except ValueError as e:
            raise ConfigError(f"bad value for {key!r}: {raw!r} ({e})") from None
    return RunConfig(**values)


def read_config(path: str) -> RunConfig:
    try:
        with io.open(path, "r", encoding="utf-8") as fh:
            return from_ini(fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read config file {path!r}: {e}") from None


def apply_overrides(cfg: RunConfig, overrides: dict) -> RunConfig:
    """Apply raw string overrides (command line flags) on top of cfg."""
    values = {}
    for key, raw in overrides.items():
        if key == "command" or key not in _PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            values[key] = _PARSERS[key](raw)
        except ValueError as e:
            raise ConfigError(f"bad value for {key!r}: {raw!r} ({e})") from None
    return dataclasses.replace(cfg, **values)


def _scale_floor(cfg: RunConfig) -> float:
    # mirrors the geometry factories without building the domain
    if cfg.domain == "koch":
        return 10.0 * 3.0 ** (-cfg.level)
    return 0.0


def validate(cfg: RunConfig) -> list:
    """Dry-run precondition report: a list of violation strings, empty when
    the configuration is runnable.  Does not execute any estimator."""
    out = []
    if cfg.command not in COMMANDS:
        out.append(f"command {cfg.command!r} is not one of {', '.join(COMMANDS)}")
        return out
    if cfg.domain not in DOMAINS:
        out.append(f"domain {cfg.domain!r} is not one of {', '.join(DOMAINS)}")
    if cfg.domain == "koch" and not (0 <= cfg.level <= 10):
        out.append(f"koch level {cfg.level} outside [0, 10]")
    if cfg.domain == "comb" and cfg.level < 1:
        out.append(f"comb needs level >= 1 teeth, got {cfg.level}")
    if not (0.0 < cfg.s < 1.0):
        out.append(f"s={cfg.s:g} outside the open interval (0, 1)")
    if not cfg.p >= 1.0:
        out.append(f"p={cfg.p:g} below 1")
    if cfg.seed < 0:
        out.append(f"seed {cfg.seed} is negative")
    if cfg.samples < 1:
        out.append(f"samples {cfg.samples} below 1")
    if not cfg.output_dir:
        out.append("output_dir is empty")

    floor = _scale_floor(cfg)
    if cfg.command in ("cutoff", "koch"):
        ns = cfg.n_grid
        if len(ns) < 2 or len(set(ns)) != len(ns) or list(ns) != sorted(ns):
            out.append(f"n_grid must be strictly increasing with >= 2 entries, got {ns}")
        elif ns[0] < 1:
            out.append(f"n_grid entries must be >= 1, got smallest {ns[0]}")
        elif floor > 0 and 3.0 / ns[-1] < floor:
            lv = cfg.level
            out.append(
                f"resolution rule violated: 3^-{lv}={3.0 ** (-lv):.3g} exceeds"
                f" (3/{ns[-1]})/10={3.0 / ns[-1] / 10.0:.3g}; the level-{lv}"
                f" prefractal cannot resolve the 3/{ns[-1]} tube")
    if cfg.command == "koch" and not (0 <= cfg.tube_level <= 10):
        out.append(f"tube_level {cfg.tube_level} outside [0, 10]")
    if cfg.command == "tube":
        if not (0.0 < cfg.r_min < cfg.r_max):
            out.append(f"need 0 < r_min < r_max, got r_min={cfg.r_min:g} r_max={cfg.r_max:g}")
        elif floor > 0 and cfg.r_min < floor:
            out.append(
                f"resolution rule violated: r_min={cfg.r_min:g} below the"
                f" level-{cfg.level} floor {floor:.3g}")
        if cfg.n_r < 3:
            out.append(f"n_r={cfg.n_r} gives too few radii for a fit (need >= 3)")
    if cfg.command in ("seminorm", "hardy", "reduction") and cfg.field not in FIELD_NAMES:
        out.append(f"field {cfg.field!r} is not one of {', '.join(FIELD_NAMES)}")
    if cfg.command == "seminorm":
        if cfg.method not in METHODS:
            out.append(f"method {cfg.method!r} is not one of {', '.join(METHODS)}")
        if cfg.method == "grid" and cfg.grid_n < 8:
            out.append(f"grid_n={cfg.grid_n} too coarse (need >= 8)")
    if cfg.command == "density" and cfg.kappa <= 0:
        out.append(f"kappa={cfg.kappa:g} must be positive")
    if cfg.command in ("reduction", "scaling"):
        if cfg.R_loc <= 0:
            out.append(f"R_loc={cfg.R_loc:g} must be positive")
        if cfg.phi_kind not in PHI_KINDS:
            out.append(f"phi_kind {cfg.phi_kind!r} is not one of {', '.join(PHI_KINDS)}")
        elif cfg.phi_kind == "tabulated":
            b, v = cfg.phi_breaks, cfg.phi_values
            if len(b) != len(v) or len(b) < 2:
                out.append("tabulated phi needs matching phi_breaks/phi_values with >= 2 points")
            elif not all(x > 0 for x in b) or list(b) != sorted(b) or len(set(b)) != len(b):
                out.append("phi_breaks must be positive and strictly increasing")
            elif not all(x > 0 for x in v):
                out.append("phi_values must be positive")
    if cfg.command == "scaling" and not (0.0 < cfg.H <= 1.0):
        out.append(f"H={cfg.H:g} outside (0, 1]")
    return out
