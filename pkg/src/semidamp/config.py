"""Line-based configuration files (INI sections) with schema validation.

The schema lives in config_schema.txt next to this module; validation
errors name the offending section.key.
"""

from __future__ import annotations

import configparser
import hashlib
from pathlib import Path

from .errors import ConfigError
from .quantize import SpongeConfig
from .scenarios import SCENARIOS, Scenario
import dataclasses

# section -> key -> (type, required, doc)
SCHEMA = {
    "scenario": {
        "name": (str, False, "registered scenario name to start from"),
        "potential": (str, False, "potential preset, e.g. double_barrier(2,2,0.4)"),
        "damping": (str, False, "damping preset, e.g. well_centered(1,1)"),
    },
    "grid": {
        "x_min": (float, False, "left box end"),
        "x_max": (float, False, "right box end"),
        "n_points": (int, False, "fixed grid size (overrides the h-based rule)"),
        "stencil_order": (int, False, "finite-difference order, 2 or 4"),
        "kinetic": (str, False, "fd or spectral"),
        "guard_factor": (float, False, "points-per-oscillation guard"),
        "e_max": (float, False, "top energy the guard resolves"),
    },
    "sponge": {
        "strength": (float, False, "absorbing ramp amplitude (0 disables)"),
        "width_fraction": (float, False, "fraction of the box per side"),
        "power": (int, False, "ramp monomial power"),
    },
    "params": {
        "h": (float, False, "semiclassical parameter"),
        "nu_law": (str, False, "linear | quadratic | power(c,k)"),
        "s": (float, False, "weight exponent"),
        "interval": (str, False, "energy window a,b"),
        "mu_min": (float, False, "Im z floor for scans"),
        "seed": (int, False, "base seed"),
    },
    "run": {
        "command": (str, True, "flow|classify|resolvent|sweep|egorov|dilation|besov|accept"),
        "h_list": (str, False, "comma-separated h values"),
        "out_dir": (str, False, "artifact directory"),
        "plots": (bool, False, "render figures next to the CSVs"),
        "t": (float, False, "time argument (flow/egorov/dilation)"),
        "z": (str, False, "spectral point re,im"),
        "symbol": (str, False, "egorov observable preset"),
        "check": (str, False, "dilation check: resolvent|semigroup"),
        "channel_length": (float, False, "dilation channel length L"),
        "x0": (float, False, "initial position (flow)"),
        "xi0": (float, False, "initial momentum (flow)"),
        "energy": (float, False, "shell energy (classify)"),
        "ref": (str, False, "besov reference operator: ah|x"),
    },
}

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def schema_text() -> str:
    lines = ["# semidamp configuration schema",
             "# line-based key = value entries inside [section] headers", ""]
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (typ, required, doc) in keys.items():
            req = "required" if required else "optional"
            lines.append(f"{key} = <{typ.__name__}>   ; {req}: {doc}")
        lines.append("")
    return "\n".join(lines)


def _coerce(section: str, key: str, raw: str):
    typ = SCHEMA[section][key][0]
    try:
        if typ is bool:
            low = raw.strip().lower()
            if low in _BOOL_TRUE:
                return True
            if low in _BOOL_FALSE:
                return False
            raise ValueError(raw)
        return typ(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r} as {typ.__name__}")


def load_config(path) -> dict:
    """Parse and validate a config file into {section: {key: value}}."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    parser.read(path)
    out: dict = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        out[section] = {}
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")
            out[section][key] = _coerce(section, key, raw)
    for section, keys in SCHEMA.items():
        for key, (_, required, _doc) in keys.items():
            if required and (section not in out or key not in out[section]):
                raise ConfigError(f"missing required key {section}.{key}")
    return out


def config_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def scenario_from_config(cfg: dict) -> Scenario:
    """Resolve the configured scenario, applying overrides on a base preset."""
    sc_cfg = cfg.get("scenario", {})
    name = sc_cfg.get("name")
    if name is not None:
        if name not in SCENARIOS:
            raise ConfigError(f"scenario.name: unknown scenario {name!r}")
        base = SCENARIOS[name]
    else:
        base = SCENARIOS["free"]
    updates: dict = {}
    if "potential" in sc_cfg:
        updates["potential_expr"] = sc_cfg["potential"]
    if "damping" in sc_cfg:
        updates["damping_expr"] = sc_cfg["damping"]
    grid = cfg.get("grid", {})
    for src, dst in (("x_min", "x_min"), ("x_max", "x_max"),
                     ("stencil_order", "stencil_order"), ("kinetic", "kinetic"),
                     ("guard_factor", "guard_factor"), ("e_max", "e_max")):
        if src in grid:
            updates[dst] = grid[src]
    sponge = cfg.get("sponge", {})
    if sponge:
        strength = sponge.get("strength", SpongeConfig().strength)
        if strength <= 0:
            updates["sponge"] = None
        else:
            updates["sponge"] = SpongeConfig(
                strength=strength,
                width_fraction=sponge.get("width_fraction",
                                          SpongeConfig().width_fraction),
                power=sponge.get("power", SpongeConfig().power))
    params = cfg.get("params", {})
    if "nu_law" in params:
        updates["nu_kind"] = params["nu_law"]
    if "s" in params:
        updates["s"] = params["s"]
    if "mu_min" in params:
        updates["mu_min"] = params["mu_min"]
    if "seed" in params:
        updates["seed"] = params["seed"]
    if "interval" in params:
        parts = [p for p in params["interval"].split(",") if p.strip()]
        if len(parts) != 2:
            raise ConfigError("params.interval must be 'a,b'")
        updates["interval"] = (float(parts[0]), float(parts[1]))
    if updates:
        base = dataclasses.replace(base, **updates)
    # probe that the potential expressions resolve
    _ = base.potential
    return base


def parse_h_list(raw: str) -> list[float]:
    try:
        hs = [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"run.h_list: cannot parse {raw!r}")
    if not hs:
        raise ConfigError("run.h_list is empty")
    return hs


def parse_z(raw: str) -> complex:
    parts = [p for p in raw.split(",") if p.strip()]
    if len(parts) != 2:
        raise ConfigError("z must be 're,im'")
    return complex(float(parts[0]), float(parts[1]))
