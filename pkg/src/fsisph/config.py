"""Run-configuration files: a sectioned key = value format.

The format is deliberately small: `[section]` headers, `key = value`
pairs, `#` comments. Unknown sections or keys are rejected with their
line number, as are malformed or out-of-range values, so a typo cannot
silently fall back to a default. `serialize` followed by `parse` is an
identity on ScenarioConfig (floats are written in shortest round-trip
form).
"""

from __future__ import annotations

import io

from .errors import ConfigError
from .scenarios import PRESETS, ProbeSpec, ScenarioConfig

GEOMETRY_KEYS = {
    "beam": {"channel_length", "channel_height", "cylinder_x", "cylinder_y",
             "cylinder_r", "beam_length", "beam_height"},
    "dam-gate": {"column_width", "column_height", "gate_length",
                 "gate_thickness", "floor_runout", "tank_height"},
    "valve": {"channel_height", "channel_length", "leaflet_x",
              "leaflet_fraction", "leaflet_thickness"},
    "fish": {"channel_length", "channel_height", "anchor_x", "anchor_y",
             "cable_length", "body_length", "body_thickness"},
}

_INFLOW_KEYS = {
    "parabolic": {"kind", "u0", "ramp_time"},
    "pulsatile": {"kind", "amplitude", "period", "womersley"},
}


def _parse_lines(text: str):
    entries = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            entries.setdefault(section, {})
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in entries[section]:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} in [{section}]")
        entries[section][key] = (value, lineno)
    return entries


def _take(entries, section, key, conv, required=True, default=None):
    sec = entries.get(section, {})
    if key not in sec:
        if required:
            raise ConfigError(f"missing required key {key!r} in [{section}]")
        return default
    value, lineno = sec.pop(key)
    try:
        return conv(value)
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None


def _positive(value: str) -> float:
    x = float(value)
    if x <= 0.0:
        raise ValueError(f"{x} must be positive")
    return x


def _nonneg(value: str) -> float:
    x = float(value)
    if x < 0.0:
        raise ValueError(f"{x} must be non-negative")
    return x


def parse_config(source) -> ScenarioConfig:
    """Parse a config file (path or file object) into a ScenarioConfig."""
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    entries = _parse_lines(text)

    name = _take(entries, "scenario", "name", str)
    geometry = _take(entries, "scenario", "geometry", str)
    if geometry not in GEOMETRY_KEYS:
        raise ConfigError(f"unknown geometry {geometry!r}")
    mode = _take(entries, "scenario", "mode", str)
    end_time = _take(entries, "scenario", "end_time", _positive)

    dp_fluid = _take(entries, "resolution", "dp_fluid", _positive)
    dp_solid = _take(entries, "resolution", "dp_solid", _positive)

    fluid = dict(
        rho0=_take(entries, "fluid", "rho0", _positive),
        c=_take(entries, "fluid", "sound_speed", _positive),
        gamma=_take(entries, "fluid", "gamma", _positive, required=False,
                    default=7.0),
        eta=_take(entries, "fluid", "viscosity", _nonneg, required=False,
                  default=0.0),
    )

    solid = None
    if "solid" in entries:
        solid = dict(
            rho0=_take(entries, "solid", "rho0", _positive),
            youngs_modulus=_take(entries, "solid", "youngs_modulus", _positive),
            poisson_ratio=_take(entries, "solid", "poisson_ratio", float),
            model=_take(entries, "solid", "model", str, required=False,
                        default="linear-elastic"),
        )

    gravity = (_take(entries, "gravity", "gx", float, required=False, default=0.0),
               _take(entries, "gravity", "gy", float, required=False, default=0.0))

    inflow = None
    if "inflow" in entries:
        kind = _take(entries, "inflow", "kind", str)
        if kind not in _INFLOW_KEYS:
            raise ConfigError(f"unknown inflow kind {kind!r}")
        if kind == "parabolic":
            inflow = dict(kind=kind,
                          u0=_take(entries, "inflow", "u0", float),
                          ramp_time=_take(entries, "inflow", "ramp_time", _positive))
        else:
            inflow = dict(kind=kind,
                          amplitude=_take(entries, "inflow", "amplitude", _positive),
                          period=_take(entries, "inflow", "period", _positive),
                          womersley=_take(entries, "inflow", "womersley", _positive))

    geometry_params = {}
    for key in sorted(GEOMETRY_KEYS[geometry]):
        geometry_params[key] = _take(entries, "geometry", key, float)

    probes = []
    for key in sorted(entries.get("probes", {})):
        value, lineno = entries["probes"][key]
        parts = value.split()
        if len(parts) != 3:
            raise ConfigError(
                f"line {lineno}: probe {key!r} needs 'x y every'")
        try:
            x, y, every = (float(p) for p in parts)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad probe numbers") from None
        probes.append(ProbeSpec(key, (x, y), every))
    entries.get("probes", {}).clear()

    probe_every = _take(entries, "output", "probe_every", _positive,
                        required=False, default=0.05)
    snapshot_every = _take(entries, "output", "snapshot_every", _nonneg,
                           required=False, default=0.0)

    # anything left over is unknown
    for section, keys in entries.items():
        for key, (_, lineno) in keys.items():
            raise ConfigError(
                f"line {lineno}: unknown key {key!r} in [{section}]")

    return ScenarioConfig(
        name=name, geometry=geometry, mode=mode, dp_fluid=dp_fluid,
        dp_solid=dp_solid, end_time=end_time, gravity=gravity, fluid=fluid,
        solid=solid, inflow=inflow, geometry_params=geometry_params,
        probes=probes, probe_every=probe_every, snapshot_every=snapshot_every)


def serialize_config(cfg: ScenarioConfig) -> str:
    out = io.StringIO()

    def section(name, pairs):
        out.write(f"[{name}]\n")
        for key, value in pairs:
            out.write(f"{key} = {value!r}\n" if isinstance(value, str)
                      else f"{key} = {repr(value)}\n")
        out.write("\n")

    def fsec(name, pairs):
        out.write(f"[{name}]\n")
        for key, value in pairs:
            out.write(f"{key} = {value}\n")
        out.write("\n")

    fsec("scenario", [("name", cfg.name), ("geometry", cfg.geometry),
                      ("mode", cfg.mode), ("end_time", repr(cfg.end_time))])
    fsec("resolution", [("dp_fluid", repr(cfg.dp_fluid)),
                        ("dp_solid", repr(cfg.dp_solid))])
    fsec("fluid", [("rho0", repr(cfg.fluid["rho0"])),
                   ("sound_speed", repr(cfg.fluid["c"])),
                   ("gamma", repr(cfg.fluid.get("gamma", 7.0))),
                   ("viscosity", repr(cfg.fluid.get("eta", 0.0)))])
    if cfg.solid is not None:
        fsec("solid", [("rho0", repr(cfg.solid["rho0"])),
                       ("youngs_modulus", repr(cfg.solid["youngs_modulus"])),
                       ("poisson_ratio", repr(cfg.solid["poisson_ratio"])),
                       ("model", cfg.solid.get("model", "linear-elastic"))])
    fsec("gravity", [("gx", repr(cfg.gravity[0])), ("gy", repr(cfg.gravity[1]))])
    if cfg.inflow is not None:
        fsec("inflow", [(k, v if isinstance(v, str) else repr(v))
                        for k, v in cfg.inflow.items()])
    fsec("geometry", [(k, repr(cfg.geometry_params[k]))
                      for k in sorted(cfg.geometry_params)])
    if cfg.probes:
        fsec("probes", [(p.probe_id,
                         f"{p.point[0]!r} {p.point[1]!r} {p.every!r}")
                        for p in cfg.probes])
    fsec("output", [("probe_every", repr(cfg.probe_every)),
                    ("snapshot_every", repr(cfg.snapshot_every))])
    return out.getvalue()


def load_preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]()
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise ConfigError(f"unknown preset {name!r}; known presets: {known}") from None
