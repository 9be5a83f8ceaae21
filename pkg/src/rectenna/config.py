"""Run configuration: an INI-style text format with SI-suffix numbers.

Example::

    [chain]
    frequency = 9G
    elements = 4

    [rectifier]
    stages = 7
    load_resistance = 22k

    [antenna]
    table = default            # or a path to freq_hz,return_loss_db,gain_dbi

Every key has a default, so an empty file is a valid configuration. Unknown
sections or keys are rejected with their ``section.key`` path, and files
named by ``antenna.table`` or ``rectifier.diode`` must exist when parsed.
Note that a bare ``m`` suffix is milli: write ``distance = 1`` for one metre.
"""

from __future__ import annotations

import configparser
from pathlib import Path

from .chain import ChainConfig, LinkSpec
from .circuit import SolverOptions, load_diode_model
from .rectifier import DoublerConfig, SourceSpec
from .rf_link import default_antenna, load_antenna_csv
from .si import format_si, parse_si


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the offending ``section.key`` path."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


# kind, default; kinds: float, int, bool, str, path (a file, or a named default)
SCHEMA = {
    "chain": {
        "frequency": ("float", 9e9),
        "elements": ("int", 4),
        "antenna_impedance": ("float", 50.0),
        "match": ("bool", True),
        "probe_amplitude": ("float", 0.1),
        "steps_per_period": ("int", 64),
    },
    "link": {
        "mode": ("str", "override"),
        "incident_power_dbm": ("float", 10.0),
        "transmit_power_dbm": ("float", 30.0),
        "distance": ("float", 1.0),
        "transmit_gain_dbi": ("float", 0.0),
    },
    "antenna": {
        "table": ("path", "default"),
        "gain_offset_db": ("float", 0.0),
    },
    "combiner": {
        "n_ways": ("int", 2),
        "source_impedance": ("float", 50.0),
        "load_impedance": ("float", 50.0),
        "f0": ("float", 9e9),
        "f_start": ("float", 4.5e9),
        "f_stop": ("float", 13.5e9),
        "points": ("int", 11),
    },
    "microstrip": {
        "z0": ("float", 50.0),
        "eps_r": ("float", 4.4),
        "height": ("float", 1.6e-3),
        "f0": ("float", 9e9),
    },
    "rectifier": {
        "stages": ("int", 7),
        "diode": ("path", "SMS7621"),
        "stage_capacitance": ("float", 100e-12),
        "load_resistance": ("float", 22e3),
        "half_stage": ("bool", False),
        "amplitude": ("float", 0.1),
        "frequency": ("float", 900e6),
        "series_resistance": ("float", 50.0),
    },
    "solver": {
        "abstol": ("float", 1e-9),
        "reltol": ("float", 1e-6),
        "vntol": ("float", 1e-9),
        "max_iterations": ("int", 200),
        "integration": ("str", "trapezoidal"),
        "gmin": ("float", 1e-12),
        "settle_rtol": ("float", 1e-4),
    },
    "sweep": {
        "power_from_dbm": ("float", -40.0),
        "power_to_dbm": ("float", 40.0),
        "power_step_db": ("float", 5.0),
        "load_from": ("float", 100.0),
        "load_to": ("float", 1e6),
        "loads_per_decade": ("int", 3),
        "load_power_dbm": ("float", 10.0),
        "workers": ("int", 1),
    },
    "efficiency": {
        "reference_impedance": ("float", 50.0),
        "convention": ("str", "rms"),
    },
    "output": {
        "directory": ("str", "."),
    },
}

CHOICES = {
    "link.mode": ("override", "friis"),
    "solver.integration": ("trapezoidal", "backward_euler"),
    "efficiency.convention": ("rms", "peak"),
}

NAMED_PATHS = {"antenna.table": ("default",), "rectifier.diode": ("SMS7621",)}

_TRUE = ("true", "yes", "on", "1")
_FALSE = ("false", "no", "off", "0")


def _convert(key, kind, raw, base_dir):
    raw = raw.strip()
    try:
        if kind == "float":
            return parse_si(raw)
        if kind == "int":
            x = parse_si(raw)
            if x != int(x):
                raise ValueError(f"expected an integer, got {raw!r}")
            return int(x)
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None
    if kind == "bool":
        if raw.lower() in _TRUE:
            return True
        if raw.lower() in _FALSE:
            return False
        raise ConfigError(key, f"expected true/false, got {raw!r}")
    if kind == "path":
        if raw in NAMED_PATHS.get(key, ()):
            return raw
        p = Path(raw)
        if not p.is_absolute() and base_dir is not None:
            p = Path(base_dir) / p
        if not p.is_file():
            raise ConfigError(key, f"file not found: {p}")
        return str(p.resolve())
    if key in CHOICES and raw not in CHOICES[key]:
        raise ConfigError(key, f"expected one of {', '.join(CHOICES[key])}, got {raw!r}")
    return raw


def defaults():
    return {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}


def parse_config(text, base_dir=None, overrides=()):
    """Parse config text into ``{section: {key: value}}`` with defaults filled.

    ``overrides`` are ``"section.key=value"`` strings applied after the
    text. Relative paths resolve against ``base_dir``.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                   comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", str(exc).splitlines()[0]) from None
    items = [(s, k, v) for s in cp.sections() for k, v in cp.items(s)]
    for ov in overrides:
        path, sep, value = ov.partition("=")
        section, dot, key = path.strip().partition(".")
        if not sep or not dot:
            raise ConfigError(ov, "override must look like section.key=value")
        items.append((section, key, value))
    out = defaults()
    for section, key, raw in items:
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section")
        if key not in SCHEMA[section]:
            raise ConfigError(f"{section}.{key}", "unknown key")
        kind = SCHEMA[section][key][0]
        out[section][key] = _convert(f"{section}.{key}", kind, raw, base_dir)
    return out


def load_config(path=None, overrides=()):
    if path is None:
        return parse_config("", overrides=overrides)
    path = Path(path)
    if not path.is_file():
        raise ConfigError("--config", f"file not found: {path}")
    return parse_config(path.read_text(), base_dir=path.parent, overrides=overrides)


def _format(kind, v):
    if kind == "float":
        return format_si(v)
    if kind == "bool":
        return "true" if v else "false"
    return str(v)


def dump_config(cfg):
    """Serialise every key; parsing the result gives back ``cfg``."""
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (kind, _) in keys.items():
            lines.append(f"{key} = {_format(kind, cfg[section][key])}")
        lines.append("")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# conversion into library objects

def solver_options(cfg):
    return SolverOptions(**cfg["solver"])


def antenna_model(cfg):
    a = cfg["antenna"]
    try:
        model = default_antenna() if a["table"] == "default" else load_antenna_csv(a["table"])
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError("antenna.table", str(exc)) from None
    return model.with_gain_offset(a["gain_offset_db"]) if a["gain_offset_db"] else model


def doubler_config(cfg):
    r = cfg["rectifier"]
    return DoublerConfig(
        stages=r["stages"],
        diode=load_diode_model(r["diode"]),
        stage_capacitance=r["stage_capacitance"],
        load_resistance=r["load_resistance"],
        source=SourceSpec(r["amplitude"], r["frequency"], r["series_resistance"]),
        half_stage=r["half_stage"],
    )


def chain_config(cfg):
    c, l, e = cfg["chain"], cfg["link"], cfg["efficiency"]
    try:
        return ChainConfig(
            antenna=antenna_model(cfg),
            elements=c["elements"],
            frequency=c["frequency"],
            rectifier=doubler_config(cfg),
            link=LinkSpec(l["mode"], l["incident_power_dbm"], l["transmit_power_dbm"],
                          l["distance"], l["transmit_gain_dbi"]),
            antenna_impedance=c["antenna_impedance"],
            combiner_f0=None,
            match=c["match"],
            probe_amplitude=c["probe_amplitude"],
            efficiency_reference=e["reference_impedance"],
            efficiency_convention=e["convention"],
            steps_per_period=c["steps_per_period"],
            solver=solver_options(cfg),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("chain", str(exc)) from None
