"""Run configuration: JSON schema, presets and resolution to parameter objects.

Frequencies in a config are in units of the atomic linewidth Gamma, except
the atom's own transition and linewidth which are cyclic frequencies in Hz.
Angles are in radians, temperatures in K, durations in s.
"""
from __future__ import annotations

import copy
import json
import math
import sys
from dataclasses import dataclass

import jsonschema

from .errors import ConfigError
from .params import (AMU, YB174_MASS_U, AtomSpec, DriveSpec, ModeSpec, drive_from_gamma_units, doppler_temperature,
                     mode_at_offset)

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_count = {"type": "integer", "minimum": 1}


def _grid(lo_schema=_num):
    return {"type": "object", "additionalProperties": False, "required": ["min", "max", "steps"],
            "properties": {"min": lo_schema, "max": lo_schema, "steps": _count}}


ATOM_SCHEMA = {
    "oneOf": [
        {"type": "string", "enum": ["yb-556"]},
        {"type": "object", "additionalProperties": False,
         "properties": {"preset": {"type": "string", "enum": ["yb-556"]}, "name": {"type": "string"},
                        "mass_u": _pos, "transition_hz": _pos, "linewidth_hz": _pos}},
    ]
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["atom", "drive"],
    "properties": {
        "preset": {"type": "string"},
        "atom": ATOM_SCHEMA,
        "drive": {"type": "object", "additionalProperties": False, "required": ["rabi", "detuning_bar"],
                  "properties": {"rabi": _nonneg, "detuning_bar": _num}},
        "mode": {"type": "object", "additionalProperties": False,
                 "properties": {"offset": _num, "theta": {"type": "number", "minimum": 0, "maximum": math.pi},
                                "q_over_kL": _nonneg, "alpha": _nonneg, "kappa": _nonneg}},
        "temperature_K": {"oneOf": [_pos, {"type": "null"}]},
        "grids": {"type": "object", "additionalProperties": False,
                  "properties": {"rabi_over_detuning": _grid(_nonneg), "omega_rel": _grid()}},
        "simulation": {"type": "object", "additionalProperties": False,
                       "properties": {"seed": {"type": "integer", "minimum": 0},
                                      "kind": {"enum": ["trajectory", "photon-number"]},
                                      "n_q": {"type": "integer", "minimum": 0},
                                      "trajectories": _count, "jumps": _count, "events": _count,
                                      "fixed_momentum": {"type": "boolean"},
                                      "particles": _count, "duration_s": _pos,
                                      "dt_zeta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.1},
                                      "drift_compensated": {"type": "boolean"}}},
        "flags": {"type": "object", "additionalProperties": False,
                  "properties": {"doppler_neglected": {"type": "boolean"}, "co_vary_q": {"type": "boolean"},
                                 "numeric_rates": {"type": "boolean"}}},
        "output": {"type": "object", "additionalProperties": False, "properties": {"path": {"type": "string"}}},
        "threads": _count,
    },
}

DEFAULTS = {
    "mode": {"offset": 0.0, "theta": math.pi / 2, "q_over_kL": 1.0, "alpha": 1e-3, "kappa": 0.0},
    "temperature_K": None,
    "grids": {"rabi_over_detuning": {"min": 0.01, "max": 0.5, "steps": 100},
              "omega_rel": {"min": -20.0, "max": 15.0, "steps": 100}},
    "simulation": {"seed": 0, "kind": "trajectory", "n_q": 0, "trajectories": 1, "jumps": 100_000,
                   "events": 1_000_000, "fixed_momentum": True, "particles": 100_000, "duration_s": 1.0e3,
                   "dt_zeta": 0.005, "drift_compensated": True},
    "flags": {"doppler_neglected": True, "co_vary_q": False, "numeric_rates": True},
    "output": {},
    "threads": 1,
}

YB_ATOM = {"name": "yb-556", "mass_u": YB174_MASS_U, "transition_hz": 539e12, "linewidth_hz": 180e3}

PRESETS = {
    "fig4": {"atom": "yb-556", "drive": {"rabi": 0.1 * 157.0, "detuning_bar": -157.0}},
    "fig1d": {"atom": "yb-556", "drive": {"rabi": 0.1 * 157.0, "detuning_bar": -157.0},
              "grids": {"rabi_over_detuning": {"min": 0.01, "max": 0.5, "steps": 100},
                        "omega_rel": {"min": -20.0, "max": 15.0, "steps": 100}}},
    "standard": {"atom": "yb-556", "drive": {"rabi": 0.15, "detuning_bar": -0.5},
                 "grids": {"omega_rel": {"min": -20.0, "max": 5.0, "steps": 501}}},
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _path(err):
    parts = "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)
    return "$" + parts


def validate(raw):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if not errors:
        return
    missing = [e for e in errors if e.validator == "required"]
    if missing:
        names = []
        for e in missing:
            prefix = _path(e)
            names += [f"{prefix}.{n}" for n in e.validator_value if n not in (e.instance or {})]
        raise ConfigError(f"missing required fields: {', '.join(names)}", field=_path(missing[0]))
    e = errors[0]
    raise ConfigError(e.message, field=_path(e))


@dataclass(frozen=True)
class RunConfig:
    """Validated, fully resolved run configuration."""

    resolved: dict
    atom: AtomSpec
    drive: DriveSpec
    mode: ModeSpec
    temperature: float

    def section(self, name):
        return self.resolved[name]

    @property
    def seed(self):
        return self.resolved["simulation"]["seed"]

    def to_json(self):
        return json.dumps(self.resolved, sort_keys=True, indent=2)

    def mode_at(self, offset_gamma, drive=None):
        """ModeSpec at omega_q - omega_L = offset_gamma * Gamma with this config's geometry."""
        return _mode_at(self.resolved, self.atom, drive or self.drive, offset_gamma)


def _mode_at(full, atom, drive, offset_gamma):
    m = full["mode"]
    G = atom.Gamma
    return mode_at_offset(atom, drive, offset_gamma * G, theta=m["theta"], alpha_q=m["alpha"] * G,
                          kappa_q=m["kappa"] * G, q=m["q_over_kL"] * drive.k_L, co_vary_q=full["flags"]["co_vary_q"])


def _resolve_atom(a):
    if isinstance(a, str):
        return dict(YB_ATOM)
    base = dict(YB_ATOM) if a.get("preset") == "yb-556" else {}
    base.update({k: v for k, v in a.items() if k != "preset"})
    for key in ("mass_u", "transition_hz", "linewidth_hz"):
        if key not in base:
            raise ConfigError("explicit atoms need mass_u, transition_hz and linewidth_hz", field=f"$.atom.{key}")
    base.setdefault("name", "custom")
    return base


def resolve(raw) -> RunConfig:
    """Validate a config mapping, expand presets and defaults, and build parameter objects."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", field="$")
    if "preset" in raw:
        name = raw["preset"]
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; known: {sorted(PRESETS)}", field="$.preset")
        raw = _merge(PRESETS[name], {k: v for k, v in raw.items() if k != "preset"})
    validate(raw)
    full = _merge(DEFAULTS, raw)
    full["atom"] = _resolve_atom(full["atom"])
    validate(full)
    a = full["atom"]
    atom = AtomSpec(mass=a["mass_u"] * AMU, omega_A=2 * math.pi * a["transition_hz"],
                    Gamma=2 * math.pi * a["linewidth_hz"], name=a["name"])
    drive = drive_from_gamma_units(atom, full["drive"]["rabi"], full["drive"]["detuning_bar"])
    T = full["temperature_K"]
    if T is None:
        if not drive.detuning_bar < 0:
            raise ConfigError("a non-negative detuning does not cool; give temperature_K explicitly",
                              field="$.drive.detuning_bar")
        T = doppler_temperature(atom, drive)
    mode = _mode_at(full, atom, drive, full["mode"]["offset"])
    return RunConfig(resolved=full, atom=atom, drive=drive, mode=mode, temperature=T)


def read_raw(source):
    """Raw config mapping from a path or ``-`` (stdin); an empty file is an empty mapping."""
    if source == "-":
        text = sys.stdin.read()
    else:
        try:
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}", field=str(source)) from None
    if not text.strip():
        return {}
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                          field=f"line {exc.lineno}") from None


def parse_config(source=None, overrides=None) -> RunConfig:
    """Read a JSON config from a path, ``-`` (stdin) or a mapping, then :func:`resolve` it.

    ``overrides`` are merged on top; an overriding ``preset`` sits underneath
    the file's own values.
    """
    if isinstance(source, dict):
        raw = copy.deepcopy(source)
    elif source is None:
        raw = {}
    else:
        raw = read_raw(source)
    if overrides and isinstance(raw, dict):
        over = dict(overrides)
        if "preset" in over:
            raw = _merge({"preset": over.pop("preset")}, raw)
        raw = _merge(raw, over)
    return resolve(raw)
