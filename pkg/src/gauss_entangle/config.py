"""Run configuration: flat dotted keys, loaded from TOML and ``--set`` overrides."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .model import (
    COVARIANCE_ENTRIES,
    FIG1_INITIAL,
    FIG2_INITIAL,
    VACUUM,
    CovarianceMatrix,
    EnvironmentParams,
)

COMMANDS = ("validate", "evolve", "trajectory", "sweep", "asymptote")
PRESETS = {"fig1": FIG1_INITIAL, "fig2": FIG2_INITIAL, "vacuum": VACUUM}

_ENV_FLOATS = ("lambda", "m", "omega", "d_xx", "d_xpx", "d_pxpx", "d_yy", "d_ypy",
               "d_pypy", "d_xy", "d_xpy", "d_ypx", "d_pxpy")

SCHEMA: Dict[str, type] = {"command": str}
SCHEMA.update({f"environment.{k}": float for k in _ENV_FLOATS})
SCHEMA.update({f"environment.{k}": bool for k in ("gibbs", "symmetric_modes", "strict")})
SCHEMA["initial.preset"] = str
SCHEMA.update({f"initial.{name}": float for name, _, _ in COVARIANCE_ENTRIES})
SCHEMA.update({"time.t": float, "time.t_max": float, "time.n_steps": int})
SCHEMA.update({"sweep.coefficient": str, "sweep.min": float, "sweep.max": float,
               "sweep.count": int})
SCHEMA.update({"output.path": str, "output.format": str})

SECTION_ORDER = ("command", "environment", "initial", "time", "sweep", "output")

# which explicit diffusion keys each construction mode accepts
_GIBBS_KEYS = {"d_xx", "d_xy", "d_xpy"}
_SYMMETRIC_KEYS = {"d_xx", "d_xpx", "d_pxpx", "d_xy", "d_xpy", "d_pxpy"}

# m = omega = 1, lambda = 0.2, d_xx = 0.115: the reference figure settings
BASE_DEFAULTS: Dict[str, Any] = {
    "environment.lambda": 0.2,
    "environment.m": 1.0,
    "environment.omega": 1.0,
    "environment.d_xx": 0.115,
    "environment.d_xy": 0.0,
    "environment.d_xpy": 0.0,
    "environment.gibbs": True,
    "environment.symmetric_modes": True,
    "environment.strict": False,
    "initial.preset": "fig1",
}

COMMAND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "validate": {"output.format": "json"},
    "asymptote": {"output.format": "json"},
    "evolve": {"time.t": 0.0, "output.format": "json"},
    "trajectory": {"time.t_max": 60.0, "time.n_steps": 600, "output.format": "csv"},
    "sweep": {"time.t_max": 45.0, "time.n_steps": 180, "sweep.coefficient": "d_xpy",
              "sweep.min": 0.0, "sweep.max": 0.115, "sweep.count": 24,
              "output.format": "csv"},
}

ALLOWED_FORMATS = {
    "validate": ("json",),
    "asymptote": ("json",),
    "evolve": ("json", "csv"),
    "trajectory": ("csv", "json"),
    "sweep": ("csv", "json"),
}


class ConfigError(ValueError):
    """The run configuration cannot be parsed or is inconsistent."""


def flatten(tree: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat = {}
    for key, value in tree.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(flatten(value, name + "."))
        else:
            flat[name] = value
    return flat


def load_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, "rb") as fh:
            return flatten(tomllib.load(fh))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def parse_assignment(text: str):
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"--set expects key=value, got {text!r}")
    raw = raw.strip()
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


def _coerce(key: str, value: Any) -> Any:
    kind = SCHEMA[key]
    if kind is bool:
        if isinstance(value, bool):
            return value
    elif kind is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif kind is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif kind is str:
        if isinstance(value, str):
            return value
    raise ConfigError(f"{key}: expected {kind.__name__}, got {value!r}")


@dataclass
class RunConfig:
    """Effective configuration for one CLI invocation."""

    values: Dict[str, Any]

    @property
    def command(self) -> str:
        return self.values["command"]

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    @classmethod
    def build(cls, command: Optional[str], layers) -> "RunConfig":
        """Merge ``layers`` (earliest lowest priority) over the defaults."""
        merged: Dict[str, Any] = {}
        for layer in layers:
            for key, value in layer.items():
                if key not in SCHEMA:
                    raise ConfigError(f"unknown key: {key}")
                merged[key] = _coerce(key, value)
        if command is not None:
            if "command" in merged and merged["command"] != command:
                raise ConfigError(
                    f"command {command!r} conflicts with config command {merged['command']!r}"
                )
            merged["command"] = command
        cmd = merged.get("command")
        if cmd not in COMMANDS:
            raise ConfigError(f"command must be one of {COMMANDS}, got {cmd!r}")
        if cmd != "sweep":
            stray = sorted(k for k in merged if k.startswith("sweep."))
            if stray:
                raise ConfigError(f"sweep keys only apply to the sweep command: {stray}")
        values = dict(BASE_DEFAULTS)
        values.update(COMMAND_DEFAULTS[cmd])
        values.update(merged)
        fmt = values["output.format"]
        if fmt not in ALLOWED_FORMATS[cmd]:
            raise ConfigError(f"{cmd} supports formats {ALLOWED_FORMATS[cmd]}, got {fmt!r}")
        config = cls(values)
        config.environment()
        config.initial_covariance()
        return config

    def environment(self) -> EnvironmentParams:
        v = self.values
        given = {k.split(".", 1)[1] for k in v if k.startswith("environment.d_")}
        common = dict(lam=v["environment.lambda"], m=v["environment.m"],
                      omega=v["environment.omega"])
        diff = {k: v.get(f"environment.{k}", 0.0) for k in _ENV_FLOATS if k.startswith("d_")}
        if v["environment.gibbs"]:
            if not v["environment.symmetric_modes"]:
                raise ConfigError("environment.gibbs requires environment.symmetric_modes")
            extra = sorted(given - _GIBBS_KEYS)
            if extra:
                raise ConfigError(f"derived under environment.gibbs, do not set: {extra}")
            return EnvironmentParams.gibbs_form(d_xx=diff["d_xx"], d_xy=diff["d_xy"],
                                                d_xpy=diff["d_xpy"], **common)
        if v["environment.symmetric_modes"]:
            extra = sorted(given - _SYMMETRIC_KEYS)
            if extra:
                raise ConfigError(f"mirrored under environment.symmetric_modes, do not set: {extra}")
            return EnvironmentParams.symmetric(
                **common, **{k: diff[k] for k in sorted(_SYMMETRIC_KEYS)})
        return EnvironmentParams(**common, **diff)

    def initial_covariance(self) -> CovarianceMatrix:
        preset = self.values["initial.preset"]
        if preset not in PRESETS:
            raise ConfigError(f"initial.preset must be one of {sorted(PRESETS)}, got {preset!r}")
        entries = PRESETS[preset].entries()
        for name, _, _ in COVARIANCE_ENTRIES:
            key = f"initial.{name}"
            if key in self.values:
                entries[name] = self.values[key]
        return CovarianceMatrix.from_entries(entries)

    def dump(self) -> str:
        """Serialize as TOML with flat dotted keys."""
        def order(key):
            return (SECTION_ORDER.index(key.split(".", 1)[0]), list(SCHEMA).index(key))

        lines = []
        for key in sorted(self.values, key=order):
            lines.append(f"{key} = {_toml_value(self.values[key])}")
        return "\n".join(lines) + "\n"


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return json.dumps(value)
