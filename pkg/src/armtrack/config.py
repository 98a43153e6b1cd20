"""Flat key=value config files for experiments.

Grammar: one `section.key = value` per line; blank lines and full-line
`#` comments are ignored.  Values are JSON literals (numbers, booleans,
lists) or bare strings.  Gain matrices accept either a scalar, meaning
that multiple of the identity, or a full nested list.  Unknown keys are
rejected, every value is type-checked, and the same `key=value` syntax is
what the CLI's repeatable --set flag accepts.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import numpy as np

from .controllers import Gains
from .sim import DesiredTrajectory, ExperimentConfig

Array = np.ndarray


class ConfigError(ValueError):
    """Malformed config text, unknown key, bad type, or failed validation."""


def _as_float(key: str, val) -> float:
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {val!r}")
    return float(val)


def _as_int(key: str, val) -> int:
    if isinstance(val, bool) or not isinstance(val, int):
        raise ConfigError(f"{key}: expected an integer, got {val!r}")
    return val


def _as_bool(key: str, val) -> bool:
    if not isinstance(val, bool):
        raise ConfigError(f"{key}: expected true or false, got {val!r}")
    return val


def _as_str(key: str, val) -> str:
    if not isinstance(val, str):
        raise ConfigError(f"{key}: expected a string, got {val!r}")
    return val


def _as_vec(key: str, val, n: int) -> Array:
    if not isinstance(val, list) or len(val) != n or \
            any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in val):
        raise ConfigError(f"{key}: expected a list of {n} numbers, got {val!r}")
    return np.array(val, dtype=float)


def _as_gain_matrix(key: str, val, n: int) -> Array:
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        return float(val) * np.eye(n)
    if isinstance(val, list) and len(val) == n and \
            all(isinstance(row, list) and len(row) == n for row in val):
        return np.array(val, dtype=float)
    raise ConfigError(f"{key}: expected a scalar or a {n}x{n} nested list, got {val!r}")


def _as_noise(key: str, val) -> Array:
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        return np.array([float(val), float(val)])
    return _as_vec(key, val, 2)


# key -> (converter, target attribute path)
_SCHEMA = {
    "mode": (_as_str, ("mode",)),
    "label": (_as_str, ("label",)),
    "gains.k": (lambda k, v: _as_gain_matrix(k, v, 2), ("gains", "k")),
    "gains.alpha": (_as_float, ("gains", "alpha")),
    "gains.beta": (_as_float, ("gains", "beta")),
    "gains.gamma_d": (lambda k, v: _as_gain_matrix(k, v, 4), ("gains", "gamma_d")),
    "gains.gamma_k": (lambda k, v: _as_gain_matrix(k, v, 3), ("gains", "gamma_k")),
    "gains.lambda_c": (_as_float, ("gains", "lambda_c")),
    "model.a_k_true": (lambda k, v: _as_vec(k, v, 3), ("a_k_true",)),
    "model.a_d_true": (lambda k, v: _as_vec(k, v, 4), ("a_d_true",)),
    "model.gravity_enabled": (_as_bool, ("gravity_enabled",)),
    "estimates.a_k0": (lambda k, v: _as_vec(k, v, 3), ("a_k_hat0",)),
    "estimates.a_d0": (lambda k, v: _as_vec(k, v, 4), ("a_d_hat0",)),
    "estimates.freeze": (_as_bool, ("freeze_estimates",)),
    "projection.lower": (lambda k, v: _as_vec(k, v, 3), ("box_lower",)),
    "projection.upper": (lambda k, v: _as_vec(k, v, 3), ("box_upper",)),
    "trajectory.center": (lambda k, v: _as_vec(k, v, 2), ("trajectory", "center")),
    "trajectory.radius": (_as_float, ("trajectory", "radius")),
    "trajectory.angular_frequency": (_as_float, ("trajectory", "angular_frequency")),
    "start.offset": (lambda k, v: _as_vec(k, v, 2), ("start_offset",)),
    "start.velocity": (_as_str, ("start_velocity",)),
    "start.q0": (lambda k, v: _as_vec(k, v, 2), ("q0",)),
    "start.dq0": (lambda k, v: _as_vec(k, v, 2), ("dq0",)),
    "run.t_end": (_as_float, ("t_end",)),
    "run.dt_control": (_as_float, ("dt_control",)),
    "run.dt_plant": (_as_float, ("dt_plant",)),
    "run.seed": (_as_int, ("seed",)),
    "servo.gain": (_as_float, ("servo_gain",)),
    "sensor.noise_std": (_as_noise, ("sensor_noise_std",)),
    "numerics.cond_limit": (_as_float, ("cond_limit",)),
    "numerics.divergence_limit": (_as_float, ("divergence_limit",)),
    "perf.gain_floor": (_as_float, ("inertia_gain_floor",)),
}


def parse_value(text: str):
    """A config value: JSON literal if it parses, bare string otherwise."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse flat config text into an ordered {key: raw value} mapping."""
    mapping: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in mapping:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        mapping[key] = parse_value(value.strip())
    return mapping


def apply_overrides(mapping: dict, overrides: list[str]) -> dict:
    """Apply repeatable `key=value` override strings on top of a mapping."""
    out = dict(mapping)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, value = item.partition("=")
        out[key.strip()] = parse_value(value.strip())
    return out


def default_config() -> ExperimentConfig:
    """The reference experiment: circular tracking on the documented arm."""
    return ExperimentConfig(
        mode="inverse_jacobian",
        gains=Gains(k=30.0 * np.eye(2), alpha=10.0, beta=0.5,
                    gamma_d=200.0 * np.eye(4), gamma_k=300.0 * np.eye(3),
                    lambda_c=10.0),
        a_k_true=np.array([2.0, 3.3856, 0.8]),
        a_d_true=np.array([9.26, 3.66, 3.2, 3.2]),
        a_k_hat0=np.array([4.0, 5.0, 2.0]),
        a_d_hat0=np.zeros(4),
        trajectory=DesiredTrajectory(center=np.array([1.6754, 3.9950]),
                                     radius=0.3, angular_frequency=np.pi),
    )


def config_from_mapping(mapping: dict, source: str = "<config>") -> ExperimentConfig:
    """Build and validate an ExperimentConfig; rejects unknown keys."""
    unknown = [k for k in mapping if k not in _SCHEMA]
    if unknown:
        raise ConfigError(f"{source}: unknown key(s): {', '.join(sorted(unknown))}")
    cfg = default_config()
    for key, raw in mapping.items():
        convert, path = _SCHEMA[key]
        value = convert(key, raw)
        target = cfg
        for attr in path[:-1]:
            target = getattr(target, attr)
        setattr(target, path[-1], value)
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return cfg


def _format_value(value) -> str:
    if isinstance(value, np.ndarray):
        return json.dumps(value.tolist())
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return json.dumps(value)
    return str(value)


def config_to_text(cfg: ExperimentConfig) -> str:
    """Canonical flat text for a config; reloading it reproduces the run."""
    lines = ["# armtrack experiment config"]
    for key, (_, path) in _SCHEMA.items():
        target = cfg
        for attr in path[:-1]:
            target = getattr(target, attr)
        value = getattr(target, path[-1])
        if value is None:
            continue
        lines.append(f"{key} = {_format_value(value)}")
    return "\n".join(lines) + "\n"


def bundled_names() -> list[str]:
    root = resources.files("armtrack").joinpath("configs")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def load_mapping(spec: str | Path) -> tuple[dict, str]:
    """Resolve a file path or bundled name to its raw key mapping."""
    path = Path(spec)
    # Only a file shadows a bundled name; a stray directory (e.g. an output
    # dir named after the config) must not be picked up here.
    if path.is_file():
        return parse_config_text(path.read_text(), str(path)), str(path)
    name = str(spec)
    root = resources.files("armtrack").joinpath("configs")
    candidate = root.joinpath(f"{name}.cfg")
    if candidate.is_file():
        source = f"bundled:{name}"
        return parse_config_text(candidate.read_text(), source), source
    raise ConfigError(f"config {spec!r}: no such file and no bundled config "
                      f"of that name (bundled: {', '.join(bundled_names())})")


def load_config(spec: str | Path, overrides: list[str] | None = None) -> ExperimentConfig:
    """Load a config from a file path or a bundled config name."""
    mapping, source = load_mapping(spec)
    if overrides:
        mapping = apply_overrides(mapping, overrides)
    return config_from_mapping(mapping, source)
