"""Run configuration: flat ``key = value`` text with dotted section prefixes.

Example::

    # swimmer and drag
    geometry.len0 = 1.0
    geometry.drag_normal = 2.0
    discretization.h = 0.01
    problem.g_bar = 0.1, 0.1, 0.0
    solver.method = direct
    output.units = deg

Every key has a default, so an empty file describes the reference run
(unit links, h = 0.01, N = 10000, holonomy (0.1, 0.1, 0)). Unknown keys and
malformed values raise :class:`ConfigError` naming the offending key.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .integrator import DiscretizationParams
from .solver import ProblemSpec, SolverConfig
from .swimmer import SwimmerGeometry


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class OutputConfig:
    dir: str = "out"
    units: str = "deg"
    phase_interval: float = 5.0

    def __post_init__(self):
        if self.units not in ("deg", "rad"):
            raise ValueError("units must be 'deg' or 'rad'")
        if not self.phase_interval > 0:
            raise ValueError("phase_interval must be positive")


@dataclass
class RunConfig:
    geometry: SwimmerGeometry = field(default_factory=SwimmerGeometry)
    discretization: DiscretizationParams = field(default_factory=DiscretizationParams)
    alpha_bar: tuple = (0.0, 0.0)
    g_bar: tuple = (0.1, 0.1, 0.0)
    g0: tuple = (0.0, 0.0, 0.0)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def problem(self) -> ProblemSpec:
        return ProblemSpec(
            geometry=self.geometry,
            params=self.discretization,
            alpha_bar=np.array(self.alpha_bar, dtype=float),
            g_bar=np.array(self.g_bar, dtype=float),
            g0=np.array(self.g0, dtype=float),
        )


_VECTOR_LENGTHS = {"problem.alpha_bar": 2, "problem.g_bar": 3, "problem.g0": 3}


def _sections():
    """Map each section prefix to (dataclass type, attribute on RunConfig)."""
    return {
        "geometry": (SwimmerGeometry, "geometry"),
        "discretization": (DiscretizationParams, "discretization"),
        "solver": (SolverConfig, "solver"),
        "output": (OutputConfig, "output"),
    }


def known_keys():
    keys = list(_VECTOR_LENGTHS)
    for section, (cls, _) in _sections().items():
        keys.extend(f"{section}.{f.name}" for f in fields(cls))
    return keys


def _field_type(cls, name):
    defaults = cls()
    value = getattr(defaults, name)
    if isinstance(value, bool):
        return bool
    if isinstance(value, int):
        return int
    if isinstance(value, float):
        return float
    return str


def _convert(key, raw, kind):
    try:
        if kind is int:
            value = float(raw)
            if not value.is_integer():
                raise ValueError("not an integer")
            return int(value)
        if kind is float:
            return float(raw)
        if kind is bool:
            low = raw.lower()
            if low not in ("true", "false"):
                raise ValueError("expected true or false")
            return low == "true"
    except ValueError as exc:
        raise ConfigError(key, f"cannot parse {raw!r} ({exc})") from None
    return raw


def _vector(key, raw):
    parts = [p.strip() for p in raw.strip("()[] ").split(",") if p.strip()]
    if len(parts) != _VECTOR_LENGTHS[key]:
        raise ConfigError(key, f"expected {_VECTOR_LENGTHS[key]} comma-separated numbers, got {raw!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r}") from None


def parse_pairs(text: str) -> dict:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(key or f"line {lineno}", f"expected 'key = value' on line {lineno}")
        if key in pairs:
            raise ConfigError(key, "duplicate key")
        pairs[key] = value.strip()
    return pairs


def from_pairs(pairs: dict) -> RunConfig:
    sections = _sections()
    updates = {name: {} for name in sections}
    top = {}
    for key, raw in pairs.items():
        if key in _VECTOR_LENGTHS:
            top[key.split(".", 1)[1]] = _vector(key, raw)
            continue
        section, _, name = key.partition(".")
        if section not in sections:
            raise ConfigError(key, "unknown key")
        cls, _ = sections[section]
        if name not in {f.name for f in fields(cls)}:
            raise ConfigError(key, "unknown key")
        if cls is SolverConfig and name == "initial_guess_file":
            updates[section][name] = raw or None
        else:
            updates[section][name] = _convert(key, raw, _field_type(cls, name))

    parts = {}
    for section, (cls, attr) in sections.items():
        try:
            parts[attr] = cls(**updates[section])
        except (ValueError, TypeError) as exc:
            bad = next(iter(updates[section]), "")
            raise ConfigError(f"{section}.{bad}" if bad else section, str(exc)) from None
    try:
        config = RunConfig(**parts, **top)
        config.problem()
    except ValueError as exc:
        raise ConfigError("problem", str(exc)) from None
    return config


def loads(text: str) -> RunConfig:
    return from_pairs(parse_pairs(text))


def load(path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from None
    return loads(text)


def dumps(config: RunConfig) -> str:
    """Serialize every key; ``loads(dumps(c)) == c``."""
    lines = []
    for key in _VECTOR_LENGTHS:
        value = getattr(config, key.split(".", 1)[1])
        lines.append(f"{key} = " + ", ".join(repr(float(v)) for v in value))
    for section, (_, attr) in _sections().items():
        obj = getattr(config, attr)
        for f in fields(obj):
            value = getattr(obj, f.name)
            if value is None:
                value = ""
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{section}.{f.name} = {value}")
    return "\n".join(lines) + "\n"


def with_overrides(config: RunConfig, **solver_or_output: Optional[object]) -> RunConfig:
    """Apply command-line overrides; ``None`` values are ignored."""
    solver_names = {f.name for f in fields(SolverConfig)}
    output_names = {f.name for f in fields(OutputConfig)}
    solver, output = {}, {}
    for name, value in solver_or_output.items():
        if value is None:
            continue
        if name in solver_names:
            solver[name] = value
        elif name in output_names:
            output[name] = value
        else:
            raise ConfigError(name, "unknown override")
    return dataclasses.replace(
        config,
        solver=dataclasses.replace(config.solver, **solver),
        output=dataclasses.replace(config.output, **output),
    )
