"""Experiment configuration: a flat key/value file (TOML, or JSON) plus CLI overrides."""

from __future__ import annotations

import dataclasses
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import tomli_w

from .errors import ConfigError
from .gate import TsiVariant
from .predictor import PhaseConfig
from .scheduler import CachePolicy
from .simulator import FAMILY_PARAMS, Family, TrajectoryModel, default_x0

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

# config-file key -> dataclass attribute, where they differ
_ALIASES = {"lambda": "lam"}
_CHOICES = {
    "tsi_variant": {v.value for v in TsiVariant},
    "history_source": {"any", "computed_only"},
    "reconstruction_base": {"current_input", "previous_output"},
    "index_order": {"oldest_first", "newest_first"},
    "taylor_target": {"output", "residual"},
    "taylor_history": {"rolling", "computed"},
    "family": {f.value for f in Family},
}


@dataclass
class ExperimentConfig:
    # cache policy
    steps: int = 20
    interval: int = 4
    theta: float = 1.0
    lam: float = 10.0
    early_frac: float = 0.7
    late_frac: float = 0.2
    alpha1: float = 0.7
    alpha2: float = 0.3
    beta: float = 0.1
    tsi_variant: str = "alignment"
    warmup: int = 3
    history_capacity: int = 3
    taylor_order: int = 2
    history_source: str = "any"
    reconstruction_base: str = "current_input"
    index_order: str = "oldest_first"
    taylor_target: str = "output"
    taylor_history: str = "rolling"
    # trajectory model
    family: str = "rational"
    dim: int = 64
    seed: int = 0
    degree: int = 2
    sinusoids: int = 4
    params: dict[str, Any] = field(default_factory=dict)
    # output
    out: str = "out"
    json: bool = False

    def __post_init__(self):
        for key, allowed in _CHOICES.items():
            if getattr(self, key) not in allowed:
                raise ConfigError(f"{key} must be one of {sorted(allowed)}, got {getattr(self, key)!r}")
        unknown = set(self.params) - set(FAMILY_PARAMS[Family(self.family)])
        if unknown:
            raise ConfigError(f"unknown params for family {self.family}: {sorted(unknown)}")

    # ------------------------------------------------------------ building

    def policy(self) -> CachePolicy:
        try:
            phase = PhaseConfig(self.early_frac, self.late_frac, self.alpha1, self.alpha2, self.beta)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return CachePolicy(
            total_steps=self.steps,
            interval=self.interval,
            theta=self.theta,
            lam=self.lam,
            phase=phase,
            tsi_variant=TsiVariant(self.tsi_variant),
            warmup=self.warmup,
            history_capacity=self.history_capacity,
            taylor_order=self.taylor_order,
            history_source=self.history_source,
            reconstruction_base=self.reconstruction_base,
            index_order=self.index_order,
            taylor_target=self.taylor_target,
            taylor_history=self.taylor_history,
        )

    def model(self) -> TrajectoryModel:
        """A fresh model instance (fresh call counter) for one run."""
        try:
            return TrajectoryModel(
                self.family, self.dim, self.seed, self.degree, self.sinusoids, self.steps, self.params
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def x0(self):
        return default_x0(self.dim, self.seed)

    def metadata(self) -> dict:
        return {"family": self.family, "seed": self.seed, "steps": self.steps, "dim": self.dim}

    # ------------------------------------------------------- serialization

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in dataclasses.fields(self):
            key = next((k for k, v in _ALIASES.items() if v == f.name), f.name)
            out[key] = getattr(self, f.name)
        out["params"] = {k: _plain(v) for k, v in self.params.items()}
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ExperimentConfig:
        return cls(**_normalize(data))

    def dumps(self, fmt: str = "toml") -> str:
        data = self.to_dict()
        if fmt == "json":
            return json.dumps(data, indent=2, sort_keys=True) + "\n"
        params = data.pop("params")
        text = tomli_w.dumps(data)
        if params:
            text += "\n" + tomli_w.dumps({"params": params})
        return text

    def save(self, path) -> None:
        path = Path(path)
        path.write_text(self.dumps("json" if path.suffix == ".json" else "toml"))

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        return cls.from_dict(read_config_file(path))

    @classmethod
    def layered(cls, file_values: Mapping[str, Any] | None = None, flags: Mapping[str, Any] | None = None):
        """Merge defaults < file < flags.

        A layer that sets ``alpha1`` without ``alpha2`` also sets
        ``alpha2 = 1 - alpha1``.
        """
        merged: dict[str, Any] = {}
        for layer in (file_values or {}, flags or {}):
            layer = _normalize(layer)
            if "alpha1" in layer and "alpha2" not in layer:
                layer["alpha2"] = 1.0 - layer["alpha1"]
            merged.update(layer)
        return cls(**merged)


def _plain(v):
    return v.tolist() if hasattr(v, "tolist") else v


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _normalize(data: Mapping[str, Any]) -> dict[str, Any]:
    out = {}
    for key, value in data.items():
        name = _ALIASES.get(key, key)
        if name not in _FIELDS or key in _ALIASES.values():
            raise ConfigError(f"unknown config key {key!r}")
        if name == "params":
            if not isinstance(value, Mapping):
                raise ConfigError("params must be a table")
            out[name] = dict(value)
            continue
        kind = _FIELDS[name].type
        try:
            if kind == "int":
                if isinstance(value, float) and not value.is_integer():
                    raise ValueError(value)
                value = int(value)
            elif kind == "float":
                value = float(value)
            elif kind == "bool":
                if not isinstance(value, bool):
                    raise ValueError(value)
            else:
                value = str(value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
        if kind == "float" and math.isnan(value):
            raise ConfigError(f"{key} must not be NaN")
        out[name] = value
    return out


def read_config_file(path) -> dict[str, Any]:
    """Read a TOML or JSON config; TOML tables other than ``params`` are flattened."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    else:
        try:
            raw = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a table")
    flat: dict[str, Any] = {}
    for key, value in raw.items():
        if isinstance(value, dict) and key != "params":
            items = value.items()
        else:
            items = [(key, value)]
        for k, v in items:
            if k in flat:
                raise ConfigError(f"{path}: duplicate key {k!r}")
            flat[k] = v
    return flat
