"""Experiment configuration: JSON schema, built-in scenarios, parsing."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema

from .channels import NoiseSpec
from .qmath import EXPERIMENTAL_TOL, load_matrix
from .tomography import CountingModel


class ConfigError(ValueError):
    """Invalid configuration; maps to CLI exit code 1."""


_PROB = {"type": "number", "minimum": 0, "maximum": 1}
_NONNEG = {"type": "number", "minimum": 0}

NOISE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "flavor": {"enum": ["BF", "PF"]},
        "mode": {"enum": ["independent", "schedule"]},
        "f_pol": _PROB,
        "f_spa": _PROB,
        "schedule": {
            "type": "object",
            "additionalProperties": False,
            "required": ["T", "t1", "t2", "t3"],
            "properties": {
                "T": {"type": "number", "exclusiveMinimum": 0},
                "t1": _NONNEG,
                "t2": _NONNEG,
                "t3": _NONNEG,
            },
        },
        "intrinsic": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"bf": _PROB, "pf": _PROB},
        },
        "fiber": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"alpha_db_per_km": _NONNEG, "length_km": _NONNEG},
        },
        "photon": {"enum": ["A", "B", "both"]},
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hyperpurify experiment configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["source", "noise"],
    "properties": {
        "name": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "source": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["ideal", "fixtures"]},
                "pol": {"type": "string"},
                "spa": {"type": "string"},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "noise": NOISE_SCHEMA,
        "counting": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "pair_rate": _NONNEG,
                "integration_time": _NONNEG,
                "detector_efficiency": _PROB,
                "dark_rate": _NONNEG,
                "coincidence_window": _NONNEG,
            },
        },
        "analyses": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"qkd": {"type": "boolean"}, "chsh": {"type": "boolean"}, "efficiency": {"type": "boolean"}},
        },
        "efficiency": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "C": {"type": "number", "exclusiveMinimum": 0},
                "epsilon": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "rep_rate": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "source_rate": {"type": "number", "minimum": 0},
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["parameter", "values"],
            "properties": {
                "parameter": {"enum": ["noise_fraction", "fiber_length"]},
                "values": {"type": "array", "minItems": 1, "items": {"type": "number"}},
            },
        },
    },
}

_MCF = {"bf": 0.011, "pf": 0.033}
_FIBER = {"alpha_db_per_km": 0.2, "length_km": 11.0}
_ALL = {"qkd": True, "chsh": True, "efficiency": True}


def _scenario(name, flavor, f, intrinsic=_MCF, source=None):
    return {
        "name": name,
        "seed": 0,
        "source": source or {"kind": "ideal"},
        "noise": {
            "flavor": flavor,
            "mode": "independent",
            "f_pol": f,
            "f_spa": f,
            "intrinsic": dict(intrinsic),
            "fiber": dict(_FIBER),
            "photon": "B",
        },
        "analyses": dict(_ALL),
    }


_NO_NOISE = {"bf": 0.0, "pf": 0.0}

BUILTIN_CONFIGS: dict[str, dict] = {
    "identity": _scenario("identity", "BF", 0.0, _NO_NOISE),
    "paper-20bf": _scenario("paper-20bf", "BF", 0.2),
    "paper-30bf": _scenario("paper-30bf", "BF", 0.3),
    "paper-20pf": _scenario("paper-20pf", "PF", 0.2),
    # fiber noise is phase-flip dominated, so it is purified after Hadamard conversion
    "paper-mcf-only": _scenario("paper-mcf-only", "PF", 0.0),
    "fixtures-s2s3": _scenario(
        "fixtures-s2s3",
        "BF",
        0.0,
        _NO_NOISE,
        {"kind": "fixtures", "pol": "builtin:rho_pol_bf20.json", "spa": "builtin:rho_spa_bf20.json",
         "tol": EXPERIMENTAL_TOL},
    ),
}


def builtin_fixture_path(name: str) -> Path:
    return Path(str(resources.files("hyperpurify") / "data" / name))


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def name(self) -> str:
        return self.raw.get("name", "unnamed")

    @property
    def seed(self) -> int:
        return int(self.raw.get("seed", 0))

    @property
    def noise(self) -> NoiseSpec:
        return NoiseSpec.from_dict(self.raw["noise"])

    @property
    def counting(self) -> CountingModel | None:
        c = self.raw.get("counting")
        if c is None:
            return None
        return CountingModel(seed=self.seed, **c)

    @property
    def analyses(self) -> dict:
        flags = {"qkd": True, "chsh": True, "efficiency": True}
        flags.update(self.raw.get("analyses", {}))
        return flags

    @property
    def efficiency(self) -> dict:
        e = {"C": 2400.0, "epsilon": 0.18, "rep_rate": 76e6}
        e.update(self.raw.get("efficiency", {}))
        return e

    @property
    def source_rate(self) -> float:
        return float(self.raw.get("source_rate", 600.0))

    @property
    def sweep(self) -> dict | None:
        return self.raw.get("sweep")

    def resolve(self, ref: str) -> Path:
        if ref.startswith("builtin:"):
            return builtin_fixture_path(ref.split(":", 1)[1])
        p = Path(ref)
        return p if p.is_absolute() else self.base_dir / p

    def fixture_paths(self) -> tuple[Path, Path]:
        src = self.raw["source"]
        return self.resolve(src["pol"]), self.resolve(src["spa"])

    def load_fixtures(self):
        return tuple(load_matrix(p) for p in self.fixture_paths())

    def with_seed(self, seed: int) -> "ExperimentConfig":
        raw = copy.deepcopy(self.raw)
        raw["seed"] = int(seed)
        return parse_config(raw, self.base_dir)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.raw)


def parse_config(raw: Any, base_dir: Path | None = None) -> ExperimentConfig:
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    cfg = ExperimentConfig(copy.deepcopy(raw), base_dir or Path.cwd())
    src = raw["source"]
    if src["kind"] == "fixtures":
        if "pol" not in src or "spa" not in src:
            raise ConfigError("fixture source needs both 'pol' and 'spa'")
        for p in cfg.fixture_paths():
            if not p.is_file():
                raise ConfigError(f"fixture file not found: {p}")
    try:
        noise = cfg.noise
        noise.loaded_mixture()
        cfg.counting
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    if cfg.sweep is not None:
        values = cfg.sweep["values"]
        if cfg.sweep["parameter"] == "noise_fraction" and any(not 0 <= v <= 1 for v in values):
            raise ConfigError("noise_fraction sweep values must lie in [0, 1]")
        if cfg.sweep["parameter"] == "fiber_length" and any(v < 0 for v in values):
            raise ConfigError("fiber_length sweep values must be nonnegative")
    return cfg


def load_config(ref: str | Path) -> ExperimentConfig:
    """Load a built-in scenario by name or a JSON file by path."""
    ref = str(ref)
    if ref in BUILTIN_CONFIGS:
        return parse_config(BUILTIN_CONFIGS[ref])
    path = Path(ref)
    if not path.is_file():
        raise ConfigError(f"no built-in config or file named {ref!r}; built-ins: {', '.join(BUILTIN_CONFIGS)}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return parse_config(raw, path.parent.resolve())
