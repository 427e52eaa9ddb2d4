"""Experiment configuration: JSON schema, validation, canonical hashing.

Configs are strict: unknown keys are rejected everywhere, and validation
happens before any computation.  The canonical hash (sha256 of the
key-sorted, minimally-separated JSON encoding of the *effective* config,
i.e. after command-line overrides) is embedded in every output file so a
result can be traced back to the exact inputs that produced it.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Any, Optional

import jsonschema

from .distributions import Lognormal, Pareto, RVStar, Shifted, TailDistribution
from .model import Fgm, Finite, Horizon, Independent, Infinite, ModelSpec

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "canonical_hash"]


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to CLI exit code 2)."""


_DIST_SCHEMA: dict = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "kind": {"const": "rvstar"},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "beta": {"type": "number", "exclusiveMinimum": 1},
                "scale": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind", "alpha", "beta", "scale"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "pareto"},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "scale": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind", "alpha", "scale"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "lognormal"},
                "mu": {"type": "number"},
                "sigma": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind", "sigma"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "shifted"},
                "inner": {"$ref": "#/$defs/dist"},
                "offset": {"type": "number"},
            },
            "required": ["kind", "inner", "offset"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA: dict = {
    "$defs": {"dist": _DIST_SCHEMA},
    "type": "object",
    "properties": {
        "model": {
            "type": "object",
            "properties": {
                "f": {"$ref": "#/$defs/dist"},
                "g": {"$ref": "#/$defs/dist"},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "dependence": {
                    "oneOf": [
                        {
                            "type": "object",
                            "properties": {"kind": {"const": "independent"}},
                            "required": ["kind"],
                            "additionalProperties": False,
                        },
                        {
                            "type": "object",
                            "properties": {
                                "kind": {"const": "fgm"},
                                "theta": {"type": "number", "minimum": -1, "maximum": 1},
                            },
                            "required": ["kind", "theta"],
                            "additionalProperties": False,
                        },
                    ]
                },
                "horizon": {
                    "oneOf": [
                        {
                            "type": "object",
                            "properties": {
                                "kind": {"const": "finite"},
                                "n": {"type": "integer", "minimum": 1},
                            },
                            "required": ["kind", "n"],
                            "additionalProperties": False,
                        },
                        {
                            "type": "object",
                            "properties": {
                                "kind": {"const": "infinite"},
                                "truncation_tol": {
                                    "type": "number",
                                    "exclusiveMinimum": 0,
                                    "exclusiveMaximum": 1,
                                },
                            },
                            "required": ["kind"],
                            "additionalProperties": False,
                        },
                    ]
                },
            },
            "required": ["f", "g", "alpha", "horizon"],
            "additionalProperties": False,
        },
        "run": {
            "type": "object",
            "properties": {
                "samples": {"type": "integer", "minimum": 10000},
                "seed": {"type": "integer", "minimum": 0},
                "workers": {"type": "integer", "minimum": 1},
                "moment_samples": {"type": "integer", "minimum": 1000},
                "x_grid": {
                    "oneOf": [
                        {
                            "type": "array",
                            "items": {"type": "number", "exclusiveMinimum": 0},
                            "minItems": 1,
                        },
                        {
                            "type": "object",
                            "properties": {
                                "points": {"type": "integer", "minimum": 2},
                                "quantile_lo": {"type": "number",
                                                "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                                "quantile_hi": {"type": "number",
                                                "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                            },
                            "required": ["points", "quantile_lo", "quantile_hi"],
                            "additionalProperties": False,
                        },
                    ]
                },
            },
            "required": ["samples", "seed"],
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {
                "csv_path": {"type": "string"},
                "svg_path": {"type": "string"},
            },
            "required": ["csv_path"],
            "additionalProperties": False,
        },
    },
    "required": ["model", "run", "output"],
    "additionalProperties": False,
}


def _dist_from_json(obj: dict) -> TailDistribution:
    kind = obj["kind"]
    if kind == "rvstar":
        return RVStar(alpha=obj["alpha"], beta=obj["beta"], scale=obj["scale"])
    if kind == "pareto":
        return Pareto(alpha=obj["alpha"], scale=obj["scale"])
    if kind == "lognormal":
        return Lognormal(mu=obj.get("mu", 0.0), sigma=obj["sigma"])
    if kind == "shifted":
        return Shifted(inner=_dist_from_json(obj["inner"]), offset=obj["offset"])
    raise ConfigError(f"unknown distribution kind {kind!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description plus its canonical hash."""

    model: ModelSpec
    samples: int
    seed: int
    workers: int
    moment_samples: int
    x_grid_spec: Any  # explicit list or {"points", "quantile_lo", "quantile_hi"}
    csv_path: str
    svg_path: Optional[str]
    config_hash: str
    raw: dict


def canonical_hash(raw: dict) -> str:
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def _build(raw: dict) -> ExperimentConfig:
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {path}: {exc.message}") from exc

    m = raw["model"]
    dep_obj = m.get("dependence", {"kind": "independent"})
    dependence = (Independent() if dep_obj["kind"] == "independent"
                  else Fgm(theta=dep_obj["theta"]))
    h = m["horizon"]
    horizon: Horizon = (Finite(n=h["n"]) if h["kind"] == "finite"
                        else Infinite(truncation_tol=h.get("truncation_tol", 1e-6)))
    try:
        spec = ModelSpec(
            f=_dist_from_json(m["f"]),
            g=_dist_from_json(m["g"]),
            alpha=m["alpha"],
            dependence=dependence,
            horizon=horizon,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    run = raw["run"]
    out = raw["output"]
    return ExperimentConfig(
        model=spec,
        samples=run["samples"],
        seed=run["seed"],
        workers=run.get("workers", 1),
        moment_samples=run.get("moment_samples", 1_000_000),
        x_grid_spec=run.get("x_grid",
                            {"points": 20, "quantile_lo": 1e-1, "quantile_hi": 1e-5}),
        csv_path=out["csv_path"],
        svg_path=out.get("svg_path"),
        config_hash=canonical_hash(raw),
        raw=raw,
    )


def load_config(path: str, overrides: Optional[dict] = None) -> ExperimentConfig:
    """Parse, override, validate, and build an experiment config.

    ``overrides`` maps dotted keys ("run.seed", "output.csv_path", ...) to
    replacement values applied before validation, so the embedded hash
    always describes the effective configuration.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON in {path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if overrides:
        for dotted, value in overrides.items():
            node = raw
            parts = dotted.split(".")
            for part in parts[:-1]:
                node = node.setdefault(part, {})
            node[parts[-1]] = value
    return _build(raw)
