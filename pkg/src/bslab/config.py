"""Experiment configuration: schema validation, defaults and hashing."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Any

import jsonschema

from bslab.noise import NoiseConfig

EXPERIMENTS = ("state-prep", "magic", "t2star", "logical-gates", "stab-inject",
               "syndrome-table", "ft-audit", "detection-scaling")


def _grid(n: int, hi: float, lo: float = 0.0) -> list[float]:
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


DEFAULT_SHOTS = {
    "state-prep": 2000,
    "magic": 4000,
    "t2star": 300,
    "logical-gates": 1000,
    "stab-inject": 1000,
    "syndrome-table": 200,
    "ft-audit": 1,
    "detection-scaling": 100000,
}

DEFAULT_PARAMS: dict[str, dict[str, Any]] = {
    "state-prep": {"states": ["0", "1", "+", "-"], "preparations": ["FT", "nFT"]},
    "magic": {"states": ["Hx", "Hy"]},
    "t2star": {"waits": [0.0, 0.005, 0.01, 0.02, 0.04, 0.08], "phases": _grid(13, 2 * math.pi),
               "fit_depol": False},
    "logical-gates": {"ft_steps": [0, 1, 2, 3, 4], "nft_thetas": _grid(9, 2 * math.pi)},
    "stab-inject": {"stabilizer": "S3", "thetas": _grid(9, math.pi), "orderings": ["FT", "nFT"],
                    "after": 3, "baseline": True},
    "syndrome-table": {"qubits": list(range(1, 10)), "axes": ["X", "Y", "Z"]},
    "ft-audit": {"circuits": ["ft_encode_Z+", "ft_encode_X+", "nft_encode", "stab_S3_FT", "stab_S3_nFT"]},
    "detection-scaling": {"p_values": [0.01, 0.0178, 0.0316, 0.0562, 0.1], "preparations": ["FT", "nFT"],
                          "isolate": True},
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def load_schema() -> dict:
    with resources.files("bslab").joinpath("schemas/config.schema.json").open("r", encoding="utf-8") as f:
        return json.load(f)


_SCHEMA = load_schema()


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    shots: int
    seed: int
    noise: NoiseConfig
    params: dict
    plot: bool = True

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "shots": self.shots, "seed": self.seed,
                "noise": self.noise.to_dict(), "params": self.params, "plot": self.plot}

    def canonical_json(self) -> str:
        d = self.to_dict()
        d.pop("plot")  # rendering does not change results
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def build_config(experiment: str, raw: dict | None = None, seed: int | None = None,
                 shots: int | None = None, plot: bool | None = None) -> ExperimentConfig:
    """Validate ``raw`` against the schema and fill defaults; CLI overrides win."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    raw = copy.deepcopy(raw or {})
    try:
        jsonschema.validate(raw, _SCHEMA)
        jsonschema.validate(raw.get("params", {}), {**_SCHEMA["$defs"][experiment], "$defs": _SCHEMA["$defs"]})
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None
    if raw.get("experiment", experiment) != experiment:
        raise ConfigError(f"config is for {raw['experiment']!r}, not {experiment!r}")
    params = copy.deepcopy(DEFAULT_PARAMS[experiment])
    params.update(raw.get("params", {}))
    seed = raw.get("seed", 0) if seed is None else seed
    if seed < 0:
        raise ConfigError("seed must be nonnegative")
    shots = raw.get("shots", DEFAULT_SHOTS[experiment]) if shots is None else shots
    if shots < 1:
        raise ConfigError("shots must be >= 1")
    noise_raw = dict(raw.get("noise", {}))
    preset = noise_raw.pop("preset", "hardware")
    base = NoiseConfig.hardware_like() if preset == "hardware" else NoiseConfig.noiseless()
    fields = base.to_dict()
    fields.update(noise_raw)
    fields["seed"] = seed
    try:
        noise = NoiseConfig.from_dict(fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"noise: {exc}") from None
    plot = raw.get("plot", True) if plot is None else plot
    return ExperimentConfig(experiment, shots, seed, noise, params, plot)


def load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return data
