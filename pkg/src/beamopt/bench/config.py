"""Experiment configuration: JSON schema validation plus defaults."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from importlib import resources

import jsonschema

from ..model import ArrayGeometry, Scenario
from .methods import REGISTRY

SCHEMA_VERSION = 1

DEFAULTS = {
    "seed": 0,
    "trials": 20,
    "report_runtime": False,
    "geometry": {"n_elements": 10, "spacing_wavelengths": 0.5, "carrier_freq_hz": 28e9},
    "scenario": {"soi_direction_deg": 3.0, "soi_power": 10.0, "noise_power": 1.0, "snapshots": 30,
                 "interferers": [{"direction_deg": 30.0, "power": 100.0},
                                 {"direction_deg": -50.0, "power": 100.0}]},
    "adaptive": {"mismatch_deg": 2.0, "epsilon": None, "loading": 10.0, "p_norm": 1.5,
                 "epsilon_a": None, "sector_half_width_deg": 5.0},
    "hybrid": {"n_tx": 36, "n_rx": 16, "n_rf": 4, "n_streams": 2, "n_subcarriers": 1, "n_paths": 3,
               "rx_power": 1.0, "noise_power": 1.0, "phase_bits": None, "max_iter": 100},
    "jrc": {"radar_targets_deg": [-30.0, 25.0], "tradeoffs": [0.0, 0.25, 0.5, 0.75, 1.0], "max_iter": 30},
    "squint": {"n_tx": 64, "bandwidth_hz": 2.8e9, "theta_deg": 60.0, "n_subcarriers": 8, "n_rx": 8, "n_rf": 4,
               "n_streams": 2, "n_paths": 3, "snr_db": 0.0},
    "irs": {"n_tx": 4, "n_irs": 16, "p_max": 1.0, "direct_gain": 0.1, "literal_norm": False, "n_starts": 4},
    "multicast": {"n_tx": 4, "n_users": 6, "n_samples": 200, "refine": True},
    "beampattern": {"method": "capon", "grid_step_deg": 0.5, "null_directions_deg": []},
    "dataset": {"count": 10},
    "output": {"format": "csv"},
}


class ConfigError(ValueError):
    pass


def load_schema() -> dict:
    text = resources.files("beamopt").joinpath("schemas/experiment.schema.json").read_text()
    return json.loads(text)


def validate(raw: dict) -> None:
    try:
        jsonschema.validate(raw, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid config at {where}: {exc.message}") from None


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _methods(items):
    out = []
    for m in items:
        name, params = (m, {}) if isinstance(m, str) else (m["name"], dict(m.get("params", {})))
        if name not in REGISTRY:
            raise ConfigError(f"unknown method {name!r}; registered: {', '.join(sorted(REGISTRY))}")
        out.append((name, params))
    return out


@dataclass
class ExperimentConfig:
    raw: dict
    methods: list = field(default_factory=list)
    sweep_variable: str = "snr_db"
    sweep_values: tuple = (0.0,)
    trials: int = 1
    seed: int = 0
    output_path: str | None = None
    output_format: str = "csv"
    report_runtime: bool = False

    @property
    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry.from_dict(self.raw["geometry"])

    @property
    def scenario(self) -> Scenario:
        return Scenario.from_dict(self.raw["scenario"])

    def section(self, name) -> dict:
        return self.raw[name]

    @classmethod
    def from_dict(cls, user: dict, seed=None, trials=None, defaults=None) -> "ExperimentConfig":
        """Validate ``user`` against the schema and fill in defaults.

        ``seed`` and ``trials`` override the file values when given.
        """
        validate(user)
        raw = _merge(DEFAULTS if defaults is None else defaults, user)
        if seed is not None:
            raw["seed"] = int(seed)
        if trials is not None:
            raw["trials"] = int(trials)
        validate(raw)
        try:
            ArrayGeometry.from_dict(raw["geometry"])
            Scenario.from_dict(raw["scenario"])
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        methods = _methods(raw.get("methods", []))
        sweep = raw.get("sweep", {"variable": "snr_db", "values": [0.0]})
        values = tuple(float(v) for v in sweep["values"])
        if not all(math.isfinite(v) for v in values):
            raise ConfigError("sweep values must be finite")
        out = raw.get("output", {})
        return cls(raw=raw, methods=methods, sweep_variable=sweep["variable"], sweep_values=values,
                   trials=raw["trials"], seed=raw["seed"], output_path=out.get("path"),
                   output_format=out.get("format", "csv"), report_runtime=raw["report_runtime"])

    @classmethod
    def from_file(cls, path, **kw) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(user, **kw)
