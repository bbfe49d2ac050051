"""Experiment configuration files (JSON).

A minimal file is ``{}``; every section is optional. Keys not listed in the
defaults below are rejected with their dotted path. ``preset`` binds the
runtime constants and the schedule's ``k0`` / ``eta0`` of a benchmark task;
explicit keys still override it. ``schedule.plateau.metric = "auto"`` means
validation accuracy for classifiers and training loss for quadratic federations.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

from fedtick.presets import PRESETS, get_preset
from fedtick.runtime_model import RuntimeConfig
from fedtick.schedules import KINDS, PlateauSpec, ScheduleSpec

DEFAULTS = {
    "preset": None,
    "rounds": 1000,
    "seeds": [0, 1, 2, 3, 4],
    "out": "runs/experiment",
    "batch_size": 32,
    "eval_every": 50,
    "n_sample": None,
    "aggregation": "mean",
    "federation": {
        "kind": "quadratic",
        "c_total": 20,
        "seed": 0,
        # quadratic
        "dim": 10,
        "heterogeneity": 1.0,
        "mu": 0.1,
        "L": 1.0,
        "sigma": 0.0,
        "center_scale": 1.0,
        "per_client_spectra": False,
        # blobs / csv
        "model": "linear",
        "hidden": 16,
        "shards_per_client": 2,
        "n_samples": 2000,
        "n_features": 8,
        "n_classes": 4,
        "val_fraction": 0.2,
        "path": None,
        "val_path": None,
    },
    "schedule": {
        "kind": "fixed",
        "k0": 10,
        "eta0": 0.1,
        "window_s": 100,
        "step_divisor": 10.0,
        "plateau": {"patience": 200, "min_rel_improvement": 1e-3, "metric": "auto"},
    },
    "runtime": {
        "model_megabits": 1.0,
        "down_mbps": 20.0,
        "up_mbps": 5.0,
        "beta_seconds": 0.01,
        "n_participants": 2,
    },
}

FEDERATION_KINDS = ("quadratic", "blobs", "csv")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    federation: dict
    schedule: ScheduleSpec
    runtime: RuntimeConfig
    rounds: int
    seeds: tuple
    out: Path
    batch_size: int
    eval_every: int
    n_sample: int | None
    aggregation: str
    preset: str | None
    raw: dict
    source: dict

    def snapshot(self) -> dict:
        """JSON-able copy of the fully resolved settings."""
        return copy.deepcopy(self.raw)


def _merge(defaults: dict, given: dict, path: str) -> dict:
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        where = f"{path}.{key}" if path else key
        if key not in defaults:
            raise ConfigError(f"unknown key {where!r}")
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be an object")
            out[key] = _merge(defaults[key], value, where)
        else:
            out[key] = value
    return out


def _given(raw: dict, *path) -> bool:
    node = raw
    for key in path:
        if not isinstance(node, dict) or key not in node:
            return False
        node = node[key]
    return True


def resolve(raw: dict) -> ExperimentConfig:
    """Validate a parsed config mapping and fill defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    cfg = _merge(DEFAULTS, raw, "")
    preset_name = cfg["preset"]
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError(f"preset: unknown {preset_name!r}; choose from {sorted(PRESETS)}")
        preset = get_preset(preset_name)
        rt = cfg["runtime"]
        for key, value in (
            ("model_megabits", preset.model_megabits),
            ("beta_seconds", preset.beta_mean),
            ("n_participants", preset.n_participants),
        ):
            if not _given(raw, "runtime", key):
                rt[key] = value
        if not _given(raw, "schedule", "k0"):
            cfg["schedule"]["k0"] = preset.k0
        if not _given(raw, "schedule", "eta0"):
            cfg["schedule"]["eta0"] = preset.eta0

    fed = cfg["federation"]
    if fed["kind"] not in FEDERATION_KINDS:
        raise ConfigError(f"federation.kind: unknown {fed['kind']!r}; choose from {FEDERATION_KINDS}")
    if fed["kind"] == "csv" and not fed["path"]:
        raise ConfigError("federation.path is required for kind 'csv'")
    if fed["model"] not in ("linear", "mlp"):
        raise ConfigError(f"federation.model: unknown {fed['model']!r}")

    sched = cfg["schedule"]
    if sched["kind"] not in KINDS:
        raise ConfigError(f"schedule.kind: unknown {sched['kind']!r}; choose from {KINDS}")
    if sched["plateau"]["metric"] == "auto":
        sched["plateau"]["metric"] = (
            "training-loss" if fed["kind"] == "quadratic" else "validation-accuracy"
        )
    try:
        plateau = PlateauSpec(**sched["plateau"])
        schedule = ScheduleSpec(
            kind=sched["kind"],
            k0=sched["k0"],
            eta0=float(sched["eta0"]),
            window_s=sched["window_s"],
            plateau=plateau,
            step_divisor=float(sched["step_divisor"]),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"schedule: {exc}") from None
    try:
        runtime = RuntimeConfig(**cfg["runtime"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"runtime: {exc}") from None

    seeds = cfg["seeds"]
    if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
        raise ConfigError("seeds: need a non-empty list of integers")
    for key in ("rounds", "batch_size", "eval_every"):
        if not isinstance(cfg[key], int) or cfg[key] < 1:
            raise ConfigError(f"{key}: must be an integer >= 1, got {cfg[key]!r}")
    if cfg["n_sample"] is not None and (not isinstance(cfg["n_sample"], int) or cfg["n_sample"] < 1):
        raise ConfigError("n_sample: must be null or an integer >= 1")
    if cfg["aggregation"] not in ("mean", "weighted"):
        raise ConfigError("aggregation: must be 'mean' or 'weighted'")

    return ExperimentConfig(
        federation=fed,
        schedule=schedule,
        runtime=runtime,
        rounds=cfg["rounds"],
        seeds=tuple(seeds),
        out=Path(cfg["out"]),
        batch_size=cfg["batch_size"],
        eval_every=cfg["eval_every"],
        n_sample=cfg["n_sample"],
        aggregation=cfg["aggregation"],
        preset=preset_name,
        raw=cfg,
        source=copy.deepcopy(raw),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return resolve(raw)


def with_overrides(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Re-resolve with top-level or dotted-key overrides, e.g. ``{"schedule.kind": "K-rounds"}``."""
    raw = copy.deepcopy(cfg.source)
    for key, value in overrides.items():
        if value is None:
            continue
        node = raw
        *parents, leaf = key.split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    return resolve(raw)
