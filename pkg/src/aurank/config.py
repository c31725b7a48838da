"""JSON run configuration for the command-line tool.

Relative paths are resolved against the current working directory. Every
section is optional; missing keys fall back to the dataclass defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .data import AULabelSpec
from .errors import AurankError, ConfigError
from .mapping import MapNetConfig
from .nets import NetConfig
from .pipeline import PipelineConfig
from .synth import ExperimentConfig, SynthConfig
from .trainer import TrainConfig
from .variation import VariationConfig

DEFAULT_PATHS = {
    "dataset": "runs/default/dataset.jsonl",
    "truth": "runs/default/truth.jsonl",
    "pairs": "runs/default/pairs_{au}.jsonl",
    "rank_model": "runs/default/rank_{au}.json",
    "map_model": "runs/default/map_{au}.json",
    "rank_log": "runs/default/rank_{au}.log.jsonl",
    "map_log": "runs/default/map_{au}.log.jsonl",
    "predictions": "runs/default/predictions.jsonl",
    "report": "runs/default/report",
    "experiment_dir": "runs/default/experiment",
}


@dataclass
class RunConfig:
    paths: dict[str, str]
    labels: AULabelSpec | None
    pipeline: PipelineConfig
    experiment: ExperimentConfig

    @property
    def synth(self) -> SynthConfig:
        return self.experiment.synth

    @property
    def label_spec(self) -> AULabelSpec:
        if self.labels is not None:
            return self.labels
        return AULabelSpec((self.synth.au_name,), self.synth.level_count)

    def path(self, key: str, au: str | None = None) -> Path:
        raw = self.paths[key]
        if "{au}" in raw:
            if au is None:
                raise ConfigError(f"path {key!r} needs an AU name")
            raw = raw.replace("{au}", au)
        return Path(raw)


def _build(cls, doc, section: str, **fixed):
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"section {section!r} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")
    try:
        return cls(**{**doc, **fixed})
    except AurankError as exc:
        raise ConfigError(f"invalid {section!r}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {section!r}: {exc}") from None


SECTIONS = {
    "paths", "labels", "rank_net", "rank_train", "pairs", "variation", "map_net", "map_train",
    "map_records", "baseline_train", "synth", "split", "trial_count", "base_seed",
}


def _seeded(obj, value):
    return replace(obj, seed=value)


def parse_config(doc: dict, seed_override: int | None = None) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - SECTIONS
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    paths = dict(DEFAULT_PATHS)
    user_paths = doc.get("paths") or {}
    if not isinstance(user_paths, dict) or set(user_paths) - set(DEFAULT_PATHS):
        raise ConfigError(f"paths must be an object with keys among {sorted(DEFAULT_PATHS)}")
    paths.update({k: str(v) for k, v in user_paths.items()})

    labels = None
    if doc.get("labels") is not None:
        labels = _build(AULabelSpec, doc["labels"], "labels")

    rank_net = _build(NetConfig, doc.get("rank_net"), "rank_net", input_dim=1)
    rank_net.validate()
    rank_train = _build(TrainConfig, doc.get("rank_train"), "rank_train")
    map_train = _build(TrainConfig, doc.get("map_train"), "map_train")
    baseline_train = _build(TrainConfig, doc.get("baseline_train"), "baseline_train")
    map_net = _build(MapNetConfig, doc.get("map_net"), "map_net")
    variation = _build(VariationConfig, doc.get("variation"), "variation")
    if variation.fitted:
        raise ConfigError("variation.bin_edges are fitted from data and must not be set in the config")

    pairs = doc.get("pairs") or {}
    records = doc.get("map_records") or {}
    split = doc.get("split") or {}
    for name, sec, keys in (("pairs", pairs, {"count", "seed"}), ("map_records", records, {"count", "seed"}),
                            ("split", split, {"holdout_fraction", "seed"})):
        if not isinstance(sec, dict) or set(sec) - keys:
            raise ConfigError(f"section {name!r} takes keys {sorted(keys)}")

    synth = _build(SynthConfig, doc.get("synth"), "synth")
    trial_count = doc.get("trial_count", 5)
    base_seed = doc.get("base_seed", 0)

    if seed_override is not None:
        rank_net, rank_train, map_train = (_seeded(c, seed_override) for c in (rank_net, rank_train, map_train))
        baseline_train, map_net, synth = (_seeded(c, seed_override) for c in (baseline_train, map_net, synth))
        pairs = {**pairs, "seed": seed_override}
        records = {**records, "seed": seed_override}
        split = {**split, "seed": seed_override}
        base_seed = seed_override

    pipeline = PipelineConfig(
        rank_net=rank_net,
        rank_train=rank_train,
        pair_count=pairs.get("count", 20000),
        pair_seed=pairs.get("seed", 0),
        variation=variation,
        map_net=map_net,
        map_train=map_train,
        map_records=records.get("count"),
        map_seed=records.get("seed", 0),
    )
    experiment = ExperimentConfig(
        synth=synth,
        pipeline=pipeline,
        baseline_train=baseline_train,
        holdout_fraction=split.get("holdout_fraction", 0.2),
        split_seed=split.get("seed", 0),
        trial_count=trial_count,
        base_seed=base_seed,
    )
    try:
        pipeline.validate()
        baseline_train.validate()
        synth.validate()
    except AurankError as exc:
        raise ConfigError(str(exc)) from None
    if not isinstance(trial_count, int) or trial_count < 1:
        raise ConfigError(f"trial_count must be a positive integer, got {trial_count!r}")
    if not 0.0 < experiment.holdout_fraction < 1.0:
        raise ConfigError(f"split.holdout_fraction must be in (0, 1), got {experiment.holdout_fraction}")
    return RunConfig(paths, labels, pipeline, experiment)


def load_config(path, seed_override: int | None = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(doc, seed_override)
