"""Two-stage fit per AU: ranking scorer, then calibration classifier."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset
from .errors import ConfigError
from .mapping import MapNet, MapNetConfig, build_map_dataset, predict_video, train_map
from .metrics import EvalReport, evaluate
from .nets import NetConfig, RankNet, score_video
from .pairs import build_pair_dataset
from .trainer import TrainConfig, TrainHistory, train_rank
from .variation import VariationConfig, fit_variation


@dataclass
class PipelineConfig:
    rank_net: NetConfig = field(default_factory=lambda: NetConfig(input_dim=0))
    rank_train: TrainConfig = field(default_factory=TrainConfig)
    pair_count: int = 20000
    pair_seed: int = 0
    variation: VariationConfig = field(default_factory=VariationConfig)
    map_net: MapNetConfig = field(default_factory=MapNetConfig)
    map_train: TrainConfig = field(default_factory=TrainConfig)
    map_records: int | None = None
    map_seed: int = 0

    def with_seed_offset(self, k: int) -> "PipelineConfig":
        """Same configuration with every seed shifted by ``k``."""
        return replace(
            self,
            rank_net=replace(self.rank_net, seed=self.rank_net.seed + k),
            rank_train=replace(self.rank_train, seed=self.rank_train.seed + k),
            pair_seed=self.pair_seed + k,
            map_net=replace(self.map_net, seed=self.map_net.seed + k),
            map_train=replace(self.map_train, seed=self.map_train.seed + k),
            map_seed=self.map_seed + k,
        )

    def validate(self):
        self.rank_train.validate()
        self.map_train.validate()
        if self.pair_count < 1:
            raise ConfigError(f"pair_count must be >= 1, got {self.pair_count}")
        if self.map_records is not None and self.map_records < 1:
            raise ConfigError(f"map_records must be >= 1, got {self.map_records}")


@dataclass
class AUModel:
    au_name: str
    rank_net: RankNet
    map_net: MapNet
    rank_history: TrainHistory
    map_history: TrainHistory

    @property
    def variation(self) -> VariationConfig:
        return self.map_net.variation


def fit_rank_stage(train: Dataset, au_name: str, config: PipelineConfig) -> tuple[RankNet, TrainHistory]:
    pairs = build_pair_dataset(train, au_name, config.pair_count, config.pair_seed)
    net_cfg = replace(config.rank_net, input_dim=train.d)
    return train_rank(pairs, train, config.rank_train, net_cfg)


def fit_map_stage(train: Dataset, au_name: str, rank_net: RankNet, config: PipelineConfig):
    scores = np.concatenate([score_video(rank_net, v) for v in train.videos])
    var_config = fit_variation(scores, config.variation)
    records = build_map_dataset(train, au_name, rank_net, var_config, config.map_records, config.map_seed)
    map_cfg = replace(config.map_net, class_count=train.spec.level_count)
    return train_map(records, map_cfg, config.map_train, var_config)


def fit_au(train: Dataset, au_name: str, config: PipelineConfig) -> AUModel:
    config.validate()
    rank_net, rank_hist = fit_rank_stage(train, au_name, config)
    map_net, map_hist = fit_map_stage(train, au_name, rank_net, config)
    return AUModel(au_name, rank_net, map_net, rank_hist, map_hist)


def predict_dataset(models: dict[str, AUModel], dataset: Dataset) -> dict[str, dict[str, np.ndarray]]:
    """Predicted levels keyed by AU then video id."""
    out = {}
    for au, model in models.items():
        out[au] = {v.video_id: predict_video(model.rank_net, model.map_net, v)[0] for v in dataset.videos}
    return out


def occurrence(levels) -> np.ndarray:
    """Binary occurrence from levels: any level above 0 counts as present."""
    return (np.asarray(levels) > 0).astype(np.int64)


def truth_matrix(dataset: Dataset, au_names) -> np.ndarray:
    cols = [np.concatenate([v.label_vector(au) for v in dataset.videos]) for au in au_names]
    return occurrence(np.stack(cols, axis=1))


def evaluate_levels(levels: dict[str, dict[str, np.ndarray]], dataset: Dataset) -> EvalReport:
    au_names = list(levels)
    pred = np.stack([np.concatenate([levels[au][v.video_id] for v in dataset.videos]) for au in au_names], axis=1)
    return evaluate(occurrence(pred), truth_matrix(dataset, au_names), au_names)


def evaluate_models(models: dict[str, AUModel], dataset: Dataset) -> EvalReport:
    return evaluate_levels(predict_dataset(models, dataset), dataset)
