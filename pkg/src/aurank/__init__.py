"""Pairwise-ranked pseudo-intensity with video-level calibration for facial AU recognition."""

from .data import AULabelSpec, Dataset, FrameRecord, VideoSequence, load_dataset, save_dataset, split_by_video
from .errors import AurankError, ConfigError, DataError, NumericError
from .mapping import MapNet, MapNetConfig, MapRecord, build_map_dataset, predict_video, train_map
from .metrics import EvalReport, competition_metric, evaluate, f1_binary, kendall_tau
from .nets import RankNet, RankNetConfig, forward, init_rank_net, load_net, pair_loss_and_grad, save_net, score_video
from .pairs import PairDataset, PairSample, build_pair_dataset, pair_label
from .pipeline import AUModel, PipelineConfig, fit_au
from .synth import ExperimentConfig, SynthConfig, generate, run_experiment, train_baseline
from .trainer import RankTrainConfig, TrainHistory, run_trials, train_rank
from .variation import VariationConfig, VariationFeature, extract_variation, fit_bins, percentile

__version__ = "0.1.0"

__all__ = [
    "AULabelSpec",
    "AUModel",
    "AurankError",
    "build_map_dataset",
    "build_pair_dataset",
    "competition_metric",
    "ConfigError",
    "DataError",
    "Dataset",
    "EvalReport",
    "evaluate",
    "ExperimentConfig",
    "extract_variation",
    "f1_binary",
    "fit_au",
    "fit_bins",
    "forward",
    "FrameRecord",
    "generate",
    "init_rank_net",
    "kendall_tau",
    "load_dataset",
    "load_net",
    "MapNet",
    "MapNetConfig",
    "MapRecord",
    "NumericError",
    "pair_label",
    "pair_loss_and_grad",
    "PairDataset",
    "PairSample",
    "percentile",
    "PipelineConfig",
    "predict_video",
    "RankNet",
    "RankNetConfig",
    "RankTrainConfig",
    "run_experiment",
    "run_trials",
    "save_dataset",
    "save_net",
    "score_video",
    "split_by_video",
    "SynthConfig",
    "train_baseline",
    "train_map",
    "train_rank",
    "TrainHistory",
    "VariationConfig",
    "VariationFeature",
    "VideoSequence",
]
