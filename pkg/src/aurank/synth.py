"""Synthetic videos whose labels are relative to each video's own range.

Every video has a latent activity curve ``s`` (a few clipped Gaussian bumps);
its visible appearance is ``gain * s + offset`` with per-video gain and
offset, and frame features are a fixed noisy tanh lift of the appearance.
The coder label quantizes appearance relative to that video's min and max,
so the same appearance can carry different labels in different videos.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import AULabelSpec, Dataset, FrameRecord, VideoSequence, split_by_video
from .errors import ConfigError, DataError
from .metrics import kendall_tau
from .nets import FrameNet, NetConfig, init_frame_net, score_video
from .pipeline import AUModel, PipelineConfig, evaluate_levels, fit_au, predict_dataset
from .trainer import TrainConfig, TrainHistory, run_trials, train_classifier

QUANTIZER_EPS = 1e-9


@dataclass
class SynthConfig:
    video_count: int = 40
    frames_per_video: int = 200
    d: int = 8
    bump_count: int = 3
    bump_width: tuple[float, float] = (0.05, 0.15)  # gaussian sigma, as a fraction of video length
    bump_height: tuple[float, float] = (0.6, 1.4)
    gain: tuple[float, float] = (0.4, 1.6)
    offset: tuple[float, float] = (-0.5, 0.5)
    noise: float = 0.05
    level_count: int = 2
    au_name: str = "AU"
    seed: int = 0

    def __post_init__(self):
        for name in ("bump_width", "bump_height", "gain", "offset"):
            setattr(self, name, tuple(float(v) for v in getattr(self, name)))

    def validate(self):
        if self.video_count < 1 or self.d < 1 or self.bump_count < 1:
            raise ConfigError("video_count, d and bump_count must be positive")
        if self.frames_per_video < 2:
            raise ConfigError(f"frames_per_video must be >= 2, got {self.frames_per_video}")
        for name in ("bump_width", "bump_height", "gain", "offset"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ConfigError(f"{name} range is inverted: {(lo, hi)}")
        if not self.gain[0] > 0:
            raise ConfigError(f"gain lower bound must be > 0, got {self.gain[0]}")
        if self.bump_width[0] <= 0:
            raise ConfigError("bump widths must be positive")
        if self.noise < 0:
            raise ConfigError(f"noise must be >= 0, got {self.noise}")
        if self.level_count < 2:
            raise ConfigError(f"level_count must be >= 2, got {self.level_count}")


@dataclass
class SynthTruth:
    activity: dict[str, np.ndarray]
    appearance: dict[str, np.ndarray]
    gain: dict[str, float]
    offset: dict[str, float]
    lift: np.ndarray


def quantize(appearance, level_count: int) -> np.ndarray:
    """Range-relative coder label for one video."""
    a = np.asarray(appearance, dtype=np.float64)
    rel = (a - a.min()) / (a.max() - a.min() + QUANTIZER_EPS)
    return np.clip(np.floor(level_count * rel), 0, level_count - 1).astype(np.int64)


def _activity(rng, config: SynthConfig) -> np.ndarray:
    n = config.frames_per_video
    t = np.arange(n, dtype=np.float64)
    s = np.zeros(n)
    for _ in range(config.bump_count):
        center = rng.uniform(0, n)
        width = rng.uniform(*config.bump_width) * n
        height = rng.uniform(*config.bump_height)
        s += height * np.exp(-0.5 * ((t - center) / width) ** 2)
    return np.clip(s, 0.0, 1.0)


def generate(config: SynthConfig) -> tuple[Dataset, SynthTruth]:
    config.validate()
    rng = np.random.default_rng(config.seed)
    # lift rows (slope, bias); draw once, shared by every video
    lift = np.column_stack([rng.choice([-1.0, 1.0], config.d) * rng.uniform(0.5, 1.5, config.d), rng.uniform(-1.0, 1.0, config.d)])
    spec = AULabelSpec((config.au_name,), config.level_count)
    truth = SynthTruth({}, {}, {}, {}, lift)
    videos = []
    width = len(str(config.video_count - 1))
    for k in range(config.video_count):
        vid = f"v{k:0{width}d}"
        s = _activity(rng, config)
        g = float(rng.uniform(*config.gain))
        o = float(rng.uniform(*config.offset))
        a = g * s + o
        clean = np.tanh(np.column_stack([a, np.ones_like(a)]) @ lift.T)
        x = clean + config.noise * rng.standard_normal(clean.shape)
        y = quantize(a, config.level_count)
        frames = [FrameRecord(vid, i, x[i], {config.au_name: int(y[i])}) for i in range(len(a))]
        videos.append(VideoSequence(vid, frames))
        truth.activity[vid], truth.appearance[vid] = s, a
        truth.gain[vid], truth.offset[vid] = g, o
    return Dataset(spec, videos, config.d), truth


def save_truth(truth: SynthTruth, path) -> None:
    """Per-frame latent side channel, keyed by (video, frame)."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for vid, a in truth.appearance.items():
            for i, (ai, si) in enumerate(zip(a, truth.activity[vid])):
                rec = {"video": vid, "frame": i, "appearance": float(ai), "activity": float(si),
                       "gain": truth.gain[vid], "offset": truth.offset[vid]}
                fh.write(json.dumps(rec) + "\n")


def load_truth(path) -> dict[str, np.ndarray]:
    """Appearance per video, ordered by frame."""
    rows: dict[str, list[tuple[int, float]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                rows.setdefault(rec["video"], []).append((int(rec["frame"]), float(rec["appearance"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"malformed truth record at line {lineno}: {exc}") from None
    return {vid: np.array([a for _, a in sorted(r)]) for vid, r in rows.items()}


# per-frame baseline -----------------------------------------------------------


def train_baseline(
    dataset: Dataset, au_name: str, net_config: NetConfig, train_config: TrainConfig
) -> tuple[FrameNet, TrainHistory]:
    """Per-frame classifier with the scorer's hidden layers and a C-way softmax head."""
    if au_name not in dataset.spec.au_names:
        raise DataError(f"unknown AU {au_name!r}")
    X = np.vstack([v.feature_matrix() for v in dataset.videos])
    y = np.concatenate([v.label_vector(au_name) for v in dataset.videos])
    net = init_frame_net(replace(net_config, input_dim=dataset.d), dataset.spec.level_count)
    history = train_classifier(net, X, y, train_config)
    return net, history


def baseline_levels(net: FrameNet, dataset: Dataset, au_name: str):
    return {au_name: {v.video_id: np.argmax(net.predict_proba(v.feature_matrix()), axis=1) for v in dataset.videos}}


# experiment ------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    synth: SynthConfig = field(default_factory=SynthConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    baseline_train: TrainConfig = field(default_factory=TrainConfig)
    holdout_fraction: float = 0.2
    split_seed: int = 0
    trial_count: int = 5
    base_seed: int = 0


@dataclass
class ExperimentResult:
    report: dict
    pipeline_model: AUModel
    baseline_model: FrameNet


def within_video_tau(rank_net, dataset: Dataset, appearance: dict[str, np.ndarray]) -> dict[str, float]:
    return {v.video_id: kendall_tau(score_video(rank_net, v), appearance[v.video_id]) for v in dataset.videos}


def run_experiment(config: ExperimentConfig, dataset: Dataset | None = None, truth: SynthTruth | None = None) -> ExperimentResult:
    """Best-of-N pipeline against best-of-N per-frame baseline on a video-level split."""
    if dataset is None:
        dataset, truth = generate(config.synth)
    config.pipeline.validate()
    config.baseline_train.validate()
    au = dataset.spec.au_names[0]
    train, val = split_by_video(dataset, config.holdout_fraction, config.split_seed)

    def pipeline_trial(seed):
        model = fit_au(train, au, config.pipeline.with_seed_offset(seed))
        return model, evaluate_levels(predict_dataset({au: model}, val), val).competition_metric

    def baseline_trial(seed):
        net_cfg = replace(config.pipeline.rank_net, seed=config.pipeline.rank_net.seed + seed)
        tcfg = replace(config.baseline_train, seed=config.baseline_train.seed + seed)
        net, _ = train_baseline(train, au, net_cfg, tcfg)
        return net, evaluate_levels(baseline_levels(net, val, au), val).competition_metric

    ours = run_trials(pipeline_trial, config.trial_count, config.base_seed)
    base = run_trials(baseline_trial, config.trial_count, config.base_seed)
    model: AUModel = ours.best
    pipeline_report = evaluate_levels(predict_dataset({au: model}, val), val)
    baseline_report = evaluate_levels(baseline_levels(base.best, val, au), val)

    report = {
        "au": au,
        "train_videos": train.video_ids,
        "val_videos": val.video_ids,
        "pipeline": pipeline_report.to_dict(),
        "baseline": baseline_report.to_dict(),
        "metric_gap": pipeline_report.competition_metric - baseline_report.competition_metric,
        "trials": {
            "pipeline": {"metrics": ours.metrics, "best_index": ours.best_index},
            "baseline": {"metrics": base.metrics, "best_index": base.best_index},
        },
    }
    if truth is not None:
        taus = within_video_tau(model.rank_net, val, truth.appearance)
        report["kendall_tau"] = {"mean": float(np.mean(list(taus.values()))), "per_video": taus}
    return ExperimentResult(report, model, base.best)
