"""Calibration classifier from (pseudo-intensity, variation feature) to an AU level."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, VideoSequence
from .errors import ConfigError, DataError
from .nets import (
    MLP,
    NetConfig,
    RankNet,
    check_header,
    init_layers,
    layers_from_dict,
    read_json,
    score_video,
    softmax,
    write_json,
)
from .trainer import TrainConfig, TrainHistory, train_classifier
from .variation import VariationConfig, VariationFeature, extract_variation


@dataclass
class MapNetConfig:
    hidden_dims: list[int] = field(default_factory=lambda: [32])
    class_count: int = 2
    activation: str = "relu"
    seed: int = 0

    def input_dim(self, var_config: VariationConfig) -> int:
        return 1 + var_config.feature_dim


class MapNet(MLP):
    kind = "map_net"

    def __init__(self, layers, variation: VariationConfig):
        super().__init__(layers)
        if not variation.fitted:
            raise ConfigError("MapNet needs a fitted VariationConfig")
        if self.input_dim != 1 + variation.feature_dim:
            raise ConfigError(
                f"MapNet input_dim {self.input_dim} != 1 + variation feature dim {variation.feature_dim}"
            )
        if self.output_dim < 2:
            raise ConfigError("MapNet needs class_count >= 2")
        self.variation = variation

    @property
    def class_count(self) -> int:
        return self.output_dim

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.logits(X))

    def _extra(self):
        return {"class_count": self.class_count, "variation": self.variation.to_dict()}


def init_map_net(config: MapNetConfig, var_config: VariationConfig) -> MapNet:
    if config.class_count < 2:
        raise ConfigError(f"class_count must be >= 2, got {config.class_count}")
    net_cfg = NetConfig(config.input_dim(var_config), list(config.hidden_dims), config.activation, config.seed)
    return MapNet(init_layers(net_cfg, config.class_count), var_config)


def map_net_from_dict(doc: dict) -> MapNet:
    check_header(doc, MapNet.kind)
    try:
        variation = VariationConfig.from_dict(doc["variation"])
        net = MapNet(layers_from_dict(doc), variation)
    except (KeyError, TypeError, ConfigError) as exc:
        raise DataError(f"malformed map model file: {exc}") from None
    if doc.get("class_count") != net.class_count:
        raise DataError("malformed map model file: class_count does not match output layer")
    return net


def save_map_net(net: MapNet, path) -> None:
    write_json(net.to_dict(), path)


def load_map_net(path) -> MapNet:
    return map_net_from_dict(read_json(path))


@dataclass(frozen=True)
class MapRecord:
    pseudo: float
    variation: VariationFeature
    label: int

    def vector(self) -> np.ndarray:
        return np.concatenate([[self.pseudo], self.variation.vector()])


def video_inputs(rank_net: RankNet, var_config: VariationConfig, video: VideoSequence):
    """Per-frame mapping inputs for one video, plus its scores and summary."""
    scores = score_video(rank_net, video)
    feat = extract_variation(scores, var_config)
    X = np.hstack([scores[:, None], np.broadcast_to(feat.vector(), (len(scores), var_config.feature_dim))])
    return X, scores, feat


def build_map_dataset(
    dataset: Dataset, au_name: str, rank_net: RankNet, var_config: VariationConfig, l: int | None, seed: int
) -> list[MapRecord]:
    """Sample up to ``l`` frames uniformly without replacement (all frames when ``l`` is None)."""
    if dataset.n == 0:
        raise DataError("empty dataset")
    if au_name not in dataset.spec.au_names:
        raise DataError(f"unknown AU {au_name!r}")
    per_frame = []
    for v in dataset.videos:
        scores = score_video(rank_net, v)
        feat = extract_variation(scores, var_config)
        labels = v.label_vector(au_name)
        per_frame.extend((float(s), feat, int(y)) for s, y in zip(scores, labels))
    n = len(per_frame)
    if l is None or l >= n:
        chosen = np.arange(n)
    else:
        if l < 1:
            raise DataError(f"l must be >= 1, got {l}")
        chosen = np.sort(np.random.default_rng(seed).choice(n, size=l, replace=False))
    return [MapRecord(*per_frame[k]) for k in chosen]


def record_arrays(records: list[MapRecord]) -> tuple[np.ndarray, np.ndarray]:
    if not records:
        raise DataError("empty record list")
    X = np.stack([r.vector() for r in records])
    y = np.array([r.label for r in records], dtype=np.int64)
    return X, y


def train_map(
    records: list[MapRecord], config: MapNetConfig, train_config: TrainConfig, var_config: VariationConfig
) -> tuple[MapNet, TrainHistory]:
    """Cross-entropy fit of the mapping classifier."""
    X, y = record_arrays(records)
    if y.max() >= config.class_count:
        raise DataError(f"record label {int(y.max())} exceeds class_count {config.class_count}")
    net = init_map_net(config, var_config)
    history = train_classifier(net, X, y, train_config)
    return net, history


def predict_video(rank_net: RankNet, map_net: MapNet, video: VideoSequence, var_config: VariationConfig | None = None):
    """Predicted level (argmax, ties to the lower index) and probabilities per frame."""
    var_config = var_config or map_net.variation
    X, _, _ = video_inputs(rank_net, var_config, video)
    proba = map_net.predict_proba(X)
    return np.argmax(proba, axis=1), proba
