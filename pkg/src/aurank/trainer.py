"""Mini-batch training loops and best-of-N trial selection."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .data import Dataset
from .errors import AurankError, ConfigError, DataError, NumericError
from .nets import (
    MLP,
    NetConfig,
    RankNet,
    batch_pair_loss_and_grad,
    cross_entropy_loss_and_grad,
    init_rank_net,
)
from .optim import OPTIMIZERS, make_optimizer
from .pairs import PairDataset, pair_arrays

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    margin: float = 1.0
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    batch_size: int = 64
    epochs: int = 30
    seed: int = 0

    def validate(self):
        if not self.margin > 0:
            raise ConfigError(f"margin must be > 0, got {self.margin}")
        if not self.learning_rate >= 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}")
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("batch_size and epochs must be >= 1")


RankTrainConfig = TrainConfig


@dataclass
class TrainHistory:
    mean_loss: list[float] = field(default_factory=list)
    val_metric: list[float] = field(default_factory=list)

    def log_lines(self) -> list[str]:
        lines = []
        for epoch, loss in enumerate(self.mean_loss):
            rec = {"epoch": epoch + 1, "mean_loss": loss}
            if epoch < len(self.val_metric):
                rec["val_metric"] = self.val_metric[epoch]
            lines.append(json.dumps(rec))
        return lines


def _fit(net: MLP, n: int, loss_and_grad: Callable, config: TrainConfig, desc: str) -> TrainHistory:
    """Shared epoch loop: shuffle, batch, update. ``loss_and_grad(idx)`` -> (per-example losses, grads)."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    params = net.parameters()
    opt = make_optimizer(config.optimizer, params, config.learning_rate)
    history = TrainHistory()
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            losses, grads = loss_and_grad(idx)
            if not np.all(np.isfinite(losses)) or not all(np.all(np.isfinite(g)) for g in grads):
                raise NumericError(f"{desc}: non-finite loss or gradient at epoch {epoch + 1}")
            epoch_losses.append(losses)
            opt.step(grads)
        mean = math.fsum(np.concatenate(epoch_losses).tolist()) / n
        history.mean_loss.append(mean)
        log.debug("%s epoch %d mean_loss %.6f", desc, epoch + 1, mean)
    return history


def train_rank(
    pairs: PairDataset, dataset: Dataset, config: TrainConfig, net_config: NetConfig, init: RankNet | None = None
) -> tuple[RankNet, TrainHistory]:
    """Fit a RankNet to the pairs with the mean hinge ranking loss.

    ``init`` optionally supplies starting weights (copied, not mutated);
    otherwise the net is initialized from ``net_config``.
    """
    if len(pairs) == 0:
        raise DataError("cannot train on an empty pair dataset")
    config.validate()
    if init is None and net_config.input_dim != dataset.d:
        raise ConfigError(f"net input_dim {net_config.input_dim} != dataset d {dataset.d}")
    xi, xj, r = pair_arrays(pairs, dataset)
    net = init.copy() if init is not None else init_rank_net(net_config)
    if net.input_dim != dataset.d:
        raise ConfigError(f"initial net input_dim {net.input_dim} != dataset d {dataset.d}")

    def step(idx):
        return batch_pair_loss_and_grad(net, xi[idx], xj[idx], r[idx], config.margin)

    history = _fit(net, len(r), step, config, f"train_rank[{pairs.au_name}]")
    return net, history


def train_classifier(net: MLP, X: np.ndarray, y: np.ndarray, config: TrainConfig) -> TrainHistory:
    """Cross-entropy training of a softmax-headed net in place."""
    if len(y) == 0:
        raise DataError("cannot train on an empty record set")

    def step(idx):
        return cross_entropy_loss_and_grad(net, X[idx], y[idx])

    return _fit(net, len(y), step, config, type(net).__name__)


@dataclass
class TrialResult:
    best_index: int
    metrics: list[float]
    best: Any

    @property
    def best_metric(self) -> float:
        return self.metrics[self.best_index]


def select_best(metrics) -> int:
    """Index of the first maximum."""
    if len(metrics) == 0:
        raise ValueError("no trial metrics")
    return int(np.argmax(np.asarray(metrics, dtype=np.float64)))


def run_trials(trial_fn: Callable[[int], tuple[Any, float]], trial_count: int = 5, base_seed: int = 0) -> TrialResult:
    """Run ``trial_fn(base_seed + k)`` for k < trial_count; keep the best by validation metric.

    ``trial_fn`` trains the full pipeline under the given seed and returns
    ``(artifact, validation_metric)``. Ties go to the lowest trial index.
    """
    if trial_count < 1:
        raise ConfigError(f"trial_count must be >= 1, got {trial_count}")
    metrics, artifacts = [], []
    for k in range(trial_count):
        try:
            artifact, metric = trial_fn(base_seed + k)
        except AurankError as exc:
            raise type(exc)(f"trial {k} failed: {exc}") from exc
        artifacts.append(artifact)
        metrics.append(float(metric))
    best = select_best(metrics)
    return TrialResult(best, metrics, artifacts[best])
