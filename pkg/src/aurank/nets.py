"""Small fully-connected networks with hand-written backpropagation.

Three heads share the same layer stack:

* ``RankNet``  - scalar output, the pseudo-intensity scorer.
* ``MapNet``   - softmax over C levels from (pseudo-intensity, variation feature).
* ``FrameNet`` - softmax over C levels straight from frame features (baseline).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

FORMAT_VERSION = 1
ACTIVATIONS = ("relu", "tanh", "linear")


def _act(z, name):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return z


def _act_grad(z, a, name):
    if name == "relu":
        return (z > 0).astype(z.dtype)
    if name == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


@dataclass
class Layer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: str

    @property
    def shape(self):
        return self.weights.shape


@dataclass
class NetConfig:
    input_dim: int
    hidden_dims: list[int] = field(default_factory=lambda: [32, 16])
    activation: str = "relu"
    seed: int = 0

    def validate(self, output_dim: int = 1):
        if self.input_dim < 1 or output_dim < 1 or any(h < 1 for h in self.hidden_dims):
            raise ConfigError(f"all layer dims must be >= 1: input={self.input_dim} hidden={self.hidden_dims}")
        if self.activation not in ("relu", "tanh"):
            raise ConfigError(f"activation must be relu or tanh, got {self.activation!r}")


RankNetConfig = NetConfig


def init_layers(config: NetConfig, output_dim: int) -> list[Layer]:
    """Fan-in scaled uniform init: W ~ U[-s, s], s = sqrt(6 / fan_in); zero biases."""
    config.validate(output_dim)
    rng = np.random.default_rng(config.seed)
    dims = [config.input_dim, *config.hidden_dims, output_dim]
    layers = []
    for k, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        s = np.sqrt(6.0 / fan_in)
        w = rng.uniform(-s, s, size=(fan_out, fan_in))
        act = "linear" if k == len(dims) - 2 else config.activation
        layers.append(Layer(w, np.zeros(fan_out), act))
    return layers


class MLP:
    kind = "mlp"

    def __init__(self, layers: list[Layer]):
        if not layers:
            raise ConfigError("network needs at least one layer")
        for a, b in zip(layers, layers[1:]):
            if a.weights.shape[0] != b.weights.shape[1]:
                raise ConfigError("consecutive layer dims do not chain")
        for layer in layers:
            if layer.activation not in ACTIVATIONS:
                raise ConfigError(f"unknown activation {layer.activation!r}")
        self.layers = layers

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weights.shape[0]

    def parameters(self) -> list[np.ndarray]:
        """Parameters in a fixed order: W0, b0, W1, b1, ..."""
        out = []
        for layer in self.layers:
            out.extend((layer.weights, layer.biases))
        return out

    def set_parameters(self, params):
        for k, layer in enumerate(self.layers):
            layer.weights = params[2 * k]
            layer.biases = params[2 * k + 1]

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    def copy(self):
        clone = type(self).__new__(type(self))
        clone.__dict__.update(self.__dict__)
        clone.layers = [Layer(l.weights.copy(), l.biases.copy(), l.activation) for l in self.layers]
        return clone

    def _check_input(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise DataError(f"dimension mismatch: net expects {self.input_dim} inputs, got shape {X.shape}")
        return X

    def logits(self, X) -> np.ndarray:
        """Raw last-layer output for a batch, shape (B, out)."""
        h = self._check_input(X)
        for layer in self.layers:
            h = _act(h @ layer.weights.T + layer.biases, layer.activation)
        return h

    def forward_cache(self, X):
        h = self._check_input(X)
        cache = []
        for layer in self.layers:
            z = h @ layer.weights.T + layer.biases
            a = _act(z, layer.activation)
            cache.append((h, z, a))
            h = a
        return h, cache

    def backward(self, cache, dout) -> list[np.ndarray]:
        """Gradients of sum_b <dout_b, out_b> w.r.t. parameters(), same order."""
        grads = [None] * (2 * len(self.layers))
        delta = dout
        for k in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[k]
            h, z, a = cache[k]
            dz = delta * _act_grad(z, a, layer.activation)
            grads[2 * k] = dz.T @ h
            grads[2 * k + 1] = dz.sum(axis=0)
            if k:
                delta = dz @ layer.weights
        return grads

    # serialization -------------------------------------------------------

    def _extra(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        doc = {"format_version": FORMAT_VERSION, "kind": self.kind, "input_dim": self.input_dim}
        doc.update(self._extra())
        doc["layers"] = [
            {
                "in": int(l.weights.shape[1]),
                "out": int(l.weights.shape[0]),
                "activation": l.activation,
                "weights": [float(v) for v in l.weights.ravel()],
                "biases": [float(v) for v in l.biases],
            }
            for l in self.layers
        ]
        return doc


def layers_from_dict(doc: dict) -> list[Layer]:
    try:
        layers = []
        for entry in doc["layers"]:
            n_in, n_out = int(entry["in"]), int(entry["out"])
            w = np.array(entry["weights"], dtype=np.float64)
            b = np.array(entry["biases"], dtype=np.float64)
            if w.size != n_in * n_out or b.size != n_out:
                raise DataError("layer parameter count does not match its declared shape")
            layers.append(Layer(w.reshape(n_out, n_in), b, str(entry["activation"])))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed model file: {exc}") from None
    if not layers or layers[0].weights.shape[1] != doc.get("input_dim"):
        raise DataError("malformed model file: input_dim does not match first layer")
    if not all(np.all(np.isfinite(l.weights)) and np.all(np.isfinite(l.biases)) for l in layers):
        raise DataError("malformed model file: non-finite parameters")
    return layers


def check_header(doc, kind: str):
    if not isinstance(doc, dict):
        raise DataError("malformed model file: top level must be an object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported model format_version {version!r} (expected {FORMAT_VERSION})")
    if doc.get("kind") != kind:
        raise DataError(f"model file kind is {doc.get('kind')!r}, expected {kind!r}")


def write_json(doc: dict, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed model file {path}: {exc}") from None


# rank net ----------------------------------------------------------------


class RankNet(MLP):
    kind = "rank_net"

    def __init__(self, layers):
        super().__init__(layers)
        if self.output_dim != 1:
            raise ConfigError("RankNet output dimension must be 1")

    def score(self, X) -> np.ndarray:
        """Pseudo-intensities for a batch of feature vectors."""
        return self.logits(X)[:, 0]


def init_rank_net(config: NetConfig) -> RankNet:
    return RankNet(init_layers(config, 1))


def forward(net: RankNet, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("forward takes a single feature vector")
    return float(net.score(x)[0])


def score_video(net: RankNet, video) -> np.ndarray:
    return net.score(video.feature_matrix())


def pair_margin(y_i, y_j, r):
    """Signed separation (1-2r)(y_i - y_j); the loss is max(0, t - this)."""
    return (1.0 - 2.0 * np.asarray(r, dtype=np.float64)) * (y_i - y_j)


def batch_pair_loss_and_grad(net: RankNet, X_i, X_j, r, t: float = 1.0):
    """Mean hinge ranking loss over a batch and its gradient.

    Both members of each pair pass through the same weights; their gradient
    contributions are summed. The hinge at exactly ``t - margin == 0`` is
    treated as inactive.
    """
    if t <= 0:
        raise ConfigError(f"margin t must be > 0, got {t}")
    X_i = net._check_input(X_i)
    X_j = net._check_input(X_j)
    B = X_i.shape[0]
    if X_j.shape[0] != B:
        raise DataError("X_i and X_j batch sizes differ")
    sign = 1.0 - 2.0 * np.asarray(r, dtype=np.float64).reshape(B)
    out, cache = net.forward_cache(np.vstack([X_i, X_j]))
    y_i, y_j = out[:B, 0], out[B:, 0]
    slack = t - sign * (y_i - y_j)
    losses = np.maximum(0.0, slack)
    active = (slack > 0).astype(np.float64)
    dy = np.empty((2 * B, 1))
    dy[:B, 0] = -sign * active / B
    dy[B:, 0] = sign * active / B
    return losses, net.backward(cache, dy)


def pair_loss_and_grad(net: RankNet, x_i, x_j, r: int, t: float = 1.0):
    """Loss max(0, t - (1-2r)(f(x_i) - f(x_j))) for one pair, with parameter gradients."""
    x_i = np.asarray(x_i, dtype=np.float64)
    x_j = np.asarray(x_j, dtype=np.float64)
    losses, grads = batch_pair_loss_and_grad(net, x_i[None, :], x_j[None, :], np.array([r]), t)
    return float(losses[0]), grads


def save_net(net: MLP, path) -> None:
    write_json(net.to_dict(), path)


def rank_net_from_dict(doc: dict) -> RankNet:
    check_header(doc, RankNet.kind)
    try:
        return RankNet(layers_from_dict(doc))
    except ConfigError as exc:
        raise DataError(f"malformed model file: {exc}") from None


def load_net(path) -> RankNet:
    return rank_net_from_dict(read_json(path))


# softmax heads -------------------------------------------------------------


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy_loss_and_grad(net: MLP, X, labels):
    """Mean cross-entropy of softmax(net(X)) against integer labels, with gradients."""
    labels = np.asarray(labels, dtype=np.int64)
    out, cache = net.forward_cache(X)
    B, C = out.shape
    if labels.shape != (B,) or labels.min(initial=0) < 0 or labels.max(initial=0) >= C:
        raise DataError("labels must be a length-B vector of levels in [0, C-1]")
    z = out - out.max(axis=1, keepdims=True)
    log_p = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    losses = -log_p[np.arange(B), labels]
    dout = np.exp(log_p)
    dout[np.arange(B), labels] -= 1.0
    return losses, net.backward(cache, dout / B)


class FrameNet(MLP):
    """Per-frame classifier: features -> level probabilities."""

    kind = "frame_net"

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.logits(X))


def init_frame_net(config: NetConfig, class_count: int) -> FrameNet:
    if class_count < 2:
        raise ConfigError("class_count must be >= 2")
    return FrameNet(init_layers(config, class_count))


def frame_net_from_dict(doc: dict) -> FrameNet:
    check_header(doc, FrameNet.kind)
    return FrameNet(layers_from_dict(doc))
