import json
import math

import numpy as np
import pytest

from aurank.errors import ConfigError, DataError
from aurank.nets import (
    Layer,
    NetConfig,
    RankNet,
    cross_entropy_loss_and_grad,
    forward,
    init_frame_net,
    init_rank_net,
    load_net,
    pair_loss_and_grad,
    save_net,
    score_video,
    softmax,
)

from conftest import central_differences, flat_params, hidden_preactivations, make_dataset, max_relative_error


def straight_line_forward(net, x):
    """Pure-Python forward pass, no numpy linear algebra."""
    h = [float(v) for v in x]
    for layer in net.layers:
        out = []
        for row, b in zip(layer.weights.tolist(), layer.biases.tolist()):
            z = b + sum(w * v for w, v in zip(row, h))
            if layer.activation == "relu":
                z = max(z, 0.0)
            elif layer.activation == "tanh":
                z = math.tanh(z)
            out.append(z)
        h = out
    return h


def test_parameter_count():
    net = init_rank_net(NetConfig(4, [3], seed=0))
    assert net.parameter_count() == 4 * 3 + 3 + 3 * 1 + 1 == 19


def test_init_deterministic_and_bounded():
    a = init_rank_net(NetConfig(6, [5, 4], seed=11))
    b = init_rank_net(NetConfig(6, [5, 4], seed=11))
    assert all(np.array_equal(p, q) for p, q in zip(a.parameters(), b.parameters()))
    for layer in a.layers:
        s = math.sqrt(6 / layer.weights.shape[1])
        assert np.all(np.abs(layer.weights) <= s)
        assert np.all(layer.biases == 0)


def test_no_hidden_layers_is_linear():
    net = init_rank_net(NetConfig(5, [], seed=0))
    assert len(net.layers) == 1 and net.layers[0].weights.shape == (1, 5)
    assert net.layers[0].activation == "linear"


@pytest.mark.parametrize("hidden", [[0], [3, -1]])
def test_bad_dims(hidden):
    with pytest.raises(ConfigError):
        init_rank_net(NetConfig(4, hidden))


def test_zero_net_outputs_zero():
    net = init_rank_net(NetConfig(3, [4]))
    net.set_parameters([np.zeros_like(p) for p in net.parameters()])
    assert forward(net, np.array([1.0, -2.0, 5.0])) == 0.0


def test_identity_like_layer():
    net = RankNet([Layer(np.array([[1.0, 0.0, 0.0]]), np.zeros(1), "linear")])
    assert forward(net, np.array([0.7, 3.0, -1.0])) == 0.7


@pytest.mark.parametrize("seed", range(10))
def test_forward_matches_straight_line(seed):
    rng = np.random.default_rng(seed)
    act = ["relu", "tanh"][seed % 2]
    net = init_rank_net(NetConfig(7, [int(rng.integers(1, 9)), int(rng.integers(1, 9))], act, seed))
    for layer in net.layers:
        layer.biases[:] = rng.normal(size=layer.biases.shape)
    for _ in range(5):
        x = rng.normal(size=7)
        assert forward(net, x) == pytest.approx(straight_line_forward(net, x)[0], rel=1e-12, abs=1e-12)


def test_dimension_mismatch():
    net = init_rank_net(NetConfig(3, [2]))
    with pytest.raises(DataError, match="dimension mismatch"):
        forward(net, np.zeros(4))


def _net_with_outputs(y_i, y_j):
    """Linear net over 1-d inputs so that f(x) = x."""
    return RankNet([Layer(np.array([[1.0]]), np.zeros(1), "linear")]), np.array([y_i]), np.array([y_j])


def test_margin_satisfied_gives_zero_loss_and_grad():
    net, xi, xj = _net_with_outputs(0.2, 1.5)
    loss, grads = pair_loss_and_grad(net, xi, xj, r=1, t=1.0)
    assert loss == 0.0
    assert all(np.all(g == 0) for g in grads)


@pytest.mark.parametrize("r", [0, 1])
def test_equal_scores_loss_is_margin(r):
    net, xi, xj = _net_with_outputs(0.4, 0.4)
    assert pair_loss_and_grad(net, xi, xj, r=r, t=1.0)[0] == 1.0


def test_kink_is_inactive():
    # slack t - (1-2r)(y_i - y_j) == 0 exactly
    net, xi, xj = _net_with_outputs(0.0, 1.0)
    loss, grads = pair_loss_and_grad(net, xi, xj, r=1, t=1.0)
    assert loss == 0.0 and all(np.all(g == 0) for g in grads)


def random_pair_instance(rng, act=None):
    d = int(rng.integers(2, 7))
    hidden = [int(h) for h in rng.integers(1, 6, size=int(rng.integers(0, 3)))]
    act = act or ["relu", "tanh"][int(rng.integers(2))]
    net = init_rank_net(NetConfig(d, hidden, act, int(rng.integers(1 << 30))))
    for layer in net.layers:
        layer.biases[:] = 0.3 * rng.normal(size=layer.biases.shape)
    return net, rng.normal(size=d), rng.normal(size=d), int(rng.integers(2))


def _away_from_kinks(net, xi, xj, r, t, tol=1e-3):
    y_i, y_j = forward(net, xi), forward(net, xj)
    if abs(t - (1 - 2 * r) * (y_i - y_j)) <= tol:
        return False
    z = hidden_preactivations(net, np.vstack([xi, xj]))
    return all(np.all(np.abs(zz) > tol) for zz in z)


def check_pair_gradient(rng):
    while True:
        net, xi, xj, r = random_pair_instance(rng)
        t = float(rng.uniform(0.5, 3.0))
        if _away_from_kinks(net, xi, xj, r, t):
            break
    _, analytic = pair_loss_and_grad(net, xi, xj, r, t)
    numeric = central_differences(net, lambda: pair_loss_and_grad(net, xi, xj, r, t)[0])
    return max_relative_error(analytic, numeric)


def test_pair_gradient_finite_differences():
    rng = np.random.default_rng(2024)
    errors = [check_pair_gradient(rng) for _ in range(30)]
    assert max(errors) <= 1e-4


def check_ce_gradient(rng):
    C = int(rng.integers(2, 6))
    d = int(rng.integers(2, 8))
    hidden = [int(h) for h in rng.integers(1, 6, size=int(rng.integers(0, 3)))]
    while True:
        net = init_frame_net(NetConfig(d, hidden, ["relu", "tanh"][int(rng.integers(2))], int(rng.integers(1 << 30))), C)
        B = int(rng.integers(1, 5))
        X = rng.normal(size=(B, d))
        y = rng.integers(0, C, size=B)
        if all(np.all(np.abs(z) > 1e-3) for z in hidden_preactivations(net, X)):
            break
    _, analytic = cross_entropy_loss_and_grad(net, X, y)
    numeric = central_differences(net, lambda: float(np.mean(cross_entropy_loss_and_grad(net, X, y)[0])))
    return max_relative_error(analytic, numeric)


def test_cross_entropy_gradient_finite_differences():
    rng = np.random.default_rng(77)
    errors = [check_ce_gradient(rng) for _ in range(30)]
    assert max(errors) <= 1e-4


def test_loss_nonnegative_and_zero_means_margin():
    rng = np.random.default_rng(5)
    for _ in range(200):
        net, xi, xj, r = random_pair_instance(rng)
        t = float(rng.uniform(0.1, 2.0))
        loss, _ = pair_loss_and_grad(net, xi, xj, r, t)
        assert loss >= 0
        if loss == 0:
            assert (1 - 2 * r) * (forward(net, xi) - forward(net, xj)) >= t


def test_swap_and_flip_is_symmetric():
    rng = np.random.default_rng(6)
    for _ in range(200):
        net, xi, xj, r = random_pair_instance(rng)
        a = pair_loss_and_grad(net, xi, xj, r, 1.0)[0]
        b = pair_loss_and_grad(net, xj, xi, 1 - r, 1.0)[0]
        assert a == b


def test_nonpositive_margin_rejected():
    net, xi, xj = _net_with_outputs(0.0, 1.0)
    with pytest.raises(ConfigError):
        pair_loss_and_grad(net, xi, xj, 1, t=0.0)


def test_score_video_matches_forward():
    ds = make_dataset([[0, 1, 2, 3, 4]], d=4)
    net = init_rank_net(NetConfig(4, [6, 3], seed=1))
    v = ds.videos[0]
    scores = score_video(net, v)
    assert len(scores) == len(v)
    np.testing.assert_allclose(scores, [forward(net, f.features) for f in v.frames], rtol=1e-13, atol=1e-13)


def test_score_constant_video():
    ds = make_dataset([[0, 1, 2]], d=3)
    for f in ds.videos[0].frames:
        f.features[:] = [0.5, -1.0, 2.0]
    scores = score_video(init_rank_net(NetConfig(3, [4], seed=2)), ds.videos[0])
    assert np.all(scores == scores[0])


def test_softmax_rows_sum_to_one():
    rng = np.random.default_rng(0)
    p = softmax(rng.normal(scale=50, size=(100, 5)))
    assert np.all(p >= 0)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    net = init_rank_net(NetConfig(5, [4, 3], "tanh", 3))
    for layer in net.layers:
        layer.biases[:] = rng.normal(size=layer.biases.shape)
    save_net(net, tmp_path / "r.json")
    back = load_net(tmp_path / "r.json")
    X = rng.normal(size=(100, 5))
    assert np.max(np.abs(back.score(X) - net.score(X))) == 0.0
    assert np.array_equal(flat_params(back), flat_params(net))


def test_load_rejects_unknown_version(tmp_path):
    net = init_rank_net(NetConfig(2, [2]))
    doc = net.to_dict()
    doc["format_version"] = 99
    (tmp_path / "m.json").write_text(json.dumps(doc))
    with pytest.raises(DataError, match="format_version"):
        load_net(tmp_path / "m.json")


def test_load_rejects_truncated(tmp_path):
    net = init_rank_net(NetConfig(2, [2]))
    save_net(net, tmp_path / "m.json")
    text = (tmp_path / "m.json").read_text()
    (tmp_path / "m.json").write_text(text[: len(text) // 2])
    with pytest.raises(DataError):
        load_net(tmp_path / "m.json")


def test_load_rejects_wrong_kind(tmp_path):
    net = init_frame_net(NetConfig(2, [2]), 3)
    save_net(net, tmp_path / "m.json")
    with pytest.raises(DataError, match="kind"):
        load_net(tmp_path / "m.json")


def test_load_rejects_shape_mismatch(tmp_path):
    doc = init_rank_net(NetConfig(3, [2])).to_dict()
    doc["layers"][0]["weights"] = doc["layers"][0]["weights"][:-1]
    (tmp_path / "m.json").write_text(json.dumps(doc))
    with pytest.raises(DataError):
        load_net(tmp_path / "m.json")
