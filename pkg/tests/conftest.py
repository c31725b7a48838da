import json

import numpy as np
import pytest

from aurank.data import AULabelSpec, Dataset, FrameRecord, VideoSequence

ACCEPTANCE_LINES = []


def make_dataset(label_lists, d=4, au="AU4", level_count=6, seed=0):
    """One video per label list, random features."""
    rng = np.random.default_rng(seed)
    spec = AULabelSpec((au,), level_count)
    videos = []
    for k, labels in enumerate(label_lists):
        vid = f"v{k}"
        frames = [FrameRecord(vid, i, rng.normal(size=d), {au: int(y)}) for i, y in enumerate(labels)]
        videos.append(VideoSequence(vid, frames))
    return Dataset(spec, videos, d)


def write_records(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write((rec if isinstance(rec, str) else json.dumps(rec)) + "\n")
    return path


def flat_params(net):
    return np.concatenate([p.ravel() for p in net.parameters()])


def central_differences(net, loss_fn, h=1e-5):
    """Numerical gradient of ``loss_fn()`` w.r.t. every parameter, in parameters() order."""
    grads = []
    for p in net.parameters():
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            orig = p[idx]
            p[idx] = orig + h
            up = loss_fn()
            p[idx] = orig - h
            down = loss_fn()
            p[idx] = orig
            g[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric, floor=1e-6):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def hidden_preactivations(net, X):
    _, cache = net.forward_cache(X)
    return [z for (_, z, _), layer in zip(cache, net.layers) if layer.activation == "relu"]


@pytest.fixture
def tiny_dataset():
    return make_dataset([[0, 1, 2], [2, 2, 0]], d=4)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
