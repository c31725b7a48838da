import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aurank.errors import ConfigError, DataError
from aurank.variation import (
    VariationConfig,
    extract_variation,
    fit_bins,
    fit_variation,
    histogram,
    percentile,
    percentiles,
)

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
value_lists = st.lists(finite, min_size=1, max_size=60)


def test_constant_sequence():
    for p in (0, 12.5, 50, 99, 100):
        assert percentile([5, 5, 5], p) == 5.0


def test_hand_interpolation():
    assert percentile(list(range(11)), 10) == 1.0
    assert percentile([1.0, 3.0], 50) == 2.0
    assert percentile([4.0, 0.0, 2.0, 1.0], 50) == 1.5  # sorted 0 1 2 4, q = 1.5


@given(value_lists)
def test_endpoints(values):
    assert percentile(values, 0) == min(values)
    assert percentile(values, 100) == max(values)


@given(value_lists, st.floats(0, 100))
def test_matches_numpy_linear(values, p):
    assert percentile(values, p) == pytest.approx(float(np.percentile(values, p)), rel=1e-12, abs=1e-9)


def test_percentile_errors():
    with pytest.raises(DataError):
        percentile([], 50)
    with pytest.raises(DataError):
        percentile([1.0], 101)
    with pytest.raises(DataError):
        percentile([1.0, float("nan")], 50)


@given(value_lists, st.floats(0, 100), st.floats(0, 100))
def test_monotone_in_p(values, p, q):
    lo, hi = sorted((p, q))
    assert percentile(values, lo) <= percentile(values, hi)


@given(value_lists, st.floats(-1e3, 1e3), st.floats(0, 100))
def test_shift_equivariance(values, c, p):
    shifted = [v + c for v in values]
    scale = max(abs(v) for v in values) + abs(c) + 1
    assert percentile(shifted, p) == pytest.approx(percentile(values, p) + c, abs=1e-12 * scale)


def test_fit_bins_equal_width():
    np.testing.assert_array_equal(fit_bins(np.linspace(0, 10, 37), 10), np.arange(11.0))
    np.testing.assert_array_equal(fit_bins([-1.0, 0.3, 1.0], 2), [-1.0, 0.0, 1.0])


def test_fit_bins_constant_rejected():
    with pytest.raises(DataError, match="1e-6"):
        fit_bins([2.0, 2.0, 2.0], 4)


def test_half_open_bins():
    np.testing.assert_allclose(histogram([0.1, 0.5, 0.9], [0.0, 0.5, 1.0]), [1 / 3, 2 / 3])


def test_last_bin_closed_and_clamping():
    edges = [0.0, 1.0, 2.0]
    np.testing.assert_array_equal(histogram([2.0], edges), [0.0, 1.0])
    np.testing.assert_array_equal(histogram([-5.0, 7.0], edges), [0.5, 0.5])


def test_constant_list_one_hot():
    cfg = VariationConfig((0, 50, 100), 4, np.array([0.0, 1.0, 2.0, 3.0, 4.0]))
    feat = extract_variation([2.5] * 7, cfg)
    np.testing.assert_array_equal(feat.frequencies, [0, 0, 1, 0])
    np.testing.assert_array_equal(feat.percentiles, [2.5, 2.5, 2.5])


@settings(max_examples=300)
@given(value_lists, st.integers(1, 20))
def test_frequencies_normalized(values, bins):
    edges = np.linspace(-1e5, 1e5, bins + 1)
    freq = histogram(values, edges)
    assert math.fsum(freq.tolist()) == 1.0
    assert np.all(freq >= 0) and np.all(freq <= 1)


@given(value_lists, st.randoms(use_true_random=False))
def test_permutation_invariance(values, rnd):
    cfg = VariationConfig(bin_count=5, bin_edges=np.linspace(-1e6, 1e6, 6))
    shuffled = list(values)
    rnd.shuffle(shuffled)
    a, b = extract_variation(values, cfg), extract_variation(shuffled, cfg)
    assert np.array_equal(a.percentiles, b.percentiles)
    assert np.array_equal(a.frequencies, b.frequencies)


def test_default_config_shape():
    cfg = fit_variation(np.linspace(-2, 3, 50), VariationConfig())
    assert cfg.percentile_points == tuple(float(p) for p in range(0, 101, 10))
    feat = extract_variation(np.random.default_rng(0).normal(size=30), cfg)
    assert feat.percentiles.shape == (11,) and feat.frequencies.shape == (10,)
    assert np.all(np.diff(feat.percentiles) >= 0)


def test_unfitted_config_rejected():
    with pytest.raises(ConfigError):
        extract_variation([1.0], VariationConfig())


@pytest.mark.parametrize("points", [(), (50, 10), (-1, 50), (0, 101)])
def test_bad_percentile_points(points):
    with pytest.raises(ConfigError):
        VariationConfig(points)


def test_config_dict_round_trip():
    cfg = fit_variation([0.0, 0.7, 3.1], VariationConfig((0, 25, 100), 3))
    back = VariationConfig.from_dict(cfg.to_dict())
    assert back.percentile_points == cfg.percentile_points
    assert np.array_equal(back.bin_edges, cfg.bin_edges)


def test_vectorized_points_match_scalar():
    rng = np.random.default_rng(1)
    v = rng.normal(size=23)
    pts = [0, 5, 33.3, 50, 99.9, 100]
    assert percentiles(v, pts).tolist() == [percentile(v, p) for p in pts]
