"""Variation-range summary of a video's pseudo-intensities.

A video is summarized by percentiles of its scores and a normalized histogram
over bin edges fitted once on the training set. The summary ignores frame
order, so it depends only on the multiset of scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

DEFAULT_PERCENTILES = tuple(float(p) for p in range(0, 101, 10))


@dataclass(frozen=True)
class VariationFeature:
    percentiles: np.ndarray
    frequencies: np.ndarray

    def vector(self) -> np.ndarray:
        return np.concatenate([self.percentiles, self.frequencies])


@dataclass
class VariationConfig:
    percentile_points: tuple[float, ...] = DEFAULT_PERCENTILES
    bin_count: int = 10
    bin_edges: np.ndarray | None = None

    def __post_init__(self):
        self.percentile_points = tuple(float(p) for p in self.percentile_points)
        pts = np.asarray(self.percentile_points)
        if pts.size == 0 or np.any(pts < 0) or np.any(pts > 100) or np.any(np.diff(pts) <= 0):
            raise ConfigError(f"percentile points must be strictly increasing in [0, 100]: {self.percentile_points}")
        if self.bin_count < 1:
            raise ConfigError(f"bin_count must be >= 1, got {self.bin_count}")
        if self.bin_edges is not None:
            edges = np.asarray(self.bin_edges, dtype=np.float64)
            if edges.shape != (self.bin_count + 1,) or np.any(np.diff(edges) <= 0):
                raise ConfigError(f"bin_edges must be {self.bin_count + 1} strictly increasing values")
            self.bin_edges = edges

    @property
    def fitted(self) -> bool:
        return self.bin_edges is not None

    @property
    def feature_dim(self) -> int:
        return len(self.percentile_points) + self.bin_count

    def to_dict(self) -> dict:
        return {
            "percentile_points": list(self.percentile_points),
            "bin_count": self.bin_count,
            "bin_edges": None if self.bin_edges is None else [float(e) for e in self.bin_edges],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "VariationConfig":
        edges = doc.get("bin_edges")
        return cls(
            percentile_points=tuple(doc["percentile_points"]),
            bin_count=int(doc["bin_count"]),
            bin_edges=None if edges is None else np.array(edges, dtype=np.float64),
        )


def _as_values(values) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise DataError("percentile of an empty list")
    if not np.all(np.isfinite(v)):
        raise DataError("values must be finite")
    return v


def percentiles(values, points) -> np.ndarray:
    """Linear-interpolation percentiles on (n - 1) spacing of the sorted values."""
    v = np.sort(_as_values(values))
    p = np.asarray(points, dtype=np.float64)
    if np.any(p < 0) or np.any(p > 100):
        raise DataError(f"percentile points must lie in [0, 100], got {points}")
    q = p / 100.0 * (v.size - 1)
    lo = np.floor(q).astype(np.int64)
    hi = np.ceil(q).astype(np.int64)
    frac = q - lo
    # lo + frac * (hi - lo) keeps exact endpoints and constant inputs exact
    return v[lo] + frac * (v[hi] - v[lo])


def percentile(values, p: float) -> float:
    return float(percentiles(values, [p])[0])


def fit_bins(training_pseudo, bin_count: int) -> np.ndarray:
    """Equal-width edges from the global min to the global max of the training scores."""
    v = _as_values(training_pseudo)
    if bin_count < 1:
        raise ConfigError(f"bin_count must be >= 1, got {bin_count}")
    lo, hi = float(v.min()), float(v.max())
    if not hi > lo:
        raise DataError(
            f"all pseudo-intensities equal {lo!r}; widen the range by eps=1e-6 before fitting bins"
        )
    edges = lo + (hi - lo) * np.arange(bin_count + 1) / bin_count
    edges[-1] = hi
    return edges


def fit_variation(training_pseudo, config: VariationConfig) -> VariationConfig:
    """Copy of ``config`` with bin edges fitted to the training scores."""
    return VariationConfig(config.percentile_points, config.bin_count, fit_bins(training_pseudo, config.bin_count))


def histogram(values, edges) -> np.ndarray:
    """Bin proportions: [f_{b-1}, f_b) with the last bin closed; out-of-range values clamp to the end bins.

    The largest bin absorbs the rounding residual so the exactly-rounded sum
    (``math.fsum``) of the result is 1.0.
    """
    v = _as_values(values)
    edges = np.asarray(edges, dtype=np.float64)
    B = edges.size - 1
    idx = np.clip(np.searchsorted(edges, v, side="right") - 1, 0, B - 1)
    counts = np.bincount(idx, minlength=B)
    freq = counts / v.size
    k = int(np.argmax(counts))
    freq[k] = 0.0
    freq[k] = 1.0 - math.fsum(freq.tolist())
    # 1.0 - s can round when s < 0.5; step the absorbing bin by ulps until exact
    for _ in range(8):
        total = math.fsum(freq.tolist())
        if total == 1.0:
            break
        freq[k] = np.nextafter(freq[k], 2.0 if total < 1.0 else 0.0)
    return freq


def extract_variation(pseudo, config: VariationConfig) -> VariationFeature:
    if not config.fitted:
        raise ConfigError("VariationConfig has no bin edges; call fit_variation first")
    v = _as_values(pseudo)
    return VariationFeature(percentiles(v, config.percentile_points), histogram(v, config.bin_edges))
