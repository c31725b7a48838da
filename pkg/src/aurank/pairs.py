"""Within-video ranking pairs for the pseudo-intensity scorer."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset
from .errors import DataError


@dataclass(frozen=True)
class PairSample:
    video_id: str
    i: int
    j: int
    r: int


@dataclass(frozen=True)
class PairDataset:
    au_name: str
    pairs: tuple[PairSample, ...]

    @property
    def m(self) -> int:
        return len(self.pairs)

    def __len__(self):
        return len(self.pairs)


def pair_label(y_i: int, y_j: int) -> int | None:
    """1 if the first frame is less intense, 0 if more, None for a tie."""
    if y_i < y_j:
        return 1
    if y_i > y_j:
        return 0
    return None


def eligible_pairs(labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Positions (a, b), a < b, of all frame pairs with distinct labels."""
    a, b = np.triu_indices(len(labels), k=1)
    keep = labels[a] != labels[b]
    return a[keep], b[keep]


def build_pair_dataset(dataset: Dataset, au_name: str, m: int, seed: int) -> PairDataset:
    """Sample ``min(m, available)`` strictly-ordered pairs, never crossing videos.

    Pairs are drawn uniformly without replacement from the pool of all eligible
    within-video pairs, which picks each video with probability proportional to
    its remaining eligible count. Each pair's orientation is a fair coin flip.
    """
    if m < 1:
        raise DataError(f"m must be >= 1, got {m}")
    if au_name not in dataset.spec.au_names:
        raise DataError(f"unknown AU {au_name!r}")
    per_video = []
    for v in dataset.videos:
        labels = v.label_vector(au_name)
        a, b = eligible_pairs(labels)
        per_video.append((v, labels, a, b))
    counts = np.array([len(a) for _, _, a, _ in per_video], dtype=np.int64)
    total = int(counts.sum())
    if total == 0:
        raise DataError(f"no eligible pair for AU {au_name!r}: every video has constant labels")

    rng = np.random.default_rng(seed)
    take = min(m, total)
    chosen = np.sort(rng.choice(total, size=take, replace=False)) if take < total else np.arange(total)
    flips = rng.random(take) < 0.5
    offsets = np.concatenate([[0], np.cumsum(counts)])
    owner = np.searchsorted(offsets, chosen, side="right") - 1

    pairs = []
    for k, (g, vi) in enumerate(zip(chosen, owner)):
        v, labels, a, b = per_video[vi]
        local = g - offsets[vi]
        p, q = int(a[local]), int(b[local])
        if flips[k]:
            p, q = q, p
        r = pair_label(labels[p], labels[q])
        pairs.append(PairSample(v.video_id, v.frames[p].frame_index, v.frames[q].frame_index, r))
    order = rng.permutation(take)
    return PairDataset(au_name, tuple(pairs[k] for k in order))


def pair_arrays(pairs: PairDataset, dataset: Dataset) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Materialize (X_i, X_j, r) arrays for training."""
    lookup = {}
    for v in dataset.videos:
        for f in v.frames:
            lookup[(v.video_id, f.frame_index)] = f.features
    try:
        xi = np.stack([lookup[(p.video_id, p.i)] for p in pairs.pairs])
        xj = np.stack([lookup[(p.video_id, p.j)] for p in pairs.pairs])
    except KeyError as exc:
        raise DataError(f"pair references missing frame {exc.args[0]}") from None
    r = np.array([p.r for p in pairs.pairs], dtype=np.float64)
    return xi, xj, r


def save_pairs(pairs: PairDataset, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs.pairs:
            fh.write(json.dumps({"au": pairs.au_name, "video": p.video_id, "i": p.i, "j": p.j, "r": p.r}) + "\n")


def load_pairs(path) -> PairDataset:
    au = None
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                sample = PairSample(str(rec["video"]), int(rec["i"]), int(rec["j"]), int(rec["r"]))
                rec_au = str(rec["au"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"malformed pair record at line {lineno}: {exc}") from None
            if au is None:
                au = rec_au
            elif rec_au != au:
                raise DataError(f"mixed AUs in pair file at line {lineno}")
            if sample.r not in (0, 1) or sample.i == sample.j:
                raise DataError(f"invalid pair at line {lineno}")
            out.append(sample)
    if au is None:
        raise DataError("empty pair file")
    return PairDataset(au, tuple(out))
