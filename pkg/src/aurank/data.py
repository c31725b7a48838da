"""Videos, frames and AU labels, plus the newline-delimited frame-record format.

Each line of a frame-record file is a JSON object::

    {"video": "v03", "frame": 17, "features": [0.12, ...], "labels": {"AU4": 1}}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class AULabelSpec:
    au_names: tuple[str, ...]
    level_count: int = 2

    def __post_init__(self):
        object.__setattr__(self, "au_names", tuple(self.au_names))
        if not self.au_names:
            raise DataError("au_names must be non-empty")
        if len(set(self.au_names)) != len(self.au_names):
            raise DataError(f"au_names must be unique: {list(self.au_names)}")
        if self.level_count < 2:
            raise DataError(f"level_count must be >= 2, got {self.level_count}")


@dataclass(frozen=True)
class FrameRecord:
    video_id: str
    frame_index: int
    features: np.ndarray
    labels: dict[str, int]

    def __eq__(self, other):
        if not isinstance(other, FrameRecord):
            return NotImplemented
        return (
            self.video_id == other.video_id
            and self.frame_index == other.frame_index
            and np.array_equal(self.features, other.features)
            and self.labels == other.labels
        )

    __hash__ = None


@dataclass(frozen=True)
class VideoSequence:
    video_id: str
    frames: tuple[FrameRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if not self.frames:
            raise DataError(f"video {self.video_id!r} has no frames")
        idx = [f.frame_index for f in self.frames]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise DataError(f"video {self.video_id!r}: frame_index not strictly increasing")

    def __len__(self):
        return len(self.frames)

    def feature_matrix(self) -> np.ndarray:
        """Stack frame features into an (N, d) array."""
        return np.stack([f.features for f in self.frames])

    def label_vector(self, au_name: str) -> np.ndarray:
        return np.array([f.labels[au_name] for f in self.frames], dtype=np.int64)


@dataclass(frozen=True)
class Dataset:
    spec: AULabelSpec
    videos: tuple[VideoSequence, ...]
    d: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, "videos", tuple(self.videos))
        if not self.videos:
            raise DataError("empty dataset")
        ids = [v.video_id for v in self.videos]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate video_id in dataset")
        d = self.d or len(self.videos[0].frames[0].features)
        object.__setattr__(self, "d", d)
        names = set(self.spec.au_names)
        for v in self.videos:
            for f in v.frames:
                _check_frame(f, d, self.spec, names)

    @property
    def n(self) -> int:
        return sum(len(v) for v in self.videos)

    @property
    def video_ids(self) -> list[str]:
        return [v.video_id for v in self.videos]

    def video(self, video_id: str) -> VideoSequence:
        for v in self.videos:
            if v.video_id == video_id:
                return v
        raise KeyError(video_id)

    def subset(self, video_ids) -> "Dataset":
        keep = set(video_ids)
        return Dataset(self.spec, [v for v in self.videos if v.video_id in keep], self.d)

    def frames(self):
        for v in self.videos:
            yield from v.frames


def _check_frame(f: FrameRecord, d: int, spec: AULabelSpec, names: set[str]) -> None:
    if len(f.features) != d:
        raise DataError(
            f"feature-length mismatch in video {f.video_id!r} frame {f.frame_index}: "
            f"expected {d}, got {len(f.features)}"
        )
    if set(f.labels) != names:
        raise DataError(
            f"labels of video {f.video_id!r} frame {f.frame_index} must cover exactly "
            f"{sorted(names)}, got {sorted(f.labels)}"
        )
    for au, level in f.labels.items():
        if not 0 <= level < spec.level_count:
            raise DataError(
                f"label {au}={level} out of [0, {spec.level_count - 1}] "
                f"in video {f.video_id!r} frame {f.frame_index}"
            )


def _parse_line(line: str, lineno: int, spec: AULabelSpec) -> FrameRecord:
    try:
        rec = json.loads(line)
        video = rec["video"]
        frame = rec["frame"]
        feats = rec["features"]
        labels = rec["labels"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DataError(f"malformed record at line {lineno}: {exc}") from None
    if not isinstance(video, str) or isinstance(frame, bool) or not isinstance(frame, int):
        raise DataError(f"malformed record at line {lineno}: bad video/frame field")
    if frame < 0:
        raise DataError(f"malformed record at line {lineno}: negative frame index")
    if not isinstance(feats, list) or not isinstance(labels, dict):
        raise DataError(f"malformed record at line {lineno}: bad features/labels field")
    try:
        x = np.array(feats, dtype=np.float64)
    except (TypeError, ValueError):
        raise DataError(f"malformed record at line {lineno}: non-numeric features") from None
    if x.ndim != 1 or not np.all(np.isfinite(x)):
        raise DataError(f"malformed record at line {lineno}: features must be finite reals")
    if any(isinstance(v, bool) or not isinstance(v, int) for v in labels.values()):
        raise DataError(f"malformed record at line {lineno}: labels must be integers")
    if set(labels) != set(spec.au_names):
        raise DataError(
            f"labels at line {lineno} must cover exactly {sorted(spec.au_names)}, got {sorted(labels)}"
        )
    for au, level in labels.items():
        if not 0 <= level < spec.level_count:
            raise DataError(f"label {au}={level} out of [0, {spec.level_count - 1}] at line {lineno}")
    return FrameRecord(video, frame, x, dict(labels))


def load_dataset(path, spec: AULabelSpec) -> Dataset:
    """Read a frame-record file, grouping frames by video and sorting by frame index."""
    by_video: dict[str, list[FrameRecord]] = {}
    seen: set[tuple[str, int]] = set()
    d = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = _parse_line(line, lineno, spec)
            if d is None:
                d = len(rec.features)
                if d == 0:
                    raise DataError(f"empty feature vector at line {lineno}")
            elif len(rec.features) != d:
                raise DataError(
                    f"feature-length mismatch at line {lineno}: expected {d}, got {len(rec.features)}"
                )
            key = (rec.video_id, rec.frame_index)
            if key in seen:
                raise DataError(f"duplicate (video, frame) {key} at line {lineno}")
            seen.add(key)
            by_video.setdefault(rec.video_id, []).append(rec)
    if d is None:
        raise DataError("empty dataset")
    videos = [
        VideoSequence(vid, sorted(frames, key=lambda f: f.frame_index))
        for vid, frames in by_video.items()
    ]
    return Dataset(spec, videos, d)


def frame_record_line(f: FrameRecord) -> str:
    # json emits repr() floats, which round-trip exactly
    return json.dumps(
        {
            "video": f.video_id,
            "frame": int(f.frame_index),
            "features": [float(v) for v in f.features],
            "labels": {k: int(v) for k, v in f.labels.items()},
        }
    )


def save_dataset(dataset: Dataset, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for f in dataset.frames():
            fh.write(frame_record_line(f) + "\n")


def split_by_video(dataset: Dataset, holdout_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Video-level train/validation split; the validation side gets at least one video."""
    if not 0.0 < holdout_fraction < 1.0:
        raise DataError(f"holdout_fraction must be in (0, 1), got {holdout_fraction}")
    count = len(dataset.videos)
    if count < 2:
        raise DataError(f"split_by_video needs at least 2 videos, got {count}")
    n_val = min(max(1, round(holdout_fraction * count)), count - 1)
    order = np.random.default_rng(seed).permutation(count)
    val_idx = set(order[:n_val].tolist())
    train = [v for i, v in enumerate(dataset.videos) if i not in val_idx]
    val = [v for i, v in enumerate(dataset.videos) if i in val_idx]
    return Dataset(dataset.spec, train, dataset.d), Dataset(dataset.spec, val, dataset.d)
