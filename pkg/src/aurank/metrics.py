"""Competition score (mean F1 and pooled accuracy) and Kendall tau diagnostics."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DataError


def _binary(a, name) -> np.ndarray:
    arr = np.asarray(a)
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise DataError(f"{name} must be binary (0/1)")
    return arr.astype(np.int64)


def f1_binary(pred, truth) -> float:
    """Positive-class F1; 0.0 when there are neither predicted nor actual positives."""
    p = _binary(pred, "pred").ravel()
    t = _binary(truth, "truth").ravel()
    if p.shape != t.shape:
        raise DataError(f"length mismatch: {p.size} predictions vs {t.size} truths")
    if p.size == 0:
        raise DataError("f1 of empty input")
    tp = int(np.sum((p == 1) & (t == 1)))
    fp = int(np.sum((p == 1) & (t == 0)))
    fn = int(np.sum((p == 0) & (t == 1)))
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 else 2 * tp / denom


def competition_metric(mean_f1: float, total_accuracy: float) -> float:
    return 0.5 * mean_f1 + 0.5 * total_accuracy


@dataclass
class EvalReport:
    per_au_f1: dict[str, float]
    mean_f1: float
    total_accuracy: float
    competition_metric: float
    support: dict[str, int]
    decisions: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def summary(self) -> str:
        """Flat key=value lines."""
        lines = [
            f"mean_f1={self.mean_f1!r}",
            f"total_accuracy={self.total_accuracy!r}",
            f"competition_metric={self.competition_metric!r}",
            f"decisions={self.decisions}",
        ]
        for au in sorted(self.per_au_f1):
            lines.append(f"f1.{au}={self.per_au_f1[au]!r}")
            lines.append(f"support.{au}={self.support[au]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dict(cls, doc) -> "EvalReport":
        return cls(**doc)


def evaluate(predictions, truths, au_names=None) -> EvalReport:
    """Score (frames x AUs) binary decisions.

    Mean F1 is the unweighted mean over AU columns; accuracy pools every
    (frame, AU) decision.
    """
    p = _binary(predictions, "predictions")
    t = _binary(truths, "truths")
    if p.ndim == 1:
        p = p[:, None]
    if t.ndim == 1:
        t = t[:, None]
    if p.shape != t.shape or p.ndim != 2:
        raise DataError(f"shape mismatch: predictions {p.shape} vs truths {t.shape}")
    if p.size == 0:
        raise DataError("nothing to evaluate")
    names = list(au_names) if au_names is not None else [f"au{k}" for k in range(p.shape[1])]
    if len(names) != p.shape[1]:
        raise DataError(f"{len(names)} AU names for {p.shape[1]} columns")
    per_au = {au: f1_binary(p[:, k], t[:, k]) for k, au in enumerate(names)}
    support = {au: int(t[:, k].sum()) for k, au in enumerate(names)}
    mean_f1 = float(np.mean([per_au[au] for au in names]))
    acc = int(np.sum(p == t)) / p.size
    return EvalReport(per_au, mean_f1, acc, competition_metric(mean_f1, acc), support, int(p.size))


def kendall_tau(a, b) -> float:
    """(concordant - discordant) / (concordant + discordant); pairs tied in either list are skipped."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DataError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise DataError("kendall_tau needs at least 2 values")
    i, j = np.triu_indices(a.size, k=1)
    s = np.sign(a[i] - a[j]) * np.sign(b[i] - b[j])
    concordant = int(np.sum(s > 0))
    discordant = int(np.sum(s < 0))
    if concordant + discordant == 0:
        raise DataError("kendall_tau undefined: all pairs tied")
    return (concordant - discordant) / (concordant + discordant)
