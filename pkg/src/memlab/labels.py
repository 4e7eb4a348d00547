"""Memorability-score binning: interpolated percentiles, thresholds, and
three-class labels.

Percentile interpolation runs in exact rational arithmetic and rounds once
to float, which makes it order-exact: monotone in p, invariant to input
permutation, and exactly antisymmetric under negation (used by the paired
delta statistics).
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .errors import ContractError, ParameterError


class MemClass(enum.IntEnum):
    LOW = 0
    MED = 1
    HIGH = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, s: str) -> "MemClass":
        return cls[s.strip().upper()]


@dataclass(frozen=True)
class SplitSpec:
    """Low/mid/high fractions; mid is implicit (1 - low - high)."""

    low_frac: float
    high_frac: float

    def __post_init__(self):
        if self.low_frac <= 0 or self.high_frac <= 0:
            raise ParameterError("split fractions must be positive")
        if self.low_frac + self.high_frac >= 1:
            raise ParameterError("low_frac + high_frac must be < 1")


@dataclass(frozen=True)
class Thresholds:
    t_low: float
    t_high: float

    def __post_init__(self):
        if self.t_low > self.t_high:
            raise ContractError("t_low must be <= t_high")


def validate_score(value: float) -> float:
    v = float(value)
    if not 0.0 <= v <= 1.0:
        raise ParameterError(f"score {v} outside [0, 1]")
    return v


def percentile(values: Sequence[float], p: float) -> float:
    """Linear interpolation between closest ranks on the sorted list.

    rank = p/100 * (n-1); fractional ranks interpolate between neighbors.
    """
    if not 0.0 <= p <= 100.0:
        raise ParameterError(f"percentile must be in [0, 100], got {p}")
    data = sorted(float(v) for v in values)
    if not data:
        raise ContractError("percentile of an empty list")
    rank = Fraction(p) * (len(data) - 1) / 100
    i = int(rank)
    t = rank - i
    if t == 0:
        return data[i]
    lo, hi = Fraction(data[i]), Fraction(data[i + 1])
    return float(lo + t * (hi - lo))


def compute_thresholds(scores: Sequence[float], split: SplitSpec) -> Thresholds:
    if not scores:
        raise ContractError("cannot compute thresholds of an empty score list")
    return Thresholds(
        t_low=percentile(scores, 100.0 * split.low_frac),
        t_high=percentile(scores, 100.0 * (1.0 - split.high_frac)),
    )


def classify(score: float, t: Thresholds) -> MemClass:
    """Lower bound inclusive to the upper class: score >= t_high is HIGH."""
    if score >= t.t_high:
        return MemClass.HIGH
    if score < t.t_low:
        return MemClass.LOW
    return MemClass.MED


def bin_dataset(scores: Mapping[str, float],
                split: SplitSpec) -> tuple[dict[str, tuple[float, MemClass]], Thresholds]:
    """Threshold on the full table, then classify every entry.

    If all scores are identical the thresholds coincide and everything is
    HIGH (the >= t_high rule), rather than erroring.
    """
    if not scores:
        raise ContractError("cannot bin an empty score table")
    thresholds = compute_thresholds(list(scores.values()), split)
    labeled = {k: (v, classify(v, thresholds)) for k, v in scores.items()}
    return labeled, thresholds


def quantile_bins(scores: Mapping[str, float], k: int) -> dict[str, int]:
    """Generalized k-class variant: equal-mass quantile split, classes 0..k-1."""
    if k < 2:
        raise ParameterError("need at least 2 classes")
    if not scores:
        raise ContractError("cannot bin an empty score table")
    values = list(scores.values())
    cuts = [percentile(values, 100.0 * i / k) for i in range(1, k)]
    out = {}
    for key, v in scores.items():
        cls = 0
        for cut in cuts:
            if v >= cut:
                cls += 1
        out[key] = min(cls, k - 1)
    return out


LABEL_CSV_HEADER = "image_id,score,class"


def save_label_csv(labeled: Mapping[str, tuple[float, MemClass]],
                   thresholds: Thresholds, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# thresholds: t_low={thresholds.t_low!r} t_high={thresholds.t_high!r}\n")
        fh.write(LABEL_CSV_HEADER + "\n")
        for image_id in sorted(labeled):
            score, cls = labeled[image_id]
            fh.write(f"{image_id},{score!r},{cls.label}\n")


def load_label_csv(path) -> dict[str, tuple[float, MemClass]]:
    out: dict[str, tuple[float, MemClass]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        data_lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(data_lines)
    if reader.fieldnames != ["image_id", "score", "class"]:
        raise ContractError(f"bad label CSV header in {path}")
    for row in reader:
        out[row["image_id"]] = (validate_score(row["score"]),
                                MemClass.from_label(row["class"]))
    return out
