"""Entropy / information-gain feature ranking."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping, Optional, Sequence

import numpy as np

from .errors import AllZeroCounts, UnknownFeature


def entropy(class_counts: Sequence[int]) -> float:
    """Shannon entropy in bits of a class-count vector."""
    counts = list(class_counts)
    if any(c < 0 for c in counts):
        raise ValueError(f"negative class count in {counts}")
    total = sum(counts)
    if total <= 0:
        raise AllZeroCounts("entropy needs at least one positive count")
    h = 0.0
    for c in counts:
        if c:
            p = c / total
            h -= p * math.log2(p)
    return max(h, 0.0)


def _is_missing(v) -> bool:
    return v is None or (isinstance(v, float) and math.isnan(v))


@dataclass(frozen=True)
class Discretizer:
    """Equal-frequency binning for continuous columns.

    Columns with no more distinct values than ``bins`` are left as they are.
    """

    bins: int = 10

    def __post_init__(self):
        if int(self.bins) != self.bins or self.bins < 2:
            raise ValueError(f"bin count must be an integer >= 2, got {self.bins}")

    def edges(self, values: np.ndarray) -> np.ndarray:
        q = np.quantile(values, np.linspace(0.0, 1.0, self.bins + 1))
        return np.unique(q)

    def transform(self, values: Sequence) -> list:
        numeric = all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
                      for v in values)
        if not numeric or len(set(values)) <= self.bins:
            return list(values)
        arr = np.asarray(values, dtype=float)
        inner = self.edges(arr)[1:-1]
        return np.searchsorted(inner, arr, side="right").tolist()


@dataclass(frozen=True)
class LabeledTable:
    """Feature columns plus one class label per row."""

    columns: Mapping[str, Sequence]
    labels: Sequence[Hashable]
    _n: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = tuple(self.labels)
        n = len(labels)
        if n < 2:
            raise ValueError("a labeled table needs at least 2 rows")
        if any(_is_missing(lbl) or lbl == "" for lbl in labels):
            raise ValueError("class labels must be non-empty")
        cols = {}
        for name, col in self.columns.items():
            col = tuple(col)
            if len(col) != n:
                raise ValueError(f"column {name!r} has {len(col)} rows, labels have {n}")
            cols[name] = col
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_n", n)

    def __len__(self):
        return self._n

    @property
    def features(self) -> list[str]:
        return list(self.columns)


def _codes(values) -> np.ndarray:
    try:
        _, inv = np.unique(np.asarray(values), return_inverse=True)
    except TypeError:  # mixed types that numpy cannot order
        lookup: dict = {}
        inv = np.array([lookup.setdefault(v, len(lookup)) for v in values])
    return inv.ravel()


def _entropy_rows(counts: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    totals = counts.sum(axis=1, keepdims=True)
    p = np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(p), 0.0)
    return np.maximum(-terms.sum(axis=1), 0.0)


def info_gain(table: LabeledTable, feature: str, disc: Optional[Discretizer] = None) -> float:
    """Class entropy minus the value-weighted entropy left after splitting on ``feature``.

    Rows where the feature is missing are left out of this feature's score.
    """
    if feature not in table.columns:
        raise UnknownFeature(feature)
    disc = disc or Discretizer()
    pairs = [(v, lbl) for v, lbl in zip(table.columns[feature], table.labels) if not _is_missing(v)]
    if not pairs:
        return 0.0
    values = _codes(disc.transform([v for v, _ in pairs]))
    labels = _codes([lbl for _, lbl in pairs])
    n = len(labels)
    k = labels.max() + 1
    joint = np.bincount(values * k + labels, minlength=(values.max() + 1) * k).reshape(-1, k)
    base = _entropy_rows(joint.sum(axis=0, keepdims=True))[0]
    sizes = joint.sum(axis=1)
    cond = float(np.sum(sizes / n * _entropy_rows(joint)))
    return float(min(max(base - cond, 0.0), base))


def rank_features(table: LabeledTable, disc: Optional[Discretizer] = None) -> list[tuple[str, float]]:
    """All features by descending information gain, ties by name."""
    disc = disc or Discretizer()
    scores = [(name, info_gain(table, name, disc)) for name in table.columns]
    return sorted(scores, key=lambda item: (-item[1], item[0]))


def format_ranking(ranking: Sequence[tuple[str, float]], top: Optional[int] = None) -> str:
    rows = ranking[:top] if top else ranking
    width = max([len("Features")] + [len(name) for name, _ in rows])
    lines = [f"{'No.':>4}  {'Features':<{width}}  IG Values"]
    for i, (name, ig) in enumerate(rows, 1):
        lines.append(f"{i:>4}  {name:<{width}}  {ig:.7f}")
    return "\n".join(lines)
