"""Fuzzy interpolation in a vague environment (FIVE).

Each input axis gets a scaling function built from the steepness of the
partition's membership edges.  Integrating it gives a monotone "scaled
coordinate"; rules collapse to points at their core midpoints and the
conclusion is a Shepard inverse-distance blend of the rule consequents,
so observations that no rule covers still get an answer.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, RuleBaseError, ZeroDistanceConflict
from .fuzzy import InputPartition, Rule, RuleBase

DEFAULT_P = 2.0
DEFAULT_W = 2.0
DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class ScalingFunction:
    """Piecewise-constant scaling density over one universe.

    ``knots`` has one more entry than ``density``; ``density[j]`` applies on
    ``[knots[j], knots[j+1]]``.
    """

    name: str
    knots: np.ndarray
    density: np.ndarray
    cumulative: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        density = np.asarray(self.density, dtype=float)
        if knots.ndim != 1 or len(knots) < 2 or len(density) != len(knots) - 1:
            raise RuleBaseError("scaling function needs n+1 knots for n density values")
        if not np.all(np.diff(knots) > 0):
            raise RuleBaseError(f"scaling knots for {self.name!r} must be strictly increasing")
        if not np.all(density > 0) or not np.all(np.isfinite(density)):
            raise RuleBaseError(f"scaling density for {self.name!r} must be finite and positive")
        cum = np.concatenate(([0.0], np.cumsum(density * np.diff(knots))))
        for arr in (knots, density, cum):
            arr.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "density", density)
        object.__setattr__(self, "cumulative", cum)

    @property
    def lo(self) -> float:
        return float(self.knots[0])

    @property
    def hi(self) -> float:
        return float(self.knots[-1])

    @property
    def breakpoints(self) -> list[tuple[float, float]]:
        return [(float(x), float(s)) for x, s in zip(self.knots[:-1], self.density)]

    def __call__(self, x):
        """Density value at ``x`` (right-continuous at knots)."""
        idx = np.searchsorted(self.knots, x, side="right") - 1
        return self.density[np.clip(idx, 0, len(self.density) - 1)]

    def position(self, x):
        """Scaled coordinate: integral of the density from the universe start to ``x``."""
        return np.interp(x, self.knots, self.cumulative)


def scaling_density(knot_rows: np.ndarray, lo: float, hi: float, floor: float):
    """Breakpoints and per-segment density for a partition given as an (n, 4) knot array.

    On each segment the density is the steepest membership slope of any
    term there, raised to ``floor`` on plateaus and gaps.
    """
    if not hi > lo:
        raise RuleBaseError(f"zero-width universe [{lo}, {hi}]")
    if not floor > 0:
        raise RuleBaseError(f"scaling floor must be positive, got {floor}")
    rows = np.asarray(knot_rows, dtype=float).reshape(-1, 4)
    xs = np.unique(np.concatenate(([lo, hi], np.clip(rows.ravel(), lo, hi))))
    mid = (xs[:-1] + xs[1:])[:, None] / 2
    a, b, c, d = rows.T
    with np.errstate(divide="ignore"):
        rise = np.where((a < mid) & (mid < b), 1.0 / (b - a), 0.0)
        fall = np.where((c < mid) & (mid < d), 1.0 / (d - c), 0.0)
    slope = np.maximum(rise, fall).max(axis=1)
    return xs, np.maximum(slope, floor)


def derive_scaling(partition: InputPartition, floor: Optional[float] = None) -> ScalingFunction:
    """Scaling function of one partition; ``floor`` defaults to 1 / universe width."""
    lo, hi = partition.universe_lo, partition.universe_hi
    if floor is None:
        if not hi > lo:
            raise RuleBaseError(f"zero-width universe [{lo}, {hi}]")
        floor = 1.0 / (hi - lo)
    xs, s = scaling_density(partition.knot_array(), lo, hi, floor)
    return ScalingFunction(partition.name, xs, s)


def vague_distance(sf: ScalingFunction, x1: float, x2: float) -> float:
    """Integral of the scaling density between two points (clamped to the universe)."""
    p1, p2 = sf.position(np.clip([x1, x2], sf.lo, sf.hi))
    return float(abs(p2 - p1))


@dataclass(frozen=True)
class VagueEnvironment:
    scalings: tuple[ScalingFunction, ...]
    p: float = DEFAULT_P
    w: float = DEFAULT_W

    def __post_init__(self):
        object.__setattr__(self, "scalings", tuple(self.scalings))
        if not (np.isfinite(self.p) and self.p >= 1):
            raise ValueError(f"Shepard exponent p must be finite and >= 1, got {self.p}")
        if not (np.isfinite(self.w) and self.w >= 1):
            raise ValueError(f"aggregation order w must be finite and >= 1, got {self.w}")

    @classmethod
    def from_rulebase(cls, rb: RuleBase, p=DEFAULT_P, w=DEFAULT_W, floor=None):
        """One scaling per partition; ``floor=None`` uses 1/width per dimension."""
        return cls(tuple(derive_scaling(part, floor) for part in rb.partitions), p, w)

    @property
    def dims(self) -> int:
        return len(self.scalings)

    def positions(self, x: np.ndarray) -> np.ndarray:
        """Map observations (n, dims) or (dims,) into scaled coordinates."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dims:
            raise DimensionMismatch(f"{x.shape[-1]} coordinates for a {self.dims}-dimensional environment")
        cols = [sf.position(x[..., i]) for i, sf in enumerate(self.scalings)]
        return np.stack(cols, axis=-1)

    def aggregate(self, per_dim: np.ndarray) -> np.ndarray:
        return aggregate(per_dim, self.w)


def aggregate(per_dim: np.ndarray, w: float) -> np.ndarray:
    """Minkowski combination of per-dimension distances along the last axis."""
    per_dim = np.abs(per_dim)
    if w == 2:
        return np.sqrt(np.sum(per_dim * per_dim, axis=-1))
    if w == 1:
        return np.sum(per_dim, axis=-1)
    return np.sum(per_dim ** w, axis=-1) ** (1.0 / w)


@dataclass(frozen=True)
class FiveParams:
    """Engine knobs; ``floor=None`` means 1 / universe width per dimension."""

    p: float = DEFAULT_P
    w: float = DEFAULT_W
    floor: Optional[float] = None
    threshold: float = DEFAULT_THRESHOLD

    def __post_init__(self):
        if not (np.isfinite(self.p) and self.p >= 1):
            raise ValueError(f"five.p must be finite and >= 1, got {self.p}")
        if not (np.isfinite(self.w) and self.w >= 1):
            raise ValueError(f"five.w must be finite and >= 1, got {self.w}")
        if self.floor is not None and not (np.isfinite(self.floor) and self.floor > 0):
            raise ValueError(f"five.scaling_floor must be positive, got {self.floor}")

    def environment(self, rb: RuleBase) -> "VagueEnvironment":
        return VagueEnvironment.from_rulebase(rb, p=self.p, w=self.w, floor=self.floor)

    def engine(self, rb: RuleBase, strict=False) -> "FiveEngine":
        return FiveEngine(rb, self.environment(rb), self.threshold, strict)


def _check(env: VagueEnvironment, rb: RuleBase):
    if env.dims != rb.dims:
        raise DimensionMismatch(f"environment has {env.dims} dimensions, rule base {rb.dims}")


def rule_distance(env: VagueEnvironment, obs, rule: Rule, rb: RuleBase) -> float:
    """Aggregated vague distance from an observation to a rule's core-midpoint anchor."""
    _check(env, rb)
    x = rb.observation(obs)
    anchor = np.array([s.core_midpoint for s in rb.rule_sets(rule)])
    return float(env.aggregate(env.positions(x) - env.positions(anchor)))


def distance_matrix(env: VagueEnvironment, rb: RuleBase, x: np.ndarray) -> np.ndarray:
    """Distances from each (already clamped) observation to every rule, shape (n, rules)."""
    px = env.positions(np.atleast_2d(x))
    pa = env.positions(rb.anchors)
    return env.aggregate(px[:, None, :] - pa[None, :, :])


def shepard(dist: np.ndarray, values: np.ndarray, p: float) -> np.ndarray:
    """Inverse-distance blend row by row; a zero distance returns that rule's value."""
    dist = np.atleast_2d(dist)
    values = np.asarray(values, dtype=float)
    out = np.empty(dist.shape[0])
    zero = dist == 0.0
    exact = zero.any(axis=1)
    for i in np.flatnonzero(exact):
        hits = values[zero[i]]
        if np.any(hits != hits[0]):
            rules = ", ".join(str(k + 1) for k in np.flatnonzero(zero[i]))
            raise ZeroDistanceConflict(f"rules {rules} sit at distance 0 with different consequents")
        out[i] = hits[0]
    rest = ~exact
    if np.any(rest):
        d = dist[rest]
        # scale by the nearest distance so d**-p cannot overflow
        wts = (d.min(axis=1, keepdims=True) / d) ** p
        out[rest] = (wts @ values) / wts.sum(axis=1)
    return np.clip(out, values.min(), values.max())


def classify(level, threshold: float = DEFAULT_THRESHOLD):
    """Alert when the level reaches the threshold (boundary inclusive)."""
    return np.asarray(level) >= threshold if np.ndim(level) else bool(level >= threshold)


@dataclass(frozen=True)
class InferenceResult:
    level: float
    alert: bool
    matched_rule: Optional[int]
    per_rule_distances: tuple[float, ...]


def infer(env: VagueEnvironment, rb: RuleBase, obs, threshold=DEFAULT_THRESHOLD, strict=False) -> InferenceResult:
    _check(env, rb)
    x = rb.observation(obs, strict=strict)
    if x.ndim != 1:
        raise DimensionMismatch("infer takes one observation; use FiveEngine.levels for batches")
    dist = distance_matrix(env, rb, x)
    level = float(shepard(dist, rb.consequents, env.p)[0])
    zeros = np.flatnonzero(dist[0] == 0.0)
    return InferenceResult(
        level=level,
        alert=classify(level, threshold),
        matched_rule=int(zeros[0]) if len(zeros) else None,
        per_rule_distances=tuple(float(v) for v in dist[0]),
    )


@dataclass(frozen=True)
class FiveEngine:
    """A rule base bundled with its vague environment and alert threshold."""

    rulebase: RuleBase
    env: VagueEnvironment
    threshold: float = DEFAULT_THRESHOLD
    strict: bool = False

    def __post_init__(self):
        _check(self.env, self.rulebase)
        lo, hi = self.rulebase.output_range
        if not lo <= self.threshold <= hi:
            raise ValueError(f"threshold {self.threshold} outside output range {self.rulebase.output_range}")

    @classmethod
    def build(cls, rb: RuleBase, p=DEFAULT_P, w=DEFAULT_W, floor=None, threshold=DEFAULT_THRESHOLD, strict=False):
        return cls(rb, VagueEnvironment.from_rulebase(rb, p=p, w=w, floor=floor), threshold, strict)

    def infer(self, obs) -> InferenceResult:
        return infer(self.env, self.rulebase, obs, self.threshold, self.strict)

    def levels(self, x: Sequence[Sequence[float]], chunk: int = 4096) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.size == 0:
            return np.empty(0)
        x = self.rulebase.observation(np.atleast_2d(x), strict=self.strict)
        cons = self.rulebase.consequents
        parts = [
            shepard(distance_matrix(self.env, self.rulebase, x[i:i + chunk]), cons, self.env.p)
            for i in range(0, len(x), chunk)
        ]
        return np.concatenate(parts)

    def alerts(self, x) -> np.ndarray:
        return classify(self.levels(x), self.threshold)
