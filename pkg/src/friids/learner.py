"""Sparse rule-base learning: rule-base extension with default set shapes.

Start from two rules at the rows with the smallest and largest target,
hill-climb every knot and consequent, and when the climb stalls add a
rule where the current base misses the training data the most.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateTargets, DimensionMismatch, EmptyTrainingSet
from .five import FiveParams, aggregate, scaling_density, shepard
from .fuzzy import InputPartition, Rule, RuleBase, TrapezoidalSet

log = logging.getLogger(__name__)

CORE_FRACTION = 0.05
SUPPORT_FRACTION = 0.15


@dataclass(frozen=True)
class TrainingSet:
    x: np.ndarray
    y: np.ndarray
    names: tuple[str, ...] = ()

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        if x.ndim == 1:
            x = x[:, None]
        if len(y) == 0 or x.shape[0] == 0:
            raise EmptyTrainingSet("training set has no rows")
        if x.ndim != 2 or x.shape[0] != len(y):
            raise DimensionMismatch(f"{x.shape[0]} observations for {len(y)} targets")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("training data must be finite")
        names = tuple(self.names) or tuple(f"x{i + 1}" for i in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise DimensionMismatch(f"{len(names)} names for {x.shape[1]} input columns")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "names", names)

    def __len__(self):
        return len(self.y)

    @property
    def dims(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class LearnerConfig:
    max_rules: int = 8
    max_iterations: int = 500
    target: float = 0.05
    initial_step: float = 0.05
    decay: float = 0.5
    stall_window: int = 3
    seed: int = 0
    min_step: float = 1e-4

    def __post_init__(self):
        for name in ("max_rules", "max_iterations", "stall_window"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"learner.{name} must be a positive integer, got {value}")
        if self.max_rules < 2:
            raise ValueError("learner.max_rules must be at least 2")
        if not self.target > 0:
            raise ValueError(f"learner.target must be positive, got {self.target}")
        if not self.initial_step > 0 or not self.min_step > 0:
            raise ValueError("learner step sizes must be positive")
        if not 0 < self.decay < 1:
            raise ValueError(f"learner.decay must lie in (0, 1), got {self.decay}")
        if self.seed < 0:
            raise ValueError("learner.seed must be non-negative")


def default_set(center: float, lo: float, hi: float) -> TrapezoidalSet:
    """Symmetric trapezoid around ``center``; the core shrinks near a universe edge
    so its midpoint stays on ``center``."""
    width = hi - lo
    half_core = min(CORE_FRACTION * width / 2, center - lo, hi - center)
    half_support = SUPPORT_FRACTION * width / 2
    a = max(lo, center - half_support)
    d = min(hi, center + half_support)
    return TrapezoidalSet(a, max(a, center - half_core), min(d, center + half_core), d)


# -- mutable working copy used while learning -------------------------------

@dataclass
class _Part:
    name: str
    lo: float
    hi: float
    labels: list
    knots: np.ndarray  # (terms, 4), unsorted


@dataclass
class _Model:
    parts: list
    rule_terms: np.ndarray  # (rules, dims) term index per dimension
    cons: np.ndarray
    output_range: tuple
    _counter: list = field(default_factory=list)

    @classmethod
    def from_rulebase(cls, rb: RuleBase) -> "_Model":
        parts = [_Part(p.name, p.universe_lo, p.universe_hi, list(p.labels), p.knot_array()) for p in rb.partitions]
        idx = np.array([[parts[i].labels.index(lbl) for i, lbl in enumerate(r.antecedent)] for r in rb.rules])
        counter = [len(p.labels) for p in parts]
        return cls(parts, idx.reshape(len(rb.rules), len(parts)), rb.consequents.copy(), rb.output_range, counter)

    def copy(self) -> "_Model":
        parts = [_Part(p.name, p.lo, p.hi, list(p.labels), p.knots.copy()) for p in self.parts]
        return _Model(parts, self.rule_terms.copy(), self.cons.copy(), self.output_range, list(self._counter))

    def to_rulebase(self) -> RuleBase:
        partitions = []
        for p in self.parts:
            order = np.argsort((p.knots[:, 1] + p.knots[:, 2]) / 2, kind="stable")
            terms = tuple((p.labels[j], TrapezoidalSet(*map(float, p.knots[j]))) for j in order)
            partitions.append(InputPartition(p.name, float(p.lo), float(p.hi), terms))
        rules = tuple(
            Rule(tuple(self.parts[i].labels[t] for i, t in enumerate(row)), float(c))
            for row, c in zip(self.rule_terms, self.cons)
        )
        return RuleBase(tuple(partitions), rules, self.output_range)

    def levels(self, x: np.ndarray, params: FiveParams) -> np.ndarray:
        per_dim = np.empty((x.shape[0], len(self.cons), len(self.parts)))
        for i, p in enumerate(self.parts):
            floor = params.floor if params.floor is not None else 1.0 / (p.hi - p.lo)
            xs, s = scaling_density(p.knots, p.lo, p.hi, floor)
            cum = np.concatenate(([0.0], np.cumsum(s * np.diff(xs))))
            px = np.interp(x[:, i], xs, cum)
            pm = np.interp((p.knots[:, 1] + p.knots[:, 2]) / 2, xs, cum)
            per_dim[:, :, i] = px[:, None] - pm[self.rule_terms[:, i]][None, :]
        return shepard(aggregate(per_dim, params.w), self.cons, params.p)

    def index(self, train: TrainingSet, x: np.ndarray, params: FiveParams) -> float:
        err = self.levels(x, params) - train.y
        return float(np.sqrt(np.mean(err * err)) / (self.output_range[1] - self.output_range[0]))

    def valid_term(self, dim: int, j: int) -> bool:
        p = self.parts[dim]
        a, b, c, d = p.knots[j]
        if not (p.lo <= a <= b <= c <= d <= p.hi):
            return False
        mids = (p.knots[:, 1] + p.knots[:, 2]) / 2
        return np.count_nonzero(mids == mids[j]) == 1

    def add_rule(self, center: np.ndarray, consequent: float) -> bool:
        """Add a rule anchored at ``center``; reuses terms already centred there.

        Returns False (and leaves the model alone) when an existing rule has
        the same anchor.
        """
        row = []
        new_terms = []
        for i, p in enumerate(self.parts):
            mids = (p.knots[:, 1] + p.knots[:, 2]) / 2
            hit = np.flatnonzero(mids == center[i])
            if len(hit):
                row.append(int(hit[0]))
            else:
                row.append(len(p.labels))
                new_terms.append((i, default_set(float(center[i]), p.lo, p.hi)))
        if not new_terms and any(np.array_equal(r, row) for r in self.rule_terms):
            return False
        for i, fs in new_terms:
            p = self.parts[i]
            p.labels.append(f"S{self._counter[i]}")
            self._counter[i] += 1
            p.knots = np.vstack([p.knots, fs.knots])
        self.rule_terms = np.vstack([self.rule_terms, np.array(row)[None, :]])
        self.cons = np.append(self.cons, consequent)
        return True

    def sweep(self, train, x, params, step, current):
        """One first-improvement pass over every knot then every consequent."""
        improved = False
        accepted = []
        for i, p in enumerate(self.parts):
            delta = step * (p.hi - p.lo)
            for j in range(len(p.labels)):
                for k in range(4):
                    old = p.knots[j, k]
                    for move in (delta, -delta):
                        p.knots[j, k] = old + move
                        if self.valid_term(i, j):
                            idx = self.index(train, x, params)
                            if idx < current:
                                current, improved = idx, True
                                accepted.append(current)
                                break
                        p.knots[j, k] = old
        lo, hi = self.output_range
        delta = step * (hi - lo)
        for r in range(len(self.cons)):
            old = self.cons[r]
            for move in (delta, -delta):
                cand = old + move
                if not lo <= cand <= hi:
                    continue
                self.cons[r] = cand
                idx = self.index(train, x, params)
                if idx < current:
                    current, improved = idx, True
                    accepted.append(current)
                    break
                self.cons[r] = old
        return current, improved, accepted


def _universes(train: TrainingSet) -> list[tuple[float, float]]:
    out = []
    for lo, hi in zip(train.x.min(axis=0), train.x.max(axis=0)):
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
        out.append((float(lo), float(hi)))
    return out


def _clamped(rb: RuleBase, train: TrainingSet) -> np.ndarray:
    if train.dims != rb.dims:
        raise DimensionMismatch(f"training data has {train.dims} inputs, rule base {rb.dims}")
    return rb.observation(train.x)


def performance_index(rb: RuleBase, train: TrainingSet, params: FiveParams = FiveParams()) -> float:
    """Root mean square error of the inferred levels, relative to the output range width."""
    if len(train) == 0:
        raise EmptyTrainingSet("training set has no rows")
    x = _clamped(rb, train)
    err = params.engine(rb).levels(x) - train.y
    lo, hi = rb.output_range
    return float(np.sqrt(np.mean(err * err)) / (hi - lo))


def init_rulebase(train: TrainingSet, output_range=(0.0, 1.0), universes: Optional[Sequence] = None) -> RuleBase:
    """Two rules at the rows with the smallest and largest target (one if all targets tie)."""
    universes = list(universes) if universes is not None else _universes(train)
    lo_row = int(np.argmin(train.y))
    hi_row = int(np.argmax(train.y))
    parts = [_Part(name, lo, hi, [], np.empty((0, 4))) for name, (lo, hi) in zip(train.names, universes)]
    model = _Model(parts, np.empty((0, train.dims), dtype=int), np.empty(0), tuple(output_range),
                   [0] * train.dims)
    model.add_rule(np.clip(train.x[lo_row], *np.array(universes).T), float(train.y[lo_row]))
    if train.y[lo_row] == train.y[hi_row]:
        warnings.warn("all training targets are equal; using a single rule", DegenerateTargets, stacklevel=2)
    else:
        center = np.clip(train.x[hi_row], *np.array(universes).T)
        if not model.add_rule(center, float(train.y[hi_row])):
            log.warning("min and max target rows share an observation; keeping one rule")
    return model.to_rulebase()


def tune_step(rb: RuleBase, train: TrainingSet, step: float, params: FiveParams = FiveParams()):
    """One hill-climbing sweep with step ``step`` (relative to each range width).

    Returns ``(rule_base, improved)``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    model = _Model.from_rulebase(rb)
    x = _clamped(rb, train)
    current = model.index(train, x, params)
    _, improved, _ = model.sweep(train, x, params, step, current)
    return (model.to_rulebase() if improved else rb), improved


def _extend(model: _Model, train: TrainingSet, x: np.ndarray, params: FiveParams) -> bool:
    resid = np.abs(model.levels(x, params) - train.y)
    # stable sort keeps input order among equal residuals
    for row in np.argsort(-resid, kind="stable"):
        if model.add_rule(x[row], float(train.y[row])):
            return True
    return False


def extend_rule(rb: RuleBase, train: TrainingSet, params: FiveParams = FiveParams()) -> RuleBase:
    """Add one rule at the training row the current base fits worst.

    Rows whose anchor would duplicate an existing rule are passed over in
    favour of the next-worst row.
    """
    if len(train) == 0:
        raise EmptyTrainingSet("training set has no rows")
    model = _Model.from_rulebase(rb)
    x = _clamped(rb, train)
    if not _extend(model, train, x, params):
        return rb
    return model.to_rulebase()


@dataclass
class LearnResult:
    rulebase: RuleBase
    index: float
    trace: list

    def trace_json(self) -> list[dict]:
        return [dict(t) for t in self.trace]


def learn(train: TrainingSet, config: LearnerConfig = LearnerConfig(), params: FiveParams = FiveParams(),
          output_range=(0.0, 1.0), universes=None) -> LearnResult:
    """Run the extend-and-tune loop and return the best rule base seen.

    Each iteration is one full parameter sweep.  The trace records the
    iteration, the current and best-so-far index and the rule count.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateTargets)
        rb0 = init_rulebase(train, output_range, universes)
    model = _Model.from_rulebase(rb0)
    x = _clamped(rb0, train)
    current = model.index(train, x, params)
    best, best_model = current, model.copy()
    step, stall = config.initial_step, 0
    trace = [{"iteration": 0, "index": current, "best": best, "rules": len(model.cons), "step": step,
              "event": "init", "seed": config.seed}]

    for it in range(1, config.max_iterations + 1):
        if best <= config.target:
            break
        current, improved, _ = model.sweep(train, x, params, step, current)
        event = "tune" if improved else "stall"
        if improved:
            stall = 0
        else:
            stall += 1
            step = max(step * config.decay, config.min_step)
            if stall >= config.stall_window and len(model.cons) < config.max_rules:
                if _extend(model, train, x, params):
                    current = model.index(train, x, params)
                    event = "extend"
                step, stall = config.initial_step, 0
        if current < best:
            best, best_model = current, model.copy()
        trace.append({"iteration": it, "index": current, "best": best, "rules": len(model.cons),
                      "step": step, "event": event})
        log.debug("iteration %d: index %.6f best %.6f rules %d", it, current, best, len(model.cons))
    return LearnResult(best_model.to_rulebase(), best, trace)


def config_dict(config: LearnerConfig) -> dict:
    return asdict(config)
