"""Trapezoidal fuzzy sets, linguistic partitions and sparse rule bases.

Everything here is immutable once constructed.  Rule bases can be read
from and written to a small line-oriented text format::

    # comment
    partition packet_rate 1 1118
    term L 166.81 222.66 278.51 334.36
    ...
    rule L L M -> 0
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import DimensionMismatch, OutOfUniverse, RuleBaseError, RuleFileError

#: consequent aliases accepted in rule files (false attack / attack)
CONSEQUENT_ALIASES = {"FA": 0.0, "A": 1.0}


@dataclass(frozen=True)
class TrapezoidalSet:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        knots = (self.a, self.b, self.c, self.d)
        if not all(math.isfinite(k) for k in knots):
            raise RuleBaseError(f"non-finite trapezoid knot in {knots}")
        if not (self.a <= self.b <= self.c <= self.d):
            raise RuleBaseError(f"trapezoid knots must satisfy a <= b <= c <= d, got {knots}")

    @property
    def knots(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    @property
    def core_midpoint(self) -> float:
        return (self.b + self.c) / 2

    def __call__(self, x: float) -> float:
        return membership(self, x)

    def support_closed(self) -> tuple[bool, bool]:
        """Whether the support includes its left / right end point.

        A vertical edge (a == b or c == d) puts the end point on the core.
        """
        return (self.a == self.b, self.c == self.d)


def membership(fs: TrapezoidalSet, x: float) -> float:
    if fs.b <= x <= fs.c:
        return 1.0
    if x <= fs.a or x >= fs.d:
        return 0.0
    if x < fs.b:
        return (x - fs.a) / (fs.b - fs.a)
    return (fs.d - x) / (fs.d - fs.c)


def core_midpoint(fs: TrapezoidalSet) -> float:
    return fs.core_midpoint


class Gap(NamedTuple):
    """An uncovered stretch of a universe.

    ``lo == hi`` marks a single uncovered point, which happens where two
    sloped supports merely touch.
    """

    lo: float
    hi: float

    @property
    def midpoint(self) -> float:
        return (self.lo + self.hi) / 2


@dataclass(frozen=True)
class Coverage:
    gaps: tuple[Gap, ...] = ()

    @property
    def complete(self) -> bool:
        return not self.gaps

    @property
    def sparse(self) -> bool:
        return bool(self.gaps)

    def __str__(self):
        if self.complete:
            return "Complete"
        return "Sparse(" + ", ".join(f"({g.lo:g}, {g.hi:g})" for g in self.gaps) + ")"


@dataclass(frozen=True)
class InputPartition:
    name: str
    universe_lo: float
    universe_hi: float
    terms: tuple[tuple[str, TrapezoidalSet], ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((str(lbl), fs) for lbl, fs in self.terms))
        if not self.universe_lo < self.universe_hi:
            raise RuleBaseError(
                f"partition {self.name!r}: universe_lo must be < universe_hi, "
                f"got [{self.universe_lo}, {self.universe_hi}]"
            )
        if not self.terms:
            raise RuleBaseError(f"partition {self.name!r} has no terms")
        labels = [lbl for lbl, _ in self.terms]
        if len(set(labels)) != len(labels):
            raise RuleBaseError(f"partition {self.name!r} has duplicate term labels")
        for lbl, fs in self.terms:
            if fs.a < self.universe_lo or fs.d > self.universe_hi:
                raise RuleBaseError(
                    f"partition {self.name!r}: term {lbl!r} support [{fs.a}, {fs.d}] "
                    f"leaves universe [{self.universe_lo}, {self.universe_hi}]"
                )
        mids = [fs.core_midpoint for _, fs in self.terms]
        if any(m2 <= m1 for m1, m2 in zip(mids, mids[1:])):
            raise RuleBaseError(
                f"partition {self.name!r}: terms must be ordered by strictly increasing core midpoint"
            )

    @classmethod
    def from_terms(cls, name, terms, universe=None):
        """Build a partition, defaulting the universe to the span of all supports."""
        terms = tuple((lbl, fs if isinstance(fs, TrapezoidalSet) else TrapezoidalSet(*fs)) for lbl, fs in terms)
        if universe is None:
            universe = (min(fs.a for _, fs in terms), max(fs.d for _, fs in terms))
        return cls(name, float(universe[0]), float(universe[1]), terms)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lbl for lbl, _ in self.terms)

    @property
    def width(self) -> float:
        return self.universe_hi - self.universe_lo

    def term(self, label: str) -> TrapezoidalSet:
        for lbl, fs in self.terms:
            if lbl == label:
                return fs
        raise KeyError(label)

    def knot_array(self) -> np.ndarray:
        return np.array([fs.knots for _, fs in self.terms], dtype=float)

    def memberships(self, x: float) -> dict[str, float]:
        return {lbl: membership(fs, x) for lbl, fs in self.terms}


def coverage(partition: InputPartition) -> Coverage:
    """Sweep the term supports and report the parts of the universe left uncovered."""
    lo, hi = partition.universe_lo, partition.universe_hi
    spans = []
    for _, fs in partition.terms:
        left_closed, right_closed = fs.support_closed()
        spans.append((fs.a, not left_closed, fs.d, right_closed))
    spans.sort()

    gaps = []
    pos, pos_covered = lo, False
    for a, left_open, d, right_closed in spans:
        if a > pos:
            gaps.append(Gap(pos, a))
        elif a == pos and not pos_covered and left_open:
            gaps.append(Gap(pos, pos))
        if d > pos:
            pos = d
            pos_covered = right_closed
        elif d == pos:
            pos_covered = pos_covered or right_closed
    if pos < hi:
        gaps.append(Gap(pos, hi))
    elif not pos_covered:
        gaps.append(Gap(hi, hi))
    return Coverage(tuple(gaps))


@dataclass(frozen=True)
class Rule:
    antecedent: tuple[str, ...]
    consequent: float

    def __post_init__(self):
        object.__setattr__(self, "antecedent", tuple(str(s) for s in self.antecedent))
        object.__setattr__(self, "consequent", float(self.consequent))


@dataclass(frozen=True)
class RuleBase:
    partitions: tuple[InputPartition, ...]
    rules: tuple[Rule, ...]
    output_range: tuple[float, float] = (0.0, 1.0)
    _anchors: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "partitions", tuple(self.partitions))
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "output_range", (float(self.output_range[0]), float(self.output_range[1])))
        lo, hi = self.output_range
        if not lo < hi:
            raise RuleBaseError(f"output range must satisfy lo < hi, got {self.output_range}")
        if not self.partitions:
            raise RuleBaseError("rule base needs at least one input partition")
        if not self.rules:
            raise RuleBaseError("rule base needs at least one rule")
        names = [p.name for p in self.partitions]
        if len(set(names)) != len(names):
            raise RuleBaseError(f"duplicate partition names in {names}")
        seen = {}
        anchors = np.empty((len(self.rules), len(self.partitions)))
        for k, rule in enumerate(self.rules):
            if len(rule.antecedent) != len(self.partitions):
                raise RuleBaseError(
                    f"rule {k + 1}: {len(rule.antecedent)} antecedent labels for "
                    f"{len(self.partitions)} partitions"
                )
            for i, (lbl, part) in enumerate(zip(rule.antecedent, self.partitions)):
                try:
                    anchors[k, i] = part.term(lbl).core_midpoint
                except KeyError:
                    raise RuleBaseError(
                        f"rule {k + 1}: label {lbl!r} is not a term of partition {part.name!r}"
                    ) from None
            if rule.antecedent in seen:
                raise RuleBaseError(
                    f"rule {k + 1} repeats the antecedent of rule {seen[rule.antecedent] + 1}: "
                    f"{' '.join(rule.antecedent)}"
                )
            seen[rule.antecedent] = k
            if not lo <= rule.consequent <= hi:
                raise RuleBaseError(f"rule {k + 1}: consequent {rule.consequent} outside {self.output_range}")
        anchors.setflags(write=False)
        object.__setattr__(self, "_anchors", anchors)

    @property
    def dims(self) -> int:
        return len(self.partitions)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.partitions)

    @property
    def anchors(self) -> np.ndarray:
        """Core-midpoint tuple of every rule, shape (rules, dims)."""
        return self._anchors

    @property
    def consequents(self) -> np.ndarray:
        return np.array([r.consequent for r in self.rules])

    @property
    def universes(self) -> np.ndarray:
        return np.array([(p.universe_lo, p.universe_hi) for p in self.partitions])

    def rule_sets(self, rule: Rule) -> list[TrapezoidalSet]:
        return [p.term(lbl) for p, lbl in zip(self.partitions, rule.antecedent)]

    def observation(self, obs, strict=False) -> np.ndarray:
        """Validate an observation (or a batch of them) and clamp it to the universes.

        With ``strict=True`` out-of-universe values raise OutOfUniverse instead.
        """
        x = np.asarray(obs, dtype=float)
        if x.shape[-1:] != (self.dims,) or x.ndim > 2:
            raise DimensionMismatch(f"observation shape {x.shape} does not match {self.dims} input dimensions")
        if not np.all(np.isfinite(x)):
            raise DimensionMismatch("observation contains non-finite values")
        u = self.universes
        if strict:
            bad = (x < u[:, 0]) | (x > u[:, 1])
            if np.any(bad):
                idx = np.argwhere(bad)[0]
                dim = idx[-1]
                value = x[tuple(idx)]
                raise OutOfUniverse(
                    f"{self.partitions[dim].name}={value:g} outside universe "
                    f"[{u[dim, 0]:g}, {u[dim, 1]:g}]"
                )
            return x
        return np.clip(x, u[:, 0], u[:, 1])


def firing_degree(rb: RuleBase, rule: Rule, obs) -> float:
    x = rb.observation(obs)
    return min(membership(fs, xi) for fs, xi in zip(rb.rule_sets(rule), x))


def classical_covered(rb: RuleBase, obs) -> bool:
    """True when at least one rule fires with a positive min-composed degree."""
    x = rb.observation(obs)
    return any(firing_degree(rb, rule, x) > 0.0 for rule in rb.rules)


# -- rule-base text format -------------------------------------------------

def _parse_consequent(token: str) -> float:
    if token.upper() in CONSEQUENT_ALIASES:
        return CONSEQUENT_ALIASES[token.upper()]
    return float(token)


def parse_rulebase(text: str) -> RuleBase:
    parts: list[tuple[str, float, float, list]] = []
    rules: list[Rule] = []
    output_range = (0.0, 1.0)
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kind = tok[0].lower()
        try:
            if kind == "partition":
                if len(tok) != 4:
                    raise RuleFileError("expected: partition <name> <lo> <hi>", line_no)
                parts.append((tok[1], float(tok[2]), float(tok[3]), []))
            elif kind == "term":
                if not parts:
                    raise RuleFileError("term before any partition", line_no)
                if len(tok) != 6:
                    raise RuleFileError("expected: term <label> <a> <b> <c> <d>", line_no)
                parts[-1][3].append((tok[1], TrapezoidalSet(*map(float, tok[2:]))))
            elif kind == "output":
                if len(tok) != 3:
                    raise RuleFileError("expected: output <lo> <hi>", line_no)
                output_range = (float(tok[1]), float(tok[2]))
            elif kind == "rule":
                if "->" not in tok or tok.index("->") != len(tok) - 2:
                    raise RuleFileError("expected: rule <label_1> ... <label_n> -> <consequent>", line_no)
                rules.append(Rule(tuple(tok[1:-2]), _parse_consequent(tok[-1])))
            else:
                raise RuleFileError(f"unknown directive {tok[0]!r}", line_no)
        except RuleFileError:
            raise
        except (ValueError, RuleBaseError) as exc:
            raise RuleFileError(str(exc), line_no) from None
    partitions = tuple(InputPartition(name, lo, hi, tuple(terms)) for name, lo, hi, terms in parts)
    return RuleBase(partitions, tuple(rules), output_range)


def format_rulebase(rb: RuleBase, header: Iterable[str] = ()) -> str:
    lines = [f"# {h}" for h in header]
    lines.append(f"output {rb.output_range[0]!r} {rb.output_range[1]!r}")
    for p in rb.partitions:
        lines.append(f"partition {p.name} {p.universe_lo!r} {p.universe_hi!r}")
        for lbl, fs in p.terms:
            lines.append(f"term {lbl} {fs.a!r} {fs.b!r} {fs.c!r} {fs.d!r}")
    for rule in rb.rules:
        lines.append(f"rule {' '.join(rule.antecedent)} -> {rule.consequent!r}")
    return "\n".join(lines) + "\n"


def load_rulebase(path) -> RuleBase:
    return parse_rulebase(Path(path).read_text())


def save_rulebase(rb: RuleBase, path, header: Sequence[str] = ()) -> None:
    Path(path).write_text(format_rulebase(rb, header))


def baseline_rulebase() -> RuleBase:
    """The bundled 28-rule DDoS rule base over packet rate, byte rate and utilization."""
    text = resources.files("friids").joinpath("data/baseline.rules").read_text()
    return parse_rulebase(text)
