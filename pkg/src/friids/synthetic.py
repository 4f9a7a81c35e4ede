"""Synthetic flow records in the DDoS dataset schema.

Rows are drawn around the cores of a rule base's rules and labelled by
the rule consequent, so a matching engine should classify them well.
Useful for tests and for exercising the pipeline without the real data.
"""
from __future__ import annotations

import numpy as np

from .fuzzy import RuleBase, baseline_rulebase
from .pipeline import CLASSES, CONTINUOUS_COLUMNS, DEFAULT_FEATURES, NORMAL, FlowRecord

ATTACKS = tuple(c for c in CLASSES if c != NORMAL)


def sample_observations(rb: RuleBase, n: int, rng: np.random.Generator, spread: float = 0.5):
    """``n`` points near randomly chosen rule cores, with the chosen rule's consequent."""
    picks = rng.integers(len(rb.rules), size=n)
    x = np.empty((n, rb.dims))
    for i, part in enumerate(rb.partitions):
        for k in np.unique(picks):
            fs = part.term(rb.rules[k].antecedent[i])
            half = (fs.c - fs.b) / 2 + spread * min(fs.b - fs.a, fs.d - fs.c)
            rows = picks == k
            lo = max(part.universe_lo, fs.core_midpoint - half)
            hi = min(part.universe_hi, fs.core_midpoint + half)
            x[rows, i] = rng.uniform(lo, hi, size=rows.sum())
    return x, rb.consequents[picks]


def flow_records(n: int, seed: int = 0, rb: RuleBase = None, features=DEFAULT_FEATURES) -> list:
    rng = np.random.default_rng(seed)
    rb = rb or baseline_rulebase()
    x, y = sample_observations(rb, n, rng)
    out = []
    for row in range(n):
        values = {c: float(rng.integers(0, 1000)) for c in CONTINUOUS_COLUMNS}
        values.update(dict(zip(features, map(float, x[row]))))
        values.update({
            "PKT_TYPE": str(rng.choice(["tcp", "udp", "cbr", "ping"])),
            "FLAGS": "-------",
            "NODE_NAME_FROM": f"Node{rng.integers(1, 25)}",
            "NODE_NAME_TO": f"Node{rng.integers(1, 25)}",
            "PKT_CLASS": NORMAL if y[row] < 0.5 else str(rng.choice(ATTACKS)),
        })
        out.append(FlowRecord(values, row + 2))
    return out
