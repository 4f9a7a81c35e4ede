#!/usr/bin/env python3
"""Classify the two reference observations with the bundled rule base and
print the metrics implied by the published test counts.

    python3 scripts/reproduce_reference.py [--p 2] [--w 2] [--threshold 0.5]
"""
import argparse

from friids.cli import PUBLISHED_COUNTS, REFERENCE_OBSERVATIONS
from friids.five import FiveParams
from friids.fuzzy import baseline_rulebase, classical_covered, coverage
from friids.pipeline import report_table


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=float, default=2.0)
    ap.add_argument("--w", type=float, default=2.0)
    ap.add_argument("--threshold", type=float, default=0.5)
    args = ap.parse_args()

    rb = baseline_rulebase()
    for part in rb.partitions:
        cov = coverage(part)
        gaps = ", ".join(f"({g.lo:g}, {g.hi:g})" for g in cov.gaps) or "none"
        print(f"{part.name:<12} {'complete' if cov.complete else 'sparse':<9} gaps: {gaps}")
    print()

    engine = FiveParams(p=args.p, w=args.w, threshold=args.threshold).engine(rb)
    for obs in REFERENCE_OBSERVATIONS:
        r = engine.infer(obs)
        print(f"{obs}: level={r.level:.4f} alert={r.alert} covered={classical_covered(rb, obs)}")
    print()
    print(report_table(PUBLISHED_COUNTS))


if __name__ == "__main__":
    main()
