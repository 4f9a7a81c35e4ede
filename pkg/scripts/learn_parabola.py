#!/usr/bin/env python3
"""Learn a sparse 1-D rule base for y = x^2 and print the trace summary.

    python3 scripts/learn_parabola.py --samples 100 --target 0.05 --max-rules 8
"""
import argparse
import json
import time

import numpy as np

from friids.fuzzy import format_rulebase
from friids.learner import LearnerConfig, TrainingSet, learn


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--target", type=float, default=0.05)
    ap.add_argument("--max-rules", type=int, default=8)
    ap.add_argument("--max-iterations", type=int, default=500)
    ap.add_argument("--trace", help="write the JSON trace here")
    args = ap.parse_args()

    x = np.linspace(0, 1, args.samples)
    cfg = LearnerConfig(max_rules=args.max_rules, max_iterations=args.max_iterations, target=args.target)
    t0 = time.perf_counter()
    res = learn(TrainingSet(x, x ** 2, ("x",)), cfg)
    dt = time.perf_counter() - t0

    for step in res.trace:
        if step["event"] != "stall":
            print(f"{step['iteration']:4d} {step['event']:<7} rules={step['rules']} "
                  f"index={step['index']:.5f} best={step['best']:.5f}")
    print(f"\nfinal index {res.index:.5f} with {len(res.rulebase.rules)} rules in {dt:.2f} s\n")
    print(format_rulebase(res.rulebase))
    if args.trace:
        with open(args.trace, "w") as fh:
            json.dump(res.trace_json(), fh, indent=1)


if __name__ == "__main__":
    main()
