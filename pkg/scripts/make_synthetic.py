#!/usr/bin/env python3
"""Write a synthetic flow CSV in the 28-column schema.

Rows sit near the bundled rule cores and are labelled by the rule
consequent, so ``friids eval`` on the output should score well.

    python3 scripts/make_synthetic.py flows.csv --rows 2000 --seed 0
"""
import argparse

from friids.pipeline import write_csv
from friids.synthetic import flow_records


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--rows", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    write_csv(flow_records(args.rows, seed=args.seed), args.out)
    print(f"wrote {args.rows} rows to {args.out}")


if __name__ == "__main__":
    main()
