"""Command-line entry point: ``friids {rank,train,eval,infer,demo}``.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, build_config, load_config_file
from .errors import ConfigError, FriIdsError
from .features import Discretizer, format_ranking, rank_features
from .five import FiveEngine
from .fuzzy import baseline_rulebase, classical_covered, load_rulebase, save_rulebase
from .learner import TrainingSet, learn
from .pipeline import (
    ConfusionMatrix, evaluate, extract_intrusions, feature_table, filter_and_sort, load_csv,
    normalize_column, read_table, report_json, report_table, sample_pool, split_pools,
)

log = logging.getLogger("friids")

REFERENCE_OBSERVATIONS = ((200.0, 55943.0, 11560.0), (900.0, 1190251.0, 22029.0))
PUBLISHED_COUNTS = ConfusionMatrix(tp=4668, tn=4997, fp=3, fn=332)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _rulebase(cfg: RunConfig):
    return load_rulebase(cfg.rules) if cfg.rules else baseline_rulebase()


def _engine(cfg: RunConfig, rb=None) -> FiveEngine:
    return cfg.five.engine(rb if rb is not None else _rulebase(cfg), strict=cfg.strict_universe)


def _records(cfg: RunConfig):
    if not cfg.input:
        raise ConfigError("--input is required")
    loaded = load_csv(cfg.input)
    for row, reason in loaded.rejects[:20]:
        log.warning("%s:%d rejected: %s", cfg.input, row, reason)
    if len(loaded.rejects) > 20:
        log.warning("%s: %d more rejected rows", cfg.input, len(loaded.rejects) - 20)
    records = loaded.records
    if cfg.fraction < 1.0:
        records = extract_intrusions(records, cfg.fraction, cfg.seed)
    return records, loaded.rejects


def cmd_rank(cfg: RunConfig) -> int:
    records, _ = _records(cfg)
    table = feature_table(records, binary=cfg.binary)
    ranking = rank_features(table, Discretizer(cfg.bins))
    _emit(format_ranking(ranking, cfg.top), cfg.out)
    return 0


def _training_set(cfg: RunConfig) -> TrainingSet:
    header, _, fh = read_table(cfg.input)
    fh.close()
    if "TARGET" in header:
        data = np.genfromtxt(cfg.input, delimiter=",", skip_header=1, ndmin=2)
        if not np.all(np.isfinite(data)):
            raise FriIdsError(f"{cfg.input}: non-numeric or missing values in training table")
        t = header.index("TARGET")
        x = np.delete(data, t, axis=1)
        names = tuple(h.lower() for i, h in enumerate(header) if i != t)
        return TrainingSet(x, data[:, t], names)
    records, _ = _records(cfg)
    pools = filter_and_sort(records, cfg.features)
    train, _ = split_pools(pools, n_train=cfg.n_per_class or 5000, n_test=0, seed=cfg.seed)
    x = np.vstack([train.normal, train.intrusion])
    y = np.concatenate([np.zeros(len(train.normal)), np.ones(len(train.intrusion))])
    return TrainingSet(x, y, tuple(f.lower() for f in pools.features))


def cmd_train(cfg: RunConfig) -> int:
    train = _training_set(cfg)
    result = learn(train, cfg.learner, cfg.five)
    header = [f"learned from {Path(cfg.input).name}: {len(train)} rows, "
              f"{len(result.rulebase.rules)} rules, relative RMSE {result.index:.6f}"]
    if cfg.out:
        save_rulebase(result.rulebase, cfg.out, header)
    else:
        from .fuzzy import format_rulebase
        sys.stdout.write(format_rulebase(result.rulebase, header))
    if cfg.trace:
        Path(cfg.trace).write_text(json.dumps(result.trace_json(), indent=1) + "\n")
    log.info("final index %.6f with %d rules", result.index, len(result.rulebase.rules))
    return 0


def cmd_eval(cfg: RunConfig) -> int:
    engine = _engine(cfg)
    if len(cfg.features) != engine.rulebase.dims:
        raise ConfigError(f"{len(cfg.features)} features selected for a {engine.rulebase.dims}-input rule base")
    records, rejects = _records(cfg)
    pools = filter_and_sort(records, cfg.features)
    rng = np.random.default_rng(cfg.seed)
    normal = sample_pool(pools.normal, cfg.n_per_class, rng)
    intrusion = sample_pool(pools.intrusion, cfg.n_per_class, rng)
    if len(normal) == 0 and len(intrusion) == 0:
        raise FriIdsError(f"{cfg.input}: no usable records")
    cm = evaluate(engine, normal, intrusion)
    print(report_table(cm))
    if rejects:
        print(f"\n{len(rejects)} malformed row(s) rejected")
    if cfg.out:
        Path(cfg.out).write_text(report_json(cm))
    return 0


def cmd_infer(cfg: RunConfig, obs) -> int:
    engine = _engine(cfg)
    result = engine.infer(obs)
    rb = engine.rulebase
    payload = {
        "observation": dict(zip(rb.names, map(float, obs))),
        "level": result.level,
        "alert": result.alert,
        "verdict": "attack" if result.alert else "normal",
        "matched_rule": None if result.matched_rule is None else result.matched_rule + 1,
        "classically_covered": classical_covered(rb, obs),
    }
    _emit(json.dumps(payload, indent=2), cfg.out)
    return 0


def demo_text(cfg: RunConfig = RunConfig()) -> str:
    engine = cfg.five.engine(baseline_rulebase())
    names = engine.rulebase.names
    lines = ["Bundled 28-rule base, default FIVE parameters "
             f"(p={cfg.five.p:g}, w={cfg.five.w:g}, threshold={cfg.five.threshold:g})", ""]
    for obs in REFERENCE_OBSERVATIONS:
        r = engine.infer(obs)
        covered = classical_covered(engine.rulebase, obs)
        desc = ", ".join(f"{n}={v:g}" for n, v in zip(names, obs))
        lines.append(f"{desc}: level {r.level:.4f} -> {'attack' if r.alert else 'normal'}"
                     f"{'' if covered else ' (no rule fires; interpolated)'}")
    lines += ["", "Metrics from the published test counts:", report_table(PUBLISHED_COUNTS)]
    return "\n".join(lines)


def cmd_demo(cfg: RunConfig) -> int:
    _emit(demo_text(cfg), cfg.out)
    return 0


def _common(p: argparse.ArgumentParser, *, engine=True, data=True):
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--out", help="write the main output to this file")
    p.add_argument("--seed", type=int)
    if data:
        p.add_argument("--input", help="flow-record CSV")
        p.add_argument("--fraction", type=float, help="keep this fraction of each attack class")
    if engine:
        p.add_argument("--rules", help="rule-base file (default: bundled baseline)")
        p.add_argument("--p", dest="five.p", type=float, help="Shepard exponent")
        p.add_argument("--w", dest="five.w", type=float, help="distance aggregation order")
        p.add_argument("--scaling-floor", dest="five.scaling_floor", type=float)
        p.add_argument("--threshold", dest="five.threshold", type=float)
        p.add_argument("--strict-universe", dest="strict_universe", action="store_const", const=True,
                       help="reject observations outside the rule-base universes")


def _feature_list(text):
    return tuple(normalize_column(f) for f in text.split(",") if f.strip())


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="friids", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("rank", help="rank flow features by information gain")
    _common(p, engine=False)
    p.add_argument("--bins", type=int)
    p.add_argument("--top", type=int)
    p.add_argument("--multiclass", dest="binary", action="store_const", const=False,
                   help="score against all five PKT_CLASS labels instead of normal/attack")

    p = sub.add_parser("train", help="learn a sparse rule base")
    _common(p)
    p.add_argument("--features", type=_feature_list)
    p.add_argument("--trace", help="JSON training trace output")
    p.add_argument("--n-per-class", dest="n_per_class", type=int)
    p.add_argument("--max-rules", dest="learner.max_rules", type=int)
    p.add_argument("--max-iterations", dest="learner.max_iterations", type=int)
    p.add_argument("--target", dest="learner.target", type=float)
    p.add_argument("--initial-step", dest="learner.initial_step", type=float)
    p.add_argument("--decay", dest="learner.decay", type=float)
    p.add_argument("--stall-window", dest="learner.stall_window", type=int)

    p = sub.add_parser("eval", help="detection metrics over a flow CSV")
    _common(p)
    p.add_argument("--features", type=_feature_list)
    p.add_argument("--n-per-class", dest="n_per_class", type=int)

    p = sub.add_parser("infer", help="infer one observation")
    _common(p, data=False)
    p.add_argument("--obs", type=float, nargs="+", required=True, metavar="X")

    p = sub.add_parser("demo", help="reproduce the two reference observations and published metrics")
    _common(p, engine=False, data=False)
    return parser


COMMANDS = {"rank": cmd_rank, "train": cmd_train, "eval": cmd_eval, "demo": cmd_demo}


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"friids: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose", "obs")}
    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg = build_config(file_values, flags)
        if args.command == "infer":
            return cmd_infer(cfg, args.obs)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"friids: config error: {exc}", file=sys.stderr)
        return 1
    except (FriIdsError, OSError) as exc:
        print(f"friids: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
