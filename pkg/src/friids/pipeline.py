"""Flow-record ingestion, normal/intrusion pool extraction and detection metrics."""
from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import EmptyMatrix, MissingColumn, UnknownFeature, UnreadableFile
from .five import FiveEngine
from .features import LabeledTable

DISCRETE_COLUMNS = ("PKT_TYPE", "FLAGS", "NODE_NAME_FROM", "NODE_NAME_TO", "PKT_CLASS")
CONTINUOUS_COLUMNS = (
    "SRC_ADD", "DES_ADD", "PKT_ID", "FROM_NODE", "TO_NODE", "PKT_SIZE", "FID", "SEQ_NUMBER",
    "NUMBER_OF_PKT", "NUMBER_OF_BYTE", "PKT_IN", "PKT_OUT", "PKT_R", "PKT_DELAY_NODE", "PKT_RATE",
    "BYTE_RATE", "PKT_AVG_SIZE", "UTILIZATION", "PKT_DELAY", "PKT_SEND_TIME", "PKT_RECEIVED_TIME",
    "FIRST_PKT_SENT", "LAST_PKT_RECEIVED",
)
SCHEMA = DISCRETE_COLUMNS + CONTINUOUS_COLUMNS
DEFAULT_FEATURES = ("PKT_RATE", "BYTE_RATE", "UTILIZATION")

# spellings seen in public exports of the DDoS flow dataset
COLUMN_ALIASES = {
    "LASTPKT_RECEIVED": "LAST_PKT_RECEIVED",
    "LAST_PKT_RESEVED": "LAST_PKT_RECEIVED",
    "PKT_RESEVED_TIME": "PKT_RECEIVED_TIME",
}

NORMAL = "Normal"
CLASSES = ("Normal", "UDP-Flood", "Smurf", "SIDDOS", "HTTP-Flood")
_CLASS_KEYS = {re.sub(r"[^a-z]", "", c.lower()): c for c in CLASSES}


def normalize_column(name: str) -> str:
    key = re.sub(r"[\s_]+", "_", name.strip().upper())
    return COLUMN_ALIASES.get(key, key)


def normalize_class(label: str) -> str:
    key = re.sub(r"[^a-z]", "", label.lower())
    try:
        return _CLASS_KEYS[key]
    except KeyError:
        raise ValueError(f"unknown PKT_CLASS {label!r}") from None


@dataclass(frozen=True)
class FlowRecord:
    """One parsed flow row.  Missing continuous entries are ``None``."""

    values: Mapping[str, object]
    row: int = 0

    @property
    def pkt_class(self) -> str:
        return self.values["PKT_CLASS"]

    @property
    def is_normal(self) -> bool:
        return self.pkt_class == NORMAL

    def __getitem__(self, name):
        return self.values[normalize_column(name)]

    def missing(self, names: Iterable[str]) -> bool:
        return any(self.values.get(n) in (None, "") for n in names)


@dataclass
class LoadResult:
    records: list
    rejects: list = field(default_factory=list)  # (row number, reason)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def _parse_float(text: str):
    text = text.strip()
    if text == "":
        return None
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return value


def read_table(path):
    """Open a CSV and return (normalized header, row iterator, file handle)."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc.strerror or exc}") from None
    reader = csv.reader(fh)
    try:
        header = [normalize_column(h) for h in next(reader)]
    except StopIteration:
        fh.close()
        raise MissingColumn(f"{path}: empty file, no header") from None
    except (UnicodeDecodeError, csv.Error) as exc:
        fh.close()
        raise UnreadableFile(f"cannot parse {path}: {exc}") from None
    return header, reader, fh


def load_csv(path, schema: Sequence[str] = SCHEMA) -> LoadResult:
    """Parse a flow CSV.  Columns bind by (normalized) name, in any order.

    Bad rows go to ``rejects`` with their 1-based line number; empty cells
    are kept as missing and dealt with by :func:`filter_and_sort`.
    """
    header, reader, fh = read_table(path)
    with fh:
        missing = [c for c in schema if c not in header]
        if missing:
            raise MissingColumn(f"{path}: missing column(s) {', '.join(missing)}")
        pos = {c: header.index(c) for c in schema}
        continuous = [c for c in schema if c in CONTINUOUS_COLUMNS]
        discrete = [c for c in schema if c not in CONTINUOUS_COLUMNS]
        result = LoadResult([])
        try:
            for line_no, row in enumerate(reader, 2):
                if not row or all(not cell.strip() for cell in row):
                    continue
                if len(row) < len(header):
                    result.rejects.append((line_no, f"expected {len(header)} fields, got {len(row)}"))
                    continue
                values = {}
                try:
                    for col in continuous:
                        try:
                            values[col] = _parse_float(row[pos[col]])
                        except ValueError:
                            raise ValueError(f"{col}: not a number: {row[pos[col]]!r}") from None
                    for col in discrete:
                        values[col] = row[pos[col]].strip()
                    if "PKT_CLASS" in values:
                        values["PKT_CLASS"] = normalize_class(values["PKT_CLASS"])
                except ValueError as exc:
                    result.rejects.append((line_no, str(exc)))
                    continue
                result.records.append(FlowRecord(values, line_no))
        except (UnicodeDecodeError, csv.Error) as exc:
            raise UnreadableFile(f"cannot parse {path}: {exc}") from None
    return result


def write_csv(records: Sequence[FlowRecord], path, schema: Sequence[str] = SCHEMA) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(schema)
        for rec in records:
            w.writerow(["" if rec.values.get(c) is None else rec.values[c] for c in schema])


@dataclass(frozen=True)
class Pools:
    features: tuple[str, ...]
    normal: np.ndarray
    intrusion: np.ndarray

    @property
    def sizes(self) -> tuple[int, int]:
        return len(self.normal), len(self.intrusion)


def _check_features(features: Sequence[str]) -> tuple[str, ...]:
    names = tuple(normalize_column(f) for f in features)
    for n in names:
        if n not in CONTINUOUS_COLUMNS:
            raise UnknownFeature(n)
    return names


def filter_and_sort(records: Iterable[FlowRecord], selected: Sequence[str] = DEFAULT_FEATURES) -> Pools:
    """Split records into normal / intrusion pools of selected-feature vectors.

    Any attack class lands in the intrusion pool; rows with any missing
    entry are dropped.
    """
    names = _check_features(selected)
    normal, intrusion = [], []
    for rec in records:
        if rec.missing(rec.values) or rec.missing(names):
            continue
        vec = [rec.values[n] for n in names]
        (normal if rec.is_normal else intrusion).append(vec)
    k = len(names)
    return Pools(names, np.array(normal, dtype=float).reshape(-1, k), np.array(intrusion, dtype=float).reshape(-1, k))


def extract_intrusions(records: Sequence[FlowRecord], fraction: float = 0.1, seed: int = 0) -> list:
    """Keep every normal record and a seeded ``fraction`` of each attack class."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    rng = np.random.default_rng(seed)
    by_class: dict = {}
    for i, rec in enumerate(records):
        by_class.setdefault(rec.pkt_class, []).append(i)
    keep = []
    for cls in sorted(by_class):
        idx = by_class[cls]
        if cls == NORMAL:
            keep.extend(idx)
        else:
            n = int(round(fraction * len(idx)))
            keep.extend(rng.choice(idx, size=n, replace=False).tolist())
    return [records[i] for i in sorted(keep)]


def sample_pool(pool: np.ndarray, n: Optional[int], rng: np.random.Generator) -> np.ndarray:
    if n is None or n >= len(pool):
        return pool
    return pool[np.sort(rng.choice(len(pool), size=n, replace=False))]


def split_pools(pools: Pools, n_train: int = 5000, n_test: int = 5000, seed: int = 0) -> tuple[Pools, Pools]:
    """Disjoint seeded train / test draws of up to ``n_train`` and ``n_test`` rows per pool."""
    rng = np.random.default_rng(seed)
    train, test = {}, {}
    for name in ("normal", "intrusion"):
        pool = getattr(pools, name)
        order = rng.permutation(len(pool))
        n_tr = min(n_train, len(pool))
        train[name] = pool[np.sort(order[:n_tr])]
        test[name] = pool[np.sort(order[n_tr:n_tr + n_test])]
    return Pools(pools.features, **train), Pools(pools.features, **test)


def feature_table(records: Sequence[FlowRecord], features: Optional[Sequence[str]] = None,
                  binary: bool = True) -> LabeledTable:
    """Table for information-gain ranking; the class is Normal/Attack when ``binary``."""
    features = [normalize_column(f) for f in features] if features else [c for c in SCHEMA if c != "PKT_CLASS"]
    for f in features:
        if f not in SCHEMA or f == "PKT_CLASS":
            raise UnknownFeature(f)
    cols = {f: [rec.values.get(f) if rec.values.get(f) != "" else None for rec in records] for f in features}
    labels = [(NORMAL if rec.is_normal else "Attack") if binary else rec.pkt_class for rec in records]
    return LabeledTable(cols, labels)


# -- evaluation -------------------------------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "tn", "fp", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class Metrics:
    """Detection rates; ``None`` marks a rate whose denominator is zero."""

    dr: float
    tpr: Optional[float]
    tnr: Optional[float]
    fpr: Optional[float]
    fnr: Optional[float]


def evaluate(engine: FiveEngine, normal_pool, intrusion_pool) -> ConfusionMatrix:
    """Run every pooled observation through the engine and count outcomes."""
    normal_alerts = engine.alerts(normal_pool) if len(normal_pool) else np.zeros(0, bool)
    intrusion_alerts = engine.alerts(intrusion_pool) if len(intrusion_pool) else np.zeros(0, bool)
    fp = int(np.count_nonzero(normal_alerts))
    tp = int(np.count_nonzero(intrusion_alerts))
    return ConfusionMatrix(tp=tp, tn=len(normal_alerts) - fp, fp=fp, fn=len(intrusion_alerts) - tp)


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den else None


def metrics(cm: ConfusionMatrix) -> Metrics:
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix has no records")
    return Metrics(
        dr=(cm.tp + cm.tn) / cm.total,
        tpr=_ratio(cm.tp, cm.tp + cm.fn),
        tnr=_ratio(cm.tn, cm.tn + cm.fp),
        fpr=_ratio(cm.fp, cm.fp + cm.tn),
        fnr=_ratio(cm.fn, cm.tp + cm.fn),
    )


def report_dict(cm: ConfusionMatrix, m: Optional[Metrics] = None) -> dict:
    m = m or metrics(cm)
    return {"tp": cm.tp, "tn": cm.tn, "fp": cm.fp, "fn": cm.fn,
            "dr": m.dr, "tpr": m.tpr, "tnr": m.tnr, "fpr": m.fpr, "fnr": m.fnr}


def report_json(cm: ConfusionMatrix) -> str:
    return json.dumps(report_dict(cm), indent=2, sort_keys=False) + "\n"


def _fmt(v: Optional[float], digits=4) -> str:
    return "undefined" if v is None else f"{v:.{digits}f}"


def report_table(cm: ConfusionMatrix) -> str:
    """Plain-text counts table plus the derived rates."""
    m = metrics(cm)
    rows = [
        ("", "Normal", "Intrusion", "Total"),
        ("Normal", cm.tn, cm.fp, cm.tn + cm.fp),
        ("Intrusion", cm.fn, cm.tp, cm.fn + cm.tp),
        ("Total", cm.tn + cm.fn, cm.fp + cm.tp, cm.total),
    ]
    lines = ["Test scenario results (rows: actual, columns: inferred)"]
    lines += [f"{r[0]:<10}{r[1]:>10}{r[2]:>11}{r[3]:>8}" for r in rows]
    lines += [
        "",
        "Alert response   Intrusion prediction   Normal prediction",
        f"Intrusion        TPR = {_fmt(m.tpr):<17}FNR = {_fmt(m.fnr)}",
        f"Normal           FPR = {_fmt(m.fpr):<17}TNR = {_fmt(m.tnr)}",
        "",
        f"Detection rate   DR = {_fmt(m.dr)} ({m.dr * 100:.2f}%)",
    ]
    return "\n".join(lines)
