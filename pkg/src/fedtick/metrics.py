"""Per-round metric rows and their CSV form."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import astuple, dataclass, fields

import numpy as np

COLUMNS = (
    "round",
    "wall_seconds",
    "cum_min_train_loss",
    "cum_max_val_acc",
    "k_r",
    "eta_r",
    "sgd_steps_cum",
    "relative_sgd_steps",
)


@dataclass(frozen=True)
class MetricRow:
    round: int
    wall_seconds: float
    cum_min_train_loss: float
    cum_max_val_acc: float
    k_r: float
    eta_r: float
    sgd_steps_cum: float
    relative_sgd_steps: float


assert tuple(f.name for f in fields(MetricRow)) == COLUMNS


def rows_from_trace(trace) -> list[MetricRow]:
    """Cumulative best train loss / val accuracy per round, plus compute accounting.

    ``relative_sgd_steps`` is the step count so far divided by what ``k0``
    steps per participant per round would have cost.
    """
    cfg = trace.config
    has_acc = cfg.get("val_metric") == "top1-accuracy"
    baseline = cfg["k0"] * cfg["n_sample"]
    best_loss = math.inf
    best_acc = math.nan
    rows = []
    for rec in trace.records:
        best_loss = min(best_loss, rec.mean_first_step_loss)
        if has_acc and rec.val_metric is not None:
            best_acc = rec.val_metric if math.isnan(best_acc) else max(best_acc, rec.val_metric)
        rows.append(
            MetricRow(
                round=rec.r,
                wall_seconds=rec.wall_seconds_cum,
                cum_min_train_loss=best_loss,
                cum_max_val_acc=best_acc,
                k_r=rec.k_r,
                eta_r=rec.eta_r,
                sgd_steps_cum=rec.sgd_steps_cum,
                relative_sgd_steps=rec.sgd_steps_cum / (baseline * rec.r),
            )
        )
    return rows


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def _parse(text: str):
    if any(ch in text for ch in ".eEnN"):
        return float(text)
    return int(text)


def dumps(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow([_fmt(v) for v in astuple(row)])
    return buf.getvalue()


def loads(text: str) -> list[MetricRow]:
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != COLUMNS:
        raise ValueError(f"unexpected CSV header {header}; expected {COLUMNS}")
    return [MetricRow(*(_parse(v) for v in line)) for line in reader if line]


def write_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(dumps(rows))


def read_csv(path) -> list[MetricRow]:
    with open(path, newline="") as fh:
        return loads(fh.read())


def mean_rows(per_seed: list[list[MetricRow]]) -> list[MetricRow]:
    """Column-wise arithmetic mean across seeds; every run must have the same rounds."""
    if not per_seed:
        raise ValueError("need at least one run")
    n_rounds = {len(rows) for rows in per_seed}
    if len(n_rounds) != 1:
        raise ValueError(f"runs have different lengths: {sorted(n_rounds)}")
    table = np.array([[astuple(row) for row in rows] for rows in per_seed], dtype=np.float64)
    means = table.mean(axis=0)
    return [MetricRow(int(row[0]), *(float(v) for v in row[1:])) for row in means]


def check_monotone(rows) -> None:
    """Raise if the cumulative columns move the wrong way (NaN entries ignored)."""
    loss = [r.cum_min_train_loss for r in rows if not math.isnan(r.cum_min_train_loss)]
    acc = [r.cum_max_val_acc for r in rows if not math.isnan(r.cum_max_val_acc)]
    if any(b > a for a, b in zip(loss, loss[1:])):
        raise AssertionError("cum_min_train_loss increased")
    if any(b < a for a, b in zip(acc, acc[1:])):
        raise AssertionError("cum_max_val_acc decreased")
