"""Experiment rows, deterministic output and seed derivation."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "ExperimentRecord",
    "RECORD_COLUMNS",
    "derive_seed",
    "format_value",
    "records_to_csv",
    "records_to_json",
    "json_text",
    "emit",
    "read_csv",
    "run_tasks",
    "resolve_workers",
]

RECORD_COLUMNS = ("family", "n", "D", "noise_kind", "param", "estimator", "value", "stderr", "seed")


@dataclass(frozen=True)
class ExperimentRecord:
    """One measured quantity at one grid point."""

    family: str
    n: int
    D: int
    noise_kind: str
    param: float
    estimator: str
    value: float
    stderr: float
    seed: int


def derive_seed(master: int, *key: int) -> int:
    """Independent 32-bit seed for work item ``key`` under ``master``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1)[0])


def format_value(v: Any) -> str:
    """Text form used in every output file; floats use the shortest exact repr."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def _as_row(rec) -> dict:
    if dataclasses.is_dataclass(rec):
        return {f.name: getattr(rec, f.name) for f in dataclasses.fields(rec)}
    return dict(rec)


def _columns(rows: list[dict], columns: Sequence[str] | None) -> list[str]:
    if columns is not None:
        return list(columns)
    if not rows:
        return list(RECORD_COLUMNS)
    cols = list(rows[0])
    for r in rows[1:]:
        if list(r) != cols:
            raise ValueError("records are not homogeneous")
    return cols


def records_to_csv(records: Iterable, columns: Sequence[str] | None = None) -> str:
    rows = [_as_row(r) for r in records]
    cols = _columns(rows, columns)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([format_value(r.get(c)) for c in cols])
    return buf.getvalue()


def _json_default(v):
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _json_clean(obj):
    # JSON has no inf/nan; write them as strings
    if isinstance(obj, dict):
        return {str(k): _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if math.isnan(f) or math.isinf(f):
            return format_value(f)
        return f
    return obj


def json_text(obj) -> str:
    """Indented JSON with numpy scalars converted and inf/nan as strings."""
    return json.dumps(_json_clean(obj), indent=1, default=_json_default) + "\n"


def records_to_json(records: Iterable) -> str:
    rows = [_as_row(r) for r in records]
    _columns(rows, None)
    return json_text(rows)


def emit(records: Iterable, fmt: str, path, columns: Sequence[str] | None = None) -> str:
    """Write records as CSV or JSON and return the sha256 of the bytes written."""
    records = list(records)
    if fmt == "csv":
        text = records_to_csv(records, columns)
    elif fmt == "json":
        text = records_to_json(records)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    data = text.encode()
    with open(path, "wb") as fh:
        fh.write(data)
    return hashlib.sha256(data).hexdigest()


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def resolve_workers(workers: int | None) -> int:
    """Explicit value, else ``EMLAB_WORKERS``, else 1."""
    if workers is None:
        env = os.environ.get("EMLAB_WORKERS")
        workers = int(env) if env else 1
    if workers < 1:
        raise ValueError("workers must be at least 1")
    return workers


def run_tasks(fn: Callable, tasks: Sequence, workers: int | None = 1) -> list:
    """``[fn(t) for t in tasks]``, optionally on a process pool.

    Results come back in task order, so the outcome never depends on the
    number of workers.
    """
    workers = resolve_workers(workers)
    tasks = list(tasks)
    if workers == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=chunk))
