"""Reading and writing run artifacts.

Every writer is deterministic: floats are printed with ``repr`` (shortest
string that round-trips), JSON keys are sorted and NaN becomes ``null``, so
identical runs give byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analysis import TrialMetrics

TRAINING_LOG_COLUMNS = ("trial", "loss", "epsilon", "rms_cp", "rms_tp")


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    return "nan" if math.isnan(f) else repr(f)


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, NaN/inf to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def _write_rows(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_timeseries_csv(path, t: np.ndarray, x: np.ndarray, v: np.ndarray) -> Path:
    """Group trajectory as columns ``t, x1, v1, x2, v2, ...`` (players 1-based)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if x.shape != v.shape or x.shape[0] != len(t):
        raise ValueError("t, x and v must share the sample axis and x, v the same shape")
    n = x.shape[1]
    header = ["t"] + [f"{c}{k + 1}" for k in range(n) for c in ("x", "v")]
    inter = np.empty((x.shape[0], 2 * n))
    inter[:, 0::2], inter[:, 1::2] = x, v
    return _write_rows(path, header, (np.concatenate(([ti], row)) for ti, row in zip(t, inter)))


def read_timeseries_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`write_timeseries_csv`: returns ``(t, x, v)``."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if not header or header[0] != "t" or len(header) % 2 != 1:
        raise ValueError(f"{path}: not a group time-series file")
    n = (len(header) - 1) // 2
    expected = ["t"] + [f"{c}{k + 1}" for k in range(n) for c in ("x", "v")]
    if header != expected:
        raise ValueError(f"{path}: unexpected columns {header}")
    data = np.array(body, dtype=float).reshape(len(body), len(header))
    return data[:, 0], data[:, 1::2], data[:, 2::2]


def write_training_log_csv(path, log) -> Path:
    """One row per training trial: trial, mean loss, epsilon, RMS pair."""
    return _write_rows(path, TRAINING_LOG_COLUMNS, (r.row() for r in log))


def read_training_log_csv(path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != TRAINING_LOG_COLUMNS:
        raise ValueError(f"{path}: not a training log")
    data = np.array(rows[1:], dtype=float).reshape(-1, len(TRAINING_LOG_COLUMNS))
    return {name: data[:, i] for i, name in enumerate(TRAINING_LOG_COLUMNS)}


def aggregate(rows: Sequence[dict]) -> dict:
    """Mean and sample standard deviation of every numeric key."""
    out = {}
    for key in rows[0]:
        vals = np.array([r[key] for r in rows], dtype=float)
        sd = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        out[key] = {"mean": float(vals.mean()), "sd": sd}
    return out


def metrics_document(per_trial: Sequence[TrialMetrics], **extra) -> dict:
    rows = [m.summary() for m in per_trial]
    return {**extra, "per_trial": rows, "aggregate": aggregate(rows)}


def write_rows_csv(path, rows: Sequence[dict]) -> Path:
    """Flat table of dicts sharing the same keys, in the first row's key order."""
    header = list(rows[0])
    return _write_rows(path, header, ([r[k] for k in header] for r in rows))
