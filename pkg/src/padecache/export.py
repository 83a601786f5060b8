"""File emission: fixed-header CSVs and JSON written atomically with
9-significant-digit numbers so repeated runs are byte-identical."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .metrics import RunReport, SimilarityCurves
from .scheduler import RunResult

TRACE_HEADER = ("step", "t", "decision", "reason", "tsi", "sigma", "full_evals_so_far")
SWEEP_HEADER = ("value", "skip_count", "compute_ratio", "final_rel_l2", "psnr")
PCA_HEADER = ("step", "decision", "p1", "p2")
SIMILARITY_HEADER = ("step", "residual_cosine", "raw_cosine")
REPORT_STEPS_HEADER = ("step", "output_rel_l2", "output_cosine", "residual_cosine_vs_prev", "raw_cosine_vs_prev")


def fmt(value: Any) -> str:
    """CSV cell text; missing or NaN values become empty cells."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "" if math.isnan(value) else f"{float(value):.9g}"
    return str(value)


def _round(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return None
        return x if math.isinf(x) else float(f"{x:.9g}")
    return obj


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    atomic_write_text(path, "\n".join(lines) + "\n")


def dumps_json(obj: Any) -> str:
    return json.dumps(_round(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj: Any) -> None:
    atomic_write_text(path, dumps_json(obj))


def trace_rows(run: RunResult):
    for tr in run.traces:
        d = tr.decision
        yield (tr.step, tr.t, d.action.value, d.reason.value, d.tsi_value, tr.sigma, tr.full_evals_so_far)


def write_trace(path, run: RunResult) -> None:
    write_csv(path, TRACE_HEADER, trace_rows(run))


def write_similarity(path, curves: SimilarityCurves) -> None:
    rows = ((s, r, y) for s, (r, y) in enumerate(zip(curves.residual, curves.raw)))
    write_csv(path, SIMILARITY_HEADER, rows)


def write_pca(path, coords: np.ndarray, steps: Sequence[int], labels: Sequence[str]) -> None:
    write_csv(path, PCA_HEADER, ((s, lab, p[0], p[1]) for s, lab, p in zip(steps, labels, coords)))


def report_dict(report: RunReport) -> dict:
    d = report.to_dict()
    d["per_step"] = [
        {name: getattr(m, name) for name in REPORT_STEPS_HEADER} for m in report.per_step
    ]
    return d


def write_report(path, report: RunReport) -> None:
    write_json(path, report_dict(report))


def write_report_steps(path, report: RunReport) -> None:
    write_csv(path, REPORT_STEPS_HEADER, ([getattr(m, n) for n in REPORT_STEPS_HEADER] for m in report.per_step))
