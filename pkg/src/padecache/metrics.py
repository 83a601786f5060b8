"""Error and similarity measures against the full-computation oracle,
PCA trajectory projection, and Padé-vs-Taylor run comparison."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigMismatch, EmptySequence, LengthMismatch
from .scheduler import RunResult
from .simulator import OracleTrajectory
from .tensor import NORM_EPS, TensorLike, as_tensor, check_same_shape, cosine_similarity

PSNR_CAP_DB = 99.0


def relative_l2(pred: TensorLike, truth: TensorLike) -> float:
    pred, truth = as_tensor(pred), as_tensor(truth)
    check_same_shape(pred, truth)
    return float(np.linalg.norm(pred.data - truth.data) / max(np.linalg.norm(truth.data), NORM_EPS))


def _stack(seq: Sequence[TensorLike]) -> np.ndarray:
    tensors = [as_tensor(v) for v in seq]
    if not tensors:
        raise EmptySequence("empty sequence")
    check_same_shape(*tensors)
    return np.stack([t.data for t in tensors])


def psnr(pred_sequence: Sequence[TensorLike], truth_sequence: Sequence[TensorLike]) -> float:
    """Peak signal-to-noise ratio in dB over flattened feature sequences.

    The peak is the dynamic range (max - min) of the whole truth sequence. A
    constant truth sequence falls back to a peak of 1. Results are capped at
    99 dB once the MSE drops below ``1e-12 * peak**2``.
    """
    if len(pred_sequence) != len(truth_sequence):
        raise LengthMismatch(f"{len(pred_sequence)} predictions vs {len(truth_sequence)} truths")
    pred, truth = _stack(pred_sequence), _stack(truth_sequence)
    if pred.shape != truth.shape:
        raise LengthMismatch(f"shape {pred.shape} != {truth.shape}")
    peak = float(truth.max() - truth.min()) or 1.0
    mse = float(np.mean((pred - truth) ** 2))
    if mse < 1e-12 * peak**2:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(peak**2 / mse))


@dataclass(frozen=True)
class SimilarityCurves:
    residual: list[float]
    raw: list[float]


def similarity_curves(run: RunResult, oracle: OracleTrajectory) -> SimilarityCurves:
    """Per-step cosine of the run's residuals/outputs against the oracle's."""
    n = len(run.outputs)
    if n != len(oracle.outputs):
        raise LengthMismatch(f"run has {n} steps, oracle has {len(oracle.outputs)}")
    return SimilarityCurves(
        residual=[cosine_similarity(a, b) for a, b in zip(run.residuals, oracle.residuals)],
        raw=[cosine_similarity(a, b) for a, b in zip(run.outputs, oracle.outputs)],
    )


def annotate_traces(run: RunResult, oracle: OracleTrajectory) -> RunResult:
    """Fill the per-step error fields of each trace from the oracle."""
    if len(run.traces) != len(oracle.outputs):
        raise LengthMismatch(f"run has {len(run.traces)} steps, oracle has {len(oracle.outputs)}")
    traces = [
        replace(
            tr,
            output_error_l2=float(np.linalg.norm(y.data - ys.data)),
            output_cosine=cosine_similarity(y, ys),
            residual_cosine=cosine_similarity(r, rs),
        )
        for tr, y, ys, r, rs in zip(run.traces, run.outputs, oracle.outputs, run.residuals, oracle.residuals)
    ]
    return run.with_traces(traces)


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class StepMetrics:
    step: int
    output_rel_l2: float
    output_cosine: float
    residual_cosine_vs_prev: float
    raw_cosine_vs_prev: float


@dataclass(frozen=True)
class RunSummary:
    final_rel_l2: float
    mean_rel_l2: float
    psnr_db: float
    compute_ratio: float
    skip_count: int


@dataclass(frozen=True)
class RunReport:
    per_step: list[StepMetrics]
    summary: RunSummary
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"summary": asdict(self.summary), "metadata": dict(self.metadata)}


def build_report(run: RunResult, oracle: OracleTrajectory, metadata: dict | None = None) -> RunReport:
    """Summarize a scheduled run against its oracle.

    ``*_vs_prev`` cosines compare step ``s`` with step ``s - 1`` of the same
    run (temporal similarity) and are NaN at step 0.
    """
    if len(run.outputs) != len(oracle.outputs):
        raise LengthMismatch(f"run has {len(run.outputs)} steps, oracle has {len(oracle.outputs)}")
    per_step = []
    for s, (y, ys) in enumerate(zip(run.outputs, oracle.outputs)):
        if s == 0:
            rc = yc = math.nan
        else:
            rc = cosine_similarity(run.residuals[s], run.residuals[s - 1])
            yc = cosine_similarity(y, run.outputs[s - 1])
        per_step.append(StepMetrics(s, relative_l2(y, ys), cosine_similarity(y, ys), rc, yc))
    rels = [m.output_rel_l2 for m in per_step]
    truth = oracle.outputs
    summary = RunSummary(
        final_rel_l2=rels[-1],
        mean_rel_l2=float(np.mean(rels)),
        psnr_db=psnr(run.outputs, truth),
        compute_ratio=run.stats.compute_ratio,
        skip_count=run.stats.predicted,
    )
    meta = dict(metadata or {})
    meta.setdefault("psnr_peak", float(_stack(truth).max() - _stack(truth).min()) or 1.0)
    meta.setdefault("steps", len(per_step))
    return RunReport(per_step, summary, meta)


# ------------------------------------------------------------- comparison

COMPARED = ("final_rel_l2", "mean_rel_l2", "psnr_db", "compute_ratio")
HIGHER_IS_BETTER = {"psnr_db", "compute_ratio"}
IDENTITY_KEYS = ("family", "seed", "steps", "dim")


@dataclass(frozen=True)
class ComparisonSummary:
    deltas: dict[str, float]  # pade minus taylor
    winners: dict[str, str]  # "pade", "taylor" or "tie"


def compare_runs(pade_report: RunReport, taylor_report: RunReport) -> ComparisonSummary:
    for key in IDENTITY_KEYS:
        a, b = pade_report.metadata.get(key), taylor_report.metadata.get(key)
        if a != b:
            raise ConfigMismatch(f"reports disagree on {key}: {a!r} vs {b!r}")
    deltas, winners = {}, {}
    for name in COMPARED:
        p, t = getattr(pade_report.summary, name), getattr(taylor_report.summary, name)
        deltas[name] = p - t
        if p == t:
            winners[name] = "tie"
        elif (p > t) == (name in HIGHER_IS_BETTER):
            winners[name] = "pade"
        else:
            winners[name] = "taylor"
    return ComparisonSummary(deltas, winners)


def aggregate_comparisons(comparisons: Sequence[ComparisonSummary]) -> dict[str, dict[str, float]]:
    """Mean and median of each delta across a batch of comparisons."""
    if not comparisons:
        raise EmptySequence("no comparisons to aggregate")
    out = {}
    for name in COMPARED:
        vals = np.array([c.deltas[name] for c in comparisons])
        out[name] = {"mean": float(vals.mean()), "median": float(np.median(vals))}
    out["pade_wins_final"] = {"count": sum(c.winners["final_rel_l2"] == "pade" for c in comparisons)}
    return out


# -------------------------------------------------------------------- PCA


def _power_iteration(mat: np.ndarray, start: np.ndarray, ortho: np.ndarray | None, tol: float, max_iter: int):
    v = start
    if ortho is not None:
        v = v - ortho * (ortho @ v)
    v = v / np.linalg.norm(v)
    # below this the product is rounding noise, not variance
    floor = 1e-12 * max(float(np.abs(mat).max()), 1e-300)
    for _ in range(max_iter):
        w = mat @ v
        if ortho is not None:
            w = w - ortho * (ortho @ w)
        nw = np.linalg.norm(w)
        if nw < floor:
            # no variance left in this subspace; any orthogonal unit vector will do
            return v, 0.0
        w = w / nw
        done = np.linalg.norm(w - v) < tol
        v = w
        if done:
            break
    return v, float(v @ mat @ v)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    return -v if v[np.argmax(np.abs(v))] < 0 else v


def pca_directions(sequence: Sequence[TensorLike], tol: float = 1e-9, max_iter: int = 1000):
    """Top-2 principal directions and their variances (power iteration + deflation).

    Returns ``(mean, directions, variances)`` with ``directions`` of shape
    ``(2, dim)``. Each direction's largest-magnitude entry is positive.
    """
    X = _stack(sequence)
    if X.shape[0] < 3:
        raise LengthMismatch(f"PCA needs at least 3 vectors, got {X.shape[0]}")
    mean = X.mean(axis=0)
    Xc = X - mean
    dim = X.shape[1]
    cov = Xc.T @ Xc / X.shape[0]
    start = np.random.default_rng(0).standard_normal(dim)
    if dim == 1:
        # a single axis: the second direction is left as zero
        return mean, np.array([[1.0], [0.0]]), np.array([float(cov[0, 0]), 0.0])
    v1, l1 = _power_iteration(cov, start, None, tol, max_iter)
    v1 = _fix_sign(v1)
    deflated = cov - l1 * np.outer(v1, v1)
    v2, l2 = _power_iteration(deflated, start[::-1].copy(), v1, tol, max_iter)
    v2 = _fix_sign(v2)
    return mean, np.stack([v1, v2]), np.array([l1, max(l2, 0.0)])


def pca_project(sequence: Sequence[TensorLike], tol: float = 1e-9, max_iter: int = 1000) -> np.ndarray:
    """Per-vector 2-D coordinates on the top two principal directions.

    Identical input vectors have no principal directions; all coordinates are
    then zero.
    """
    X = _stack(sequence)
    if X.shape[0] < 3:
        raise LengthMismatch(f"PCA needs at least 3 vectors, got {X.shape[0]}")
    Xc = X - X.mean(axis=0)
    if not np.any(np.abs(Xc) > 0):
        return np.zeros((X.shape[0], 2))
    _, dirs, _ = pca_directions(sequence, tol, max_iter)
    return Xc @ dirs.T
