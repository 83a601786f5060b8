"""The cached denoising loop: warm-up, per-interval full steps, gated skipping."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Literal

from .errors import ConfigError, ShapeMismatch
from .gate import Action, GateDecision, Reason, TsiVariant, decide, tsi
from .predictor import (
    DEFAULT_LAMBDA,
    IndexOrder,
    Phase,
    PhaseConfig,
    reconstruct_output,
    step_aware_predict_with_diagnostics,
    taylor_extrapolate,
    taylor_predict,
)
from .simulator import ModelCall, euler_step
from .tensor import FeatureTensor, TensorLike, as_tensor

HistorySource = Literal["any", "computed_only"]
ReconstructionBase = Literal["current_input", "previous_output"]
TaylorTarget = Literal["output", "residual"]
TaylorHistory = Literal["rolling", "computed"]


@dataclass(frozen=True)
class CachePolicy:
    total_steps: int = 20
    interval: int = 4
    theta: float = 1.0
    lam: float = DEFAULT_LAMBDA
    phase: PhaseConfig = field(default_factory=PhaseConfig)
    tsi_variant: TsiVariant = TsiVariant.ALIGNMENT
    warmup: int = 3
    history_capacity: int = 3
    taylor_order: int = 2
    history_source: HistorySource = "any"
    reconstruction_base: ReconstructionBase = "current_input"
    index_order: IndexOrder = "oldest_first"
    # baseline-only knobs
    taylor_target: TaylorTarget = "output"
    taylor_history: TaylorHistory = "rolling"

    def __post_init__(self):
        object.__setattr__(self, "tsi_variant", TsiVariant(self.tsi_variant))
        if self.total_steps < 1 or self.interval < 1 or self.warmup < 1:
            raise ConfigError("total_steps, interval and warmup must be positive")
        if self.total_steps < self.warmup:
            raise ConfigError(f"total_steps={self.total_steps} < warmup={self.warmup}")
        if self.history_capacity < 1:
            raise ConfigError("history_capacity must be positive")
        if not self.lam > 0:
            raise ConfigError(f"lambda must be positive, got {self.lam}")
        if math.isnan(self.theta):
            raise ConfigError("theta must not be NaN")
        if self.taylor_order not in (1, 2):
            raise ConfigError(f"taylor_order must be 1 or 2, got {self.taylor_order}")
        if self.history_source not in ("any", "computed_only"):
            raise ConfigError(f"bad history_source {self.history_source!r}")
        if self.reconstruction_base not in ("current_input", "previous_output"):
            raise ConfigError(f"bad reconstruction_base {self.reconstruction_base!r}")
        if self.index_order not in ("oldest_first", "newest_first"):
            raise ConfigError(f"bad index_order {self.index_order!r}")
        if self.taylor_target not in ("output", "residual"):
            raise ConfigError(f"bad taylor_target {self.taylor_target!r}")
        if self.taylor_history not in ("rolling", "computed"):
            raise ConfigError(f"bad taylor_history {self.taylor_history!r}")

    def check_pade_path(self):
        if self.warmup < 3 or self.history_capacity < 3:
            raise ConfigError("the rational predictor needs warmup >= 3 and history_capacity >= 3")


class Origin(enum.Enum):
    COMPUTED = "computed"
    PREDICTED = "predicted"


@dataclass(frozen=True)
class HistoryEntry:
    residual: FeatureTensor
    step: int
    origin: Origin


@dataclass(frozen=True)
class ResidualHistory:
    """Bounded, immutable buffer of recent residuals (oldest first)."""

    capacity: int = 3
    entries: tuple[HistoryEntry, ...] = ()

    def __len__(self):
        return len(self.entries)

    def push(self, entry: HistoryEntry) -> ResidualHistory:
        if self.entries:
            newest = self.entries[-1]
            if entry.residual.shape != newest.residual.shape:
                raise ShapeMismatch(f"residual shape {entry.residual.shape} != {newest.residual.shape}")
            if entry.step <= newest.step:
                raise ValueError(f"step {entry.step} is not after newest step {newest.step}")
        kept = (self.entries + (entry,))[-self.capacity:]
        return ResidualHistory(self.capacity, kept)

    def newest(self) -> HistoryEntry:
        return self.entries[-1]

    def residuals(self, n: int | None = None) -> list[FeatureTensor]:
        picked = self.entries if n is None else self.entries[-n:]
        return [e.residual for e in picked]


def push_residual(history: ResidualHistory, entry: HistoryEntry) -> ResidualHistory:
    return history.push(entry)


@dataclass(frozen=True)
class StepTrace:
    step: int
    t: int
    decision: GateDecision
    sigma: float | None
    phase: Phase | None
    full_evals_so_far: int
    # filled by metrics.annotate_traces
    output_error_l2: float = math.nan
    output_cosine: float = math.nan
    residual_cosine: float = math.nan

    @property
    def predicted(self) -> bool:
        return self.decision.predicts


@dataclass(frozen=True)
class ComputeStats:
    full_evals: int
    predicted: int

    @property
    def total_steps(self) -> int:
        return self.full_evals + self.predicted

    @property
    def compute_ratio(self) -> float:
        return self.total_steps / self.full_evals


@dataclass(frozen=True)
class RunResult:
    traces: list[StepTrace]
    outputs: list[FeatureTensor]
    residuals: list[FeatureTensor]
    inputs: list[FeatureTensor]
    stats: ComputeStats

    def with_traces(self, traces: list[StepTrace]) -> RunResult:
        return replace(self, traces=traces)


def _forced_reason(s: int, policy: CachePolicy) -> Reason | None:
    if s < policy.warmup:
        return Reason.WARM_UP
    if s % policy.interval == 0:
        return Reason.INTERVAL_START
    return None


def run(policy: CachePolicy, model: ModelCall, x0: TensorLike) -> RunResult:
    """Run the gated, residual-predicting loop for ``policy.total_steps`` steps.

    Loop index ``s`` counts up from the noisiest step; diffusion time is
    ``t = T - 1 - s``. Full steps cache ``y - x``; skipped steps forecast the
    residual from the newest cached ones and add it to the reconstruction base.
    """
    policy.check_pade_path()
    T = policy.total_steps
    x = as_tensor(x0)
    history = ResidualHistory(policy.history_capacity)
    traces, outputs, residuals, inputs = [], [], [], []
    full = 0
    for s in range(T):
        t = T - 1 - s
        reason = _forced_reason(s, policy)
        if reason is not None:
            decision = GateDecision.forced(reason)
        elif len(history) < 3:
            decision = GateDecision.forced(Reason.INSUFFICIENT_HISTORY)
        else:
            decision = decide(tsi(*history.residuals(3), policy.tsi_variant), policy.theta)

        sigma = phase = None
        if decision.action is Action.PREDICT:
            r, diag = step_aware_predict_with_diagnostics(
                history.residuals(3), t, T, policy.phase, policy.lam, policy.index_order
            )
            sigma, phase = diag.sigma, diag.phase
            base = x if policy.reconstruction_base == "current_input" or not outputs else outputs[-1]
            y = reconstruct_output(base, r)
            if policy.history_source == "any":
                history = history.push(HistoryEntry(r, s, Origin.PREDICTED))
        else:
            y = model.evaluate(x, s)
            if y.shape != x.shape:
                raise ShapeMismatch(f"model returned shape {y.shape} for input {x.shape}")
            r = FeatureTensor(y.data - x.data, y.shape)
            history = history.push(HistoryEntry(r, s, Origin.COMPUTED))
            full += 1

        traces.append(StepTrace(s, t, decision, sigma, phase, full))
        inputs.append(x)
        outputs.append(y)
        residuals.append(r)
        x = euler_step(x, y, T)

    return RunResult(traces, outputs, residuals, inputs, ComputeStats(full, T - full))


def run_taylor_baseline(policy: CachePolicy, model: ModelCall, x0: TensorLike) -> RunResult:
    """Fixed-interval baseline that extrapolates features with finite differences.

    Warm-up and interval starts are computed; every other step is predicted
    (no gate) with an order-``taylor_order`` polynomial extrapolation. By
    default the extrapolated quantity is the raw block output and the history
    is the last ``taylor_order + 1`` outputs at unit spacing, predicted ones
    included (``taylor_history="rolling"``). ``taylor_history="computed"``
    extrapolates through the most recent fully computed steps at their real
    spacing instead; ``taylor_target="residual"`` extrapolates ``y - x``.
    Predicted steps carry ``tsi_value = nan``.
    """
    T, order = policy.total_steps, policy.taylor_order
    on_residual = policy.taylor_target == "residual"
    rolling = policy.taylor_history == "rolling"
    x = as_tensor(x0)
    traces, outputs, residuals, inputs = [], [], [], []
    known, known_steps = [], []  # extrapolation samples
    full = 0
    for s in range(T):
        t = T - 1 - s
        reason = _forced_reason(s, policy)
        if reason is None and len(known) < order + 1:
            reason = Reason.INSUFFICIENT_HISTORY
        if reason is None:
            decision = GateDecision(Action.PREDICT, math.nan, Reason.THRESHOLD_PASS)
            if rolling:
                q = taylor_predict(known[-(order + 1):], order)
            else:
                q = taylor_extrapolate(known, known_steps, s, order)
            if on_residual:
                r, y = q, FeatureTensor(x.data + q.data, x.shape)
            else:
                r, y = FeatureTensor(q.data - x.data, x.shape), q
        else:
            decision = GateDecision.forced(reason)
            y = model.evaluate(x, s)
            r = FeatureTensor(y.data - x.data, y.shape)
            full += 1
        if rolling or reason is not None:
            known.append(r if on_residual else y)
            known_steps.append(s)
        traces.append(StepTrace(s, t, decision, None, None, full))
        inputs.append(x)
        outputs.append(y)
        residuals.append(r)
        x = euler_step(x, y, T)

    return RunResult(traces, outputs, residuals, inputs, ComputeStats(full, T - full))
