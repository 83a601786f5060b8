"""Residual forecasting: stability-modulated [2/1] rational predictor, the
general rational form, three-phase dispatch, and a finite-difference Taylor
baseline used for comparison.

History arguments are always ordered oldest -> newest. In the [2/1] helpers
``r3`` is the oldest cached residual, ``r2`` the middle one and ``r1`` the
most recent.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import CoeffArityMismatch, InsufficientHistory, OutOfRange, UnsupportedOrder
from .tensor import (
    DIV_EPS,
    NORM_EPS,
    FeatureTensor,
    TensorLike,
    add,
    as_tensor,
    check_same_shape,
    guarded_divide,
)

IndexOrder = Literal["oldest_first", "newest_first"]

DEFAULT_LAMBDA = 10.0
# exp underflow floor, keeps the stability factor strictly positive
SIGMA_FLOOR = float(np.finfo(np.float64).tiny)


@dataclass(frozen=True)
class PadeCoefficients:
    b0: float
    b1: float
    a1: float
    sigma: float
    lam: float


@dataclass(frozen=True)
class RationalCoeffs:
    """Numerator weights ``b_0..b_m`` and denominator weights for the rest of the history."""

    numerator: tuple[float, ...]
    denominator: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "numerator", tuple(float(b) for b in self.numerator))
        object.__setattr__(self, "denominator", tuple(float(a) for a in self.denominator))
        if not self.numerator:
            raise CoeffArityMismatch("numerator must have at least one coefficient")

    @property
    def history_length(self) -> int:
        return len(self.numerator) + len(self.denominator)

    @classmethod
    def from_pade(cls, c: PadeCoefficients) -> RationalCoeffs:
        return cls((c.b0, c.b1), (c.a1,))


@dataclass(frozen=True)
class PhaseConfig:
    early_frac: float = 0.7
    late_frac: float = 0.2
    alpha1: float = 0.7
    alpha2: float = 0.3
    beta: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.late_frac < self.early_frac < 1.0):
            raise OutOfRange(
                f"need 0 < late_frac < early_frac < 1, got {self.late_frac}, {self.early_frac}"
            )
        if abs(self.alpha1 + self.alpha2 - 1.0) > 1e-12:
            raise OutOfRange(f"alpha1 + alpha2 must equal 1, got {self.alpha1 + self.alpha2}")


class Phase(enum.Enum):
    EARLY = "early"
    MID = "mid"
    LATE = "late"


@dataclass(frozen=True)
class StepDiagnostics:
    phase: Phase | None = None
    coefficients: PadeCoefficients | None = None

    @property
    def sigma(self) -> float | None:
        return None if self.coefficients is None else self.coefficients.sigma


def stability_factor(r_prev: TensorLike, r_prev2: TensorLike, lam: float = DEFAULT_LAMBDA) -> float:
    """``exp(-lam * |r_prev - r_prev2| / |r_prev + r_prev2|)``.

    Equals 1 for identical residuals and decays toward 0 as the two most
    recent residuals disagree. The sum norm is floored at ``NORM_EPS``; when
    the exponential underflows (e.g. exactly opposite residuals) the result
    is clamped to the smallest normal float so it stays in (0, 1].
    """
    r_prev, r_prev2 = as_tensor(r_prev), as_tensor(r_prev2)
    check_same_shape(r_prev, r_prev2)
    if not lam > 0:
        raise OutOfRange(f"lambda must be positive, got {lam}")
    diff = np.linalg.norm(r_prev.data - r_prev2.data)
    total = max(np.linalg.norm(r_prev.data + r_prev2.data), NORM_EPS)
    return max(math.exp(-lam * diff / total), SIGMA_FLOOR)


def adaptive_coefficients(sigma: float, lam: float = DEFAULT_LAMBDA) -> PadeCoefficients:
    if not 0.0 <= sigma <= 1.0:
        raise OutOfRange(f"sigma must lie in [0, 1], got {sigma}")
    if not lam > 0:
        raise OutOfRange(f"lambda must be positive, got {lam}")
    return PadeCoefficients(b0=2.0 * sigma, b1=-sigma, a1=sigma / lam, sigma=sigma, lam=lam)


def pade21_predict(
    r3: TensorLike,
    r2: TensorLike,
    r1: TensorLike,
    lam: float = DEFAULT_LAMBDA,
    index_order: IndexOrder = "oldest_first",
    eps: float = DIV_EPS,
) -> tuple[FeatureTensor, StepDiagnostics]:
    """[2/1] rational residual forecast with stability-scaled coefficients.

    ``oldest_first`` puts ``b0`` on the oldest residual and ``a1`` on the newest;
    ``newest_first`` swaps the roles of ``r3`` and ``r1``. The stability factor
    always comes from the two most recent residuals.
    """
    r3, r2, r1 = as_tensor(r3), as_tensor(r2), as_tensor(r1)
    check_same_shape(r3, r2, r1)
    coeffs = adaptive_coefficients(stability_factor(r1, r2, lam), lam)
    lead, tail = (r3, r1) if index_order == "oldest_first" else (r1, r3)
    # numerator, then denominator, then guarded division (rational_predict uses the same order)
    num = coeffs.b0 * lead.data + coeffs.b1 * r2.data
    den = 1.0 + coeffs.a1 * tail.data
    out = FeatureTensor(guarded_divide(num, den, eps), r1.shape)
    return out, StepDiagnostics(coefficients=coeffs)


def rational_predict(
    history: Sequence[TensorLike], coeffs: RationalCoeffs, eps: float = DIV_EPS
) -> FeatureTensor:
    """General rational forecast over ``k`` cached residuals (oldest first).

    The first ``m + 1`` residuals feed the numerator, the remaining
    ``k - m - 1`` the denominator ``1 + sum a_j * h_j``.
    """
    hist = [as_tensor(h) for h in history]
    if len(hist) < 2:
        raise InsufficientHistory(f"need at least 2 residuals, got {len(hist)}")
    check_same_shape(*hist)
    if coeffs.history_length != len(hist):
        raise CoeffArityMismatch(
            f"{len(coeffs.numerator)} numerator + {len(coeffs.denominator)} denominator "
            f"coefficients do not match history length {len(hist)}"
        )
    m1 = len(coeffs.numerator)
    num = coeffs.numerator[0] * hist[0].data
    for b, h in zip(coeffs.numerator[1:], hist[1:m1]):
        num = num + b * h.data
    den = None
    for a, h in zip(coeffs.denominator, hist[m1:]):
        den = 1.0 + a * h.data if den is None else den + a * h.data
    if den is None:
        den = np.ones_like(num)
    return FeatureTensor(guarded_divide(num, den, eps), hist[0].shape)


def reconstruct_output(prev_feature: TensorLike, predicted_residual: TensorLike) -> FeatureTensor:
    return add(prev_feature, predicted_residual)


def phase_of(t: int, total_steps: int, phase: PhaseConfig = PhaseConfig()) -> Phase:
    """Which of the three regimes diffusion time ``t`` falls in (t counts down to 0)."""
    if t > phase.early_frac * total_steps:
        return Phase.EARLY
    if t < phase.late_frac * total_steps:
        return Phase.LATE
    return Phase.MID


def step_aware_predict_with_diagnostics(
    history: Sequence[TensorLike],
    t: int,
    total_steps: int,
    phase: PhaseConfig = PhaseConfig(),
    lam: float = DEFAULT_LAMBDA,
    index_order: IndexOrder = "oldest_first",
) -> tuple[FeatureTensor, StepDiagnostics]:
    if not 0 <= t < total_steps:
        raise OutOfRange(f"t={t} outside [0, {total_steps})")
    which = phase_of(t, total_steps, phase)
    need = 2 if which is Phase.EARLY else 3
    if len(history) < need:
        raise InsufficientHistory(f"{which.value} phase needs {need} residuals, got {len(history)}")
    hist = [as_tensor(h) for h in history[-3:]]
    r1, r2 = hist[-1], hist[-2]
    if which is Phase.EARLY:
        out = FeatureTensor(phase.alpha1 * r1.data + phase.alpha2 * r2.data, r1.shape)
        return out, StepDiagnostics(phase=which)
    pade, diag = pade21_predict(hist[-3], r2, r1, lam, index_order)
    if which is Phase.LATE:
        pade = FeatureTensor(pade.data + phase.beta * (r1.data - r2.data), r1.shape)
    return pade, StepDiagnostics(phase=which, coefficients=diag.coefficients)


def step_aware_predict(
    history: Sequence[TensorLike],
    t: int,
    total_steps: int,
    phase: PhaseConfig = PhaseConfig(),
    lam: float = DEFAULT_LAMBDA,
    index_order: IndexOrder = "oldest_first",
) -> FeatureTensor:
    """Phase-dependent residual forecast from the newest cached residuals.

    Early (``t > early_frac*T``): convex mix ``alpha1*r1 + alpha2*r2``.
    Middle: the [2/1] rational forecast. Late (``t < late_frac*T``): the
    rational forecast plus ``beta * (r1 - r2)``.
    """
    return step_aware_predict_with_diagnostics(history, t, total_steps, phase, lam, index_order)[0]


def taylor_predict(history: Sequence[TensorLike], order: int = 2) -> FeatureTensor:
    """One-step-ahead backward-difference extrapolation at unit spacing."""
    if order not in (1, 2):
        raise UnsupportedOrder(f"order must be 1 or 2, got {order}")
    if len(history) < order + 1:
        raise InsufficientHistory(f"order {order} needs {order + 1} points, got {len(history)}")
    hist = [as_tensor(h) for h in history[-(order + 1):]]
    check_same_shape(*hist)
    if order == 1:
        out = 2.0 * hist[-1].data - hist[-2].data
    else:
        out = 3.0 * hist[-1].data - 3.0 * hist[-2].data + hist[-3].data
    return FeatureTensor(out, hist[-1].shape)


def taylor_extrapolate(
    history: Sequence[TensorLike], steps: Sequence[float], target_step: float, order: int = 2
) -> FeatureTensor:
    """Evaluate the degree-``order`` interpolant through the newest samples at ``target_step``.

    Samples may be unevenly spaced (e.g. only fully computed steps). With unit
    spacing and ``target_step = steps[-1] + 1`` this matches
    :func:`taylor_predict` up to rounding.
    """
    if order not in (1, 2):
        raise UnsupportedOrder(f"order must be 1 or 2, got {order}")
    if len(history) != len(steps):
        raise ValueError("history and steps must have equal length")
    if len(history) < order + 1:
        raise InsufficientHistory(f"order {order} needs {order + 1} points, got {len(history)}")
    hist = [as_tensor(h) for h in history[-(order + 1):]]
    check_same_shape(*hist)
    nodes = [float(s) for s in steps[-(order + 1):]]
    if len(set(nodes)) != len(nodes):
        raise ValueError(f"sample steps must be distinct, got {nodes}")
    out = np.zeros_like(hist[0].data)
    for i, (si, h) in enumerate(zip(nodes, hist)):
        w = 1.0
        for j, sj in enumerate(nodes):
            if j != i:
                w *= (target_step - sj) / (si - sj)
        out = out + w * h.data
    return FeatureTensor(out, hist[-1].shape)
