"""Trajectory stability indicator and the skip/compute rule."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .tensor import FeatureTensor, TensorLike, as_tensor, check_same_shape, unit


class TsiVariant(enum.Enum):
    RAW = "raw"
    ALIGNMENT = "alignment"


class Action(enum.Enum):
    FULL_COMPUTE = "full"
    PREDICT = "predict"


class Reason(enum.Enum):
    WARM_UP = "warmup"
    INTERVAL_START = "interval_start"
    THRESHOLD_PASS = "threshold_pass"
    THRESHOLD_FAIL = "threshold_fail"
    INSUFFICIENT_HISTORY = "insufficient_history"


@dataclass(frozen=True)
class GateDecision:
    action: Action
    tsi_value: float
    reason: Reason

    def __post_init__(self):
        if self.action is Action.PREDICT and self.reason is not Reason.THRESHOLD_PASS:
            raise ValueError("a Predict decision must carry reason THRESHOLD_PASS")

    @property
    def predicts(self) -> bool:
        return self.action is Action.PREDICT

    @classmethod
    def forced(cls, reason: Reason) -> GateDecision:
        """Full compute that bypassed the indicator (tsi_value is NaN)."""
        return cls(Action.FULL_COMPUTE, math.nan, reason)


def unit_diff(r_new: TensorLike, r_old: TensorLike) -> FeatureTensor:
    r_new, r_old = as_tensor(r_new), as_tensor(r_old)
    check_same_shape(r_new, r_old)
    return unit(FeatureTensor(r_new.data - r_old.data, r_new.shape))


def tsi(
    r3: TensorLike,
    r2: TensorLike,
    r1: TensorLike,
    variant: TsiVariant | str = TsiVariant.ALIGNMENT,
) -> float:
    """Directional consistency of the last two residual steps.

    ``raw`` is half the distance between consecutive unit differences, in
    [0, 1] with 0 meaning a perfectly straight trajectory. ``alignment`` is
    ``2 - raw_dist**2 / 2 = 1 + u1.u2``, in [0, 2] with 2 meaning straight,
    so larger values read as more stable.

    When one difference vanishes its unit vector is zero: raw then gives
    ``|other| / 2`` (0.5 or 0) and alignment gives exactly 1.
    """
    variant = TsiVariant(variant)
    u1 = unit_diff(r1, r2).data
    u2 = unit_diff(r2, r3).data
    if variant is TsiVariant.RAW:
        return 0.5 * float(np.linalg.norm(u1 - u2))
    return 1.0 + float(np.dot(u1, u2))


def decide(tsi_value: float, theta: float) -> GateDecision:
    """Skip (predict) when ``tsi_value >= theta``; ties skip."""
    if tsi_value >= theta:
        return GateDecision(Action.PREDICT, tsi_value, Reason.THRESHOLD_PASS)
    return GateDecision(Action.FULL_COMPUTE, tsi_value, Reason.THRESHOLD_FAIL)
