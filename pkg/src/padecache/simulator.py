"""Deterministic synthetic denoising backends.

Every family adds a closed-form, step-only residual to its input,
``y = x + R*(s)``, so the full-computation trajectory is cheap to reproduce
exactly and prediction error is attributable to the predictor alone.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Mapping, Protocol

import numpy as np

from .errors import ConfigError, DimMismatch, StepOutOfRange
from .tensor import FeatureTensor, TensorLike, as_tensor

DEFAULT_DIM = 64
DEFAULT_STEPS = 20


class Family(enum.Enum):
    RATIONAL = "rational"
    EXPONENTIAL = "exponential"
    POLYNOMIAL = "polynomial"
    SMOOTH_RANDOM = "smooth_random"
    PHASE_COMPOSITE = "phase_composite"


class ModelCall(Protocol):
    """Anything the scheduler can call for a full block evaluation."""

    calls: int

    def evaluate(self, x: FeatureTensor, step: int) -> FeatureTensor: ...


# Parameters each family reads; arrays are per-dimension unless noted.
FAMILY_PARAMS: dict[Family, tuple[str, ...]] = {
    Family.RATIONAL: ("a", "b", "c"),
    Family.EXPONENTIAL: ("a", "c"),
    Family.POLYNOMIAL: ("p",),  # shape (dim, degree + 1), p[i, j] multiplies s**j
    Family.SMOOTH_RANDOM: ("amp", "omega", "phi"),  # each shape (dim, sinusoids)
    Family.PHASE_COMPOSITE: ("fast_amp", "fast_omega", "fast_phi", "mid_a", "mid_c", "late_a", "late_c"),
}


def _draw_params(family: Family, dim: int, rng: np.random.Generator, degree: int, sinusoids: int):
    u = lambda lo, hi, *shape: rng.uniform(lo, hi, size=shape or (dim,))  # noqa: E731
    if family is Family.RATIONAL:
        return {"a": u(-1, 1), "b": u(-1, 1), "c": u(0.1, 1)}
    if family is Family.EXPONENTIAL:
        return {"a": u(-1, 1), "c": u(0.1, 1)}
    if family is Family.POLYNOMIAL:
        # shrink higher-order terms so values stay O(1) over ~20 steps
        scale = 10.0 ** -np.arange(degree + 1)
        return {"p": u(-1, 1, dim, degree + 1) * scale}
    if family is Family.SMOOTH_RANDOM:
        return {
            "amp": u(-1, 1, dim, sinusoids),
            "omega": u(0.1, np.pi / 4, dim, sinusoids),
            "phi": u(0, 2 * np.pi, dim, sinusoids),
        }
    return {
        "fast_amp": u(-1, 1),
        "fast_omega": u(np.pi / 4, np.pi / 2),
        "fast_phi": u(0, 2 * np.pi),
        "mid_a": u(-1, 1),
        "mid_c": u(0.1, 1),
        "late_a": u(-0.2, 0.2),
        "late_c": u(0.05, 0.2),
    }


@dataclass(eq=False)
class TrajectoryModel:
    """Synthetic full-computation oracle.

    Parameters not given in ``params`` are drawn once from ``seed``. The only
    mutable state is ``calls``, the number of :meth:`evaluate` invocations.
    """

    family: Family | str = Family.RATIONAL
    dim: int = DEFAULT_DIM
    seed: int = 0
    degree: int = 2
    sinusoids: int = 4
    steps: int = DEFAULT_STEPS
    params: Mapping[str, Any] = field(default_factory=dict)
    calls: int = field(default=0, init=False)

    def __post_init__(self):
        self.family = Family(self.family)
        if self.dim < 1 or self.steps < 1:
            raise ConfigError("dim and steps must be positive")
        if self.degree < 0 or self.sinusoids < 1:
            raise ConfigError("degree must be >= 0 and sinusoids >= 1")
        wanted = FAMILY_PARAMS[self.family]
        unknown = set(self.params) - set(wanted)
        if unknown:
            raise ConfigError(f"unknown parameters for {self.family.value}: {sorted(unknown)}")
        rng = np.random.default_rng(self.seed)
        drawn = _draw_params(self.family, self.dim, rng, self.degree, self.sinusoids)
        resolved = {}
        for name in wanted:
            if name in self.params:
                # scalars broadcast over dim; 1-D rows broadcast over dim for 2-D params
                value = np.array(self.params[name], dtype=np.float64)
                target = (self.dim, value.shape[-1]) if name == "p" and value.ndim else drawn[name].shape
                try:
                    resolved[name] = np.array(np.broadcast_to(value, target))
                except ValueError as exc:
                    raise DimMismatch(f"parameter {name!r} of shape {value.shape} does not fit {target}") from exc
            else:
                resolved[name] = drawn[name]
            resolved[name].flags.writeable = False
        if self.family is Family.RATIONAL and np.any(resolved["c"] <= 0):
            raise ConfigError("rational family needs c > 0")
        if self.family is Family.POLYNOMIAL:
            self.degree = resolved["p"].shape[1] - 1
        self._p = resolved

    @property
    def resolved_params(self) -> dict[str, np.ndarray]:
        return dict(self._p)

    def residual(self, step: int) -> FeatureTensor:
        """Closed-form residual ``R*(step)``; does not count as a model call."""
        if not 0 <= step < self.steps:
            raise StepOutOfRange(f"step {step} outside [0, {self.steps})")
        p, s = self._p, float(step)
        fam = self.family
        if fam is Family.RATIONAL:
            r = p["a"] / (1.0 + p["c"] * s) + p["b"]
        elif fam is Family.EXPONENTIAL:
            r = p["a"] * np.exp(-p["c"] * s)
        elif fam is Family.POLYNOMIAL:
            r = p["p"] @ s ** np.arange(p["p"].shape[1])
        elif fam is Family.SMOOTH_RANDOM:
            r = np.sum(p["amp"] * np.sin(p["omega"] * s + p["phi"]), axis=1)
        else:
            r = self._composite(s)
        return FeatureTensor(r, (self.dim,))

    def _composite(self, s: float) -> np.ndarray:
        # Fast oscillation early, rational decay mid, slow exponential drift late.
        # Segments are shifted to join continuously at the boundaries.
        p = self._p
        s1, s2 = 0.3 * self.steps, 0.8 * self.steps
        fast = lambda v: p["fast_amp"] * np.sin(p["fast_omega"] * v + p["fast_phi"])  # noqa: E731
        mid = lambda v: p["mid_a"] / (1.0 + p["mid_c"] * (v - s1))  # noqa: E731
        late = lambda v: p["late_a"] * (1.0 - np.exp(-p["late_c"] * (v - s2)))  # noqa: E731
        if s < s1:
            return fast(s)
        mid_offset = fast(s1) - mid(s1)
        if s < s2:
            return mid(s) + mid_offset
        return late(s) + mid(s2) + mid_offset

    def evaluate(self, x: TensorLike, step: int) -> FeatureTensor:
        x = as_tensor(x)
        if x.size != self.dim:
            raise DimMismatch(f"input has {x.size} elements, model dim is {self.dim}")
        r = self.residual(step)
        self.calls += 1
        return FeatureTensor(x.data + r.data, x.shape)


def default_x0(dim: int, seed: int) -> FeatureTensor:
    """Seeded initial latent, independent of the model parameter stream."""
    rng = np.random.default_rng([seed, 1])
    return FeatureTensor(rng.standard_normal(dim), (dim,))


def euler_step(x: FeatureTensor, y: FeatureTensor, total_steps: int) -> FeatureTensor:
    """Fixed latent update ``x + y / T`` shared by the scheduler and the oracle."""
    return FeatureTensor(x.data + (1.0 / total_steps) * y.data, x.shape)


@dataclass(frozen=True)
class OracleTrajectory:
    inputs: list[FeatureTensor]
    outputs: list[FeatureTensor]
    residuals: list[FeatureTensor]


def oracle_trajectory(model: TrajectoryModel, x0: TensorLike, total_steps: int) -> OracleTrajectory:
    """Full-computation run: evaluate the model at every step.

    ``residuals`` are ``y - x`` exactly as the scheduler caches them; they
    match the closed-form ``R*(s)`` to rounding.
    """
    x = as_tensor(x0)
    inputs, outputs, residuals = [], [], []
    for s in range(total_steps):
        y = model.evaluate(x, s)
        inputs.append(x)
        outputs.append(y)
        residuals.append(FeatureTensor(y.data - x.data, y.shape))
        x = euler_step(x, y, total_steps)
    return OracleTrajectory(inputs, outputs, residuals)
