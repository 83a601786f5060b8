"""Flat float64 feature vectors and the handful of dense ops the predictors need."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Union

import numpy as np
from numpy.typing import ArrayLike

from .errors import ShapeMismatch

DIV_EPS = 1e-6
NORM_EPS = 1e-12

ElementwiseOp = Literal["add", "sub", "mul", "div"]


@dataclass(frozen=True, eq=False)
class FeatureTensor:
    """Immutable real-valued tensor stored flat, with its logical shape.

    ``data`` is a read-only 1-D float64 array whose length equals the product
    of ``shape``. Construct through :meth:`of` unless you already hold a
    validated flat array.
    """

    data: np.ndarray
    shape: tuple[int, ...]

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64).reshape(-1)
        shape = tuple(int(n) for n in self.shape)
        if not shape or any(n < 1 for n in shape):
            raise ShapeMismatch(f"shape extents must be positive, got {shape}")
        if math.prod(shape) != data.size:
            raise ShapeMismatch(f"data length {data.size} != prod{shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("FeatureTensor values must be finite")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "shape", shape)

    @classmethod
    def of(cls, values: ArrayLike, shape: tuple[int, ...] | None = None) -> FeatureTensor:
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        return cls(arr.reshape(-1), arr.shape if shape is None else tuple(shape))

    @classmethod
    def zeros(cls, shape: tuple[int, ...] | int) -> FeatureTensor:
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        return cls(np.zeros(math.prod(shape)), shape)

    @property
    def size(self) -> int:
        return self.data.size

    def array(self) -> np.ndarray:
        """Read-only view in the logical shape."""
        return self.data.reshape(self.shape)

    def tolist(self) -> list[float]:
        return self.data.tolist()

    def __len__(self) -> int:
        return self.data.size

    def __eq__(self, other):
        if not isinstance(other, FeatureTensor):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __hash__(self):
        return hash((self.shape, self.data.tobytes()))

    def __repr__(self):
        return f"FeatureTensor(shape={self.shape}, data={np.array2string(self.data, threshold=8)})"


TensorLike = Union[FeatureTensor, ArrayLike]


def as_tensor(x: TensorLike) -> FeatureTensor:
    return x if isinstance(x, FeatureTensor) else FeatureTensor.of(x)


def check_same_shape(*tensors: FeatureTensor) -> None:
    first = tensors[0].shape
    for t in tensors[1:]:
        if t.shape != first:
            raise ShapeMismatch(f"shape {t.shape} != {first}")


def guarded_denominator(d: np.ndarray, eps: float = DIV_EPS) -> np.ndarray:
    """Replace entries with ``|d| < eps`` by ``sign(d) * eps`` (sign(0) = +1)."""
    small = np.abs(d) < eps
    if not small.any():
        return d
    return np.where(small, np.where(d < 0, -eps, eps), d)


def guarded_divide(num: np.ndarray, den: np.ndarray, eps: float = DIV_EPS) -> np.ndarray:
    return num / guarded_denominator(den, eps)


def elementwise(op: ElementwiseOp, a: TensorLike, b: TensorLike, eps: float = DIV_EPS) -> FeatureTensor:
    a, b = as_tensor(a), as_tensor(b)
    check_same_shape(a, b)
    if op == "add":
        out = a.data + b.data
    elif op == "sub":
        out = a.data - b.data
    elif op == "mul":
        out = a.data * b.data
    elif op == "div":
        out = guarded_divide(a.data, b.data, eps)
    else:
        raise ValueError(f"unknown op {op!r}")
    return FeatureTensor(out, a.shape)


def add(a: TensorLike, b: TensorLike) -> FeatureTensor:
    return elementwise("add", a, b)


def sub(a: TensorLike, b: TensorLike) -> FeatureTensor:
    return elementwise("sub", a, b)


def l2_norm(a: TensorLike) -> float:
    return float(np.linalg.norm(as_tensor(a).data))


def dot(a: TensorLike, b: TensorLike) -> float:
    a, b = as_tensor(a), as_tensor(b)
    check_same_shape(a, b)
    return float(np.dot(a.data, b.data))


def cosine_similarity(a: TensorLike, b: TensorLike, eps: float = NORM_EPS) -> float:
    """Cosine of the angle between ``a`` and ``b``; 0 if either is (near) zero."""
    a, b = as_tensor(a), as_tensor(b)
    check_same_shape(a, b)
    na, nb = np.linalg.norm(a.data), np.linalg.norm(b.data)
    if na < eps or nb < eps:
        return 0.0
    return float(np.dot(a.data, b.data) / (na * nb))


def unit(a: TensorLike, eps: float = NORM_EPS) -> FeatureTensor:
    a = as_tensor(a)
    n = np.linalg.norm(a.data)
    if n < eps:
        return FeatureTensor.zeros(a.shape)
    return FeatureTensor(a.data / n, a.shape)


def scale_add(alpha: float, a: TensorLike, beta: float, b: TensorLike) -> FeatureTensor:
    """Return ``alpha * a + beta * b``."""
    a, b = as_tensor(a), as_tensor(b)
    check_same_shape(a, b)
    return FeatureTensor(alpha * a.data + beta * b.data, a.shape)
