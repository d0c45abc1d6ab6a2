"""Registry of confinement drifts and interaction kernels.

Models are built only through the registry so every drift carries declared
constants (Lipschitz bound, dissipativity pair) that the assumption validator
can falsify.  The compiled kernels dispatch on the integer tags.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DRIFT_LINEAR = 0
DRIFT_DOUBLE_WELL = 1

KERNEL_ZERO = 0
KERNEL_SINE = 1

_DW_CLIP = 2.0          # clip radius of the double-well force
_DW_SLOPE = 1.0 - 3.0 * _DW_CLIP ** 2  # outer slope, -11


@dataclass(frozen=True)
class DriftSpec:
    name: str
    tag: int
    L_b: float
    theta: float
    R0: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.tag == DRIFT_LINEAR:
            return -x
        inner = x - x * x * x
        hi = (_DW_CLIP - _DW_CLIP ** 3) + _DW_SLOPE * (x - _DW_CLIP)
        lo = -(_DW_CLIP - _DW_CLIP ** 3) + _DW_SLOPE * (x + _DW_CLIP)
        return np.where(x > _DW_CLIP, hi, np.where(x < -_DW_CLIP, lo, inner))

    def value_at_zero(self) -> float:
        return float(np.linalg.norm(np.atleast_1d(self(np.zeros(1)))))


@dataclass(frozen=True)
class InteractionSpec:
    name: str
    tag: int
    eta: float  # joint Lipschitz constant L_b~ of the kernel

    def __call__(self, x, z):
        if self.tag == KERNEL_ZERO:
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(z)).shape)
        return self.eta * np.sin(np.asarray(z, dtype=float) - np.asarray(x, dtype=float))

    def moments(self, cloud):
        """Per-dimension basis moments of a point cloud, used by the
        separable mean-field evaluation (sine kernel: mean sin / mean cos)."""
        if self.tag == KERNEL_ZERO:
            return np.zeros(2)
        cloud = np.asarray(cloud, dtype=float)
        return np.array([np.mean(np.sin(cloud)), np.mean(np.cos(cloud))])

    def mean_field(self, x, moments):
        """Integral of the kernel against the measure with given moments:
        sin(z - x) averages to sin_m * cos(x) - cos_m * sin(x)."""
        if self.tag == KERNEL_ZERO:
            return np.zeros_like(np.asarray(x, dtype=float))
        sin_m, cos_m = moments
        x = np.asarray(x, dtype=float)
        return self.eta * (sin_m * np.cos(x) - cos_m * np.sin(x))

    def value_at_origin(self) -> float:
        return float(np.linalg.norm(np.atleast_1d(self(0.0, 0.0))))


def make_drift(name: str, dim: int = 1) -> DriftSpec:
    if name == "linear":
        return DriftSpec("linear", DRIFT_LINEAR, L_b=1.0, theta=1.0, R0=1.0)
    if name == "double-well-clipped":
        if dim != 1:
            raise ValueError("double-well-clipped is registered for dim=1 only")
        # force x - x^3 clipped to linear beyond |x| = 2; mean slope over any
        # interval longer than 4 is at most (2*1 - 2*(len-2))/len <= -1/2
        return DriftSpec("double-well-clipped", DRIFT_DOUBLE_WELL,
                         L_b=abs(_DW_SLOPE), theta=0.5, R0=4.0)
    raise ValueError(f"unknown drift {name!r}; registered: linear, double-well-clipped")


def make_interaction(name: str, eta: float = 0.0) -> InteractionSpec:
    if name == "zero":
        return InteractionSpec("zero", KERNEL_ZERO, 0.0)
    if name == "sine":
        if eta < 0:
            raise ValueError("eta must be nonnegative")
        return InteractionSpec("sine", KERNEL_SINE, float(eta))
    raise ValueError(f"unknown interaction {name!r}; registered: zero, sine")
