"""Convolution-quadrature weight tables.

Three generating functions are supported: the shifted fractional
trapezoidal rule (the production scheme), the fractional BDF2, and the
Crank-Nicolson-weighted fractional BDF2 used for the comparison scheme.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import get_backend
from .params import ParameterDomainError, validate_alpha, validate_theta

SFTR = "sftr"
FBDF2 = "fbdf2"
CN_FBDF2 = "cnfbdf2"


@dataclass(frozen=True)
class WeightTable:
    """Immutable table of convolution weights omega_0..omega_K."""

    kind: str
    alpha: float
    theta: float | None
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.weights.flags.writeable = False

    def __len__(self):
        return self.weights.shape[0]

    def __getitem__(self, k):
        return self.weights[k]


def _check(alpha, theta, k_max):
    validate_alpha(alpha, allow_one=True)
    if theta is not None:
        validate_theta(theta, upper=None)
    if k_max < 0:
        raise ParameterDomainError(f"k_max={k_max} must be >= 0")


def sftr_weights(alpha: float, theta: float, k_max: int) -> WeightTable:
    """Weights of [(1-xi) / (0.5(1+xi) + (theta/alpha)(1-xi))]**alpha via the
    three-term recursion. theta=0 recovers the fractional trapezoidal rule."""
    _check(alpha, theta, k_max)
    w = get_backend().sftr_weight_recursion(alpha, theta, k_max)
    return WeightTable(SFTR, alpha, theta, w)


def weights_series_oracle(alpha: float, theta: float, k_max: int) -> WeightTable:
    """Same weights by an independent route: series powers of the numerator
    and denominator polynomials, combined by Cauchy product. Test oracle for
    sftr_weights; not used by the steppers."""
    _check(alpha, theta, k_max)
    be = get_backend()
    num = be.poly_power_series(1.0, -1.0, 0.0, alpha, k_max)
    d0 = 0.5 + theta / alpha
    d1 = 0.5 - theta / alpha
    den = be.poly_power_series(d0, d1, 0.0, -alpha, k_max)
    w = np.convolve(num, den)[: k_max + 1]
    return WeightTable(SFTR, alpha, theta, w)


def fbdf2_weights(alpha: float, k_max: int) -> WeightTable:
    """Weights of (3/2 - 2 xi + xi^2/2)**alpha."""
    _check(alpha, None, k_max)
    w = get_backend().poly_power_series(1.5, -2.0, 0.5, alpha, k_max)
    return WeightTable(FBDF2, alpha, None, w)


def combined_cn_fbdf2_weights(alpha: float, theta: float, k_max: int) -> WeightTable:
    """Weights of (1 - theta + theta*xi) times the fractional BDF2 series."""
    _check(alpha, theta, k_max)
    base = fbdf2_weights(alpha, k_max).weights
    w = (1.0 - theta) * base
    w = w.copy()
    w[1:] += theta * base[:-1]
    return WeightTable(CN_FBDF2, alpha, theta, w)
