"""Scheme parameters shared by the weight generators and time steppers."""
from __future__ import annotations

from dataclasses import dataclass


class ParameterDomainError(ValueError):
    """A parameter lies outside the admissible domain."""


def validate_alpha(alpha: float, allow_one: bool = False) -> None:
    hi_ok = alpha <= 1.0 if allow_one else alpha < 1.0
    if not (0.0 < alpha and hi_ok):
        rng = "(0, 1]" if allow_one else "(0, 1)"
        raise ParameterDomainError(f"fractional order alpha={alpha} outside {rng}")


def validate_theta(theta: float, upper: float | None = 1.0) -> None:
    # Schemes admit theta > 1/2 deliberately (the unstable side of the
    # shift, exercised by the stability experiments); weight tables accept
    # any nonnegative shift.
    if upper is None:
        if not theta >= 0.0:
            raise ParameterDomainError(f"shift theta={theta} must be >= 0")
    elif not (0.0 <= theta < upper):
        raise ParameterDomainError(f"shift theta={theta} outside [0, {upper})")


@dataclass(frozen=True)
class SchemeParams:
    """Fractional order, shift, step size and step count of one scheme.

    ``theta`` in [0, 1/2] is the analyzed range; values above 1/2 are
    accepted so instability on that side can be observed.
    """

    alpha: float
    theta: float
    tau: float
    n_steps: int

    def __post_init__(self):
        validate_alpha(self.alpha)
        validate_theta(self.theta)
        if self.tau <= 0.0:
            raise ParameterDomainError(f"time step tau={self.tau} must be positive")
        if self.n_steps < 1:
            raise ParameterDomainError(f"n_steps={self.n_steps} must be >= 1")

    @property
    def t_final(self) -> float:
        return self.tau * self.n_steps

    @property
    def mu0(self) -> float:
        return (2.0 * self.alpha / (self.alpha + 2.0 * self.theta)) ** self.alpha

    @property
    def mu1(self) -> float:
        return (self.alpha - 2.0 * self.theta) / (self.alpha + 2.0 * self.theta)

    def times(self):
        import numpy as np

        return np.arange(self.n_steps + 1) * self.tau
