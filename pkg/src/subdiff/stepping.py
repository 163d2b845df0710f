"""Fully discrete time stepping for the subdiffusion problem.

One loop serves all four scheme variants; they differ only in the weight
table (shifted trapezoidal or Crank-Nicolson-weighted fractional BDF2) and
in the first-step load coefficients (the initial correction). The history
term is summed directly (standard mode) or through the Talbot block
machinery (fast modes).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._kernels import get_backend
from .fast_history import FastParams, build_level_tables
from .fem1d import TriDiag
from .params import SchemeParams
from .weights import WeightTable, combined_cn_fbdf2_weights, sftr_weights

PLAIN = "plain"
CORRECTED = "corrected"
CRANK_NICOLSON = "cn"
CN_FBDF2 = "cnfbdf2"
SCHEMES = (PLAIN, CORRECTED, CRANK_NICOLSON, CN_FBDF2)

STANDARD = "standard"
FAST1 = "fast1"
FAST2 = "fast2"
HISTORY_MODES = (STANDARD, FAST1, FAST2)


class SchemeError(ValueError):
    pass


class InstabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpatialSystem:
    """Mass/stiffness pair; the scalar test operator is the 1x1 case."""

    mass: TriDiag
    stiffness: TriDiag
    variant: str = "fem"

    def __post_init__(self):
        if self.mass.size != self.stiffness.size:
            raise ValueError("mass and stiffness sizes differ")

    @property
    def dof(self) -> int:
        return self.mass.size

    @staticmethod
    def fem(mass: TriDiag, stiffness: TriDiag) -> "SpatialSystem":
        return SpatialSystem(mass, stiffness, "fem")

    @staticmethod
    def scalar(lam: float) -> "SpatialSystem":
        if lam < 0.0:
            raise ValueError("scalar mode needs lam >= 0")
        empty = np.zeros(0)
        return SpatialSystem(
            TriDiag(empty, np.ones(1), empty.copy()),
            TriDiag(empty.copy(), np.array([float(lam)]), empty.copy()),
            "scalar")


@dataclass(frozen=True)
class DiscreteProblem:
    """One fully specified solve: operator, data, scheme and history mode.

    ``f_sampler`` returns the coefficients of the projected source at a
    grid time; ``load_table`` may carry the assembled pairings (f, phi_i)
    directly and takes precedence. Omitting both means f = 0.
    """

    system: SpatialSystem
    v_h: np.ndarray
    params: SchemeParams
    scheme: str = CORRECTED
    f_sampler: object = None
    load_table: np.ndarray | None = None
    history: str = STANDARD
    fast: FastParams = field(default_factory=FastParams)
    blow_limit: float = 1e12

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise SchemeError(f"unknown scheme {self.scheme!r}")
        if self.history not in HISTORY_MODES:
            raise SchemeError(f"unknown history mode {self.history!r}")
        if self.scheme == CRANK_NICOLSON and self.params.theta != 0.5:
            raise SchemeError("Crank-Nicolson requires theta = 1/2")
        if self.scheme == CN_FBDF2 and self.history != STANDARD:
            raise SchemeError("fast history is not provided for the "
                              "fractional BDF2 weights")
        if self.v_h.shape != (self.system.dof,):
            raise ValueError("initial coefficient length does not match dof")

    @property
    def corrected(self) -> bool:
        return self.scheme in (CORRECTED, CN_FBDF2)


@dataclass(frozen=True)
class SolutionHistory:
    """Levels U^0..U^n with times; n stops early on an instability abort."""

    problem: DiscreteProblem
    times: np.ndarray
    levels: np.ndarray
    unstable_at: int | None
    counters: dict

    @property
    def n_levels(self) -> int:
        return self.levels.shape[0]

    def linf_series(self) -> np.ndarray:
        return np.max(np.abs(self.levels), axis=1)

    def l2_norm(self, coeffs: np.ndarray) -> float:
        M = self.problem.system.mass
        return float(np.sqrt(coeffs @ M.matvec(np.ascontiguousarray(coeffs))))


def build_weights(problem: DiscreteProblem, k_max: int) -> WeightTable:
    p = problem.params
    if problem.scheme == CN_FBDF2:
        return combined_cn_fbdf2_weights(p.alpha, p.theta, k_max)
    return sftr_weights(p.alpha, p.theta, k_max)


def step_system_matrix(problem: DiscreteProblem, weights: WeightTable) -> TriDiag:
    """Constant left-hand operator tau^(-alpha)*w0*M + (1-theta)*A."""
    expect = CN_FBDF2 if problem.scheme == CN_FBDF2 else "sftr"
    if weights.kind != expect:
        raise SchemeError(f"weight kind {weights.kind!r} does not match "
                          f"scheme {problem.scheme!r}")
    p = problem.params
    ta = p.tau ** (-p.alpha)
    M, A = problem.system.mass, problem.system.stiffness
    c = 1.0 - p.theta
    return TriDiag(ta * weights[0] * M.sub + c * A.sub,
                   ta * weights[0] * M.main + c * A.main,
                   ta * weights[0] * M.sup + c * A.sup)


def _assemble_loads(problem: DiscreteProblem) -> np.ndarray:
    p = problem.params
    dof = problem.system.dof
    if problem.load_table is not None:
        tab = np.asarray(problem.load_table, dtype=float)
        if tab.shape != (p.n_steps + 1, dof):
            raise ValueError("load_table must be (n_steps+1, dof)")
        return tab
    tab = np.zeros((p.n_steps + 1, dof))
    if problem.f_sampler is not None:
        M = problem.system.mass
        for n in range(p.n_steps + 1):
            coeffs = np.asarray(problem.f_sampler(n * p.tau), dtype=float)
            tab[n] = M.matvec(np.ascontiguousarray(coeffs.reshape(dof)))
    return tab


def solve(problem: DiscreteProblem) -> SolutionHistory:
    """Run the stepping loop; returns all levels U^n = W^n + v_h.

    A step that produces a non-finite value or exceeds the blow limit stops
    the run and is reported through ``unstable_at`` instead of raising.
    """
    p = problem.params
    N = p.n_steps
    be = get_backend()
    M, A = problem.system.mass, problem.system.stiffness
    v = np.ascontiguousarray(problem.v_h, dtype=float)
    loads = _assemble_loads(problem)
    W = np.zeros((N + 1, problem.system.dof))
    ta = p.tau ** (-p.alpha)
    counters = np.zeros(4, dtype=np.int64)

    if problem.history == STANDARD:
        omega = build_weights(problem, N).weights
        status = be.solve_standard_loop(
            M.sub, M.main, M.sup, A.sub, A.main, A.sup, v, loads,
            omega, ta, p.theta, problem.corrected, problem.blow_limit, W)
        peak_entries = (N if status < 0 else status) + 1
    else:
        fast = replace(problem.fast,
                       algorithm=1 if problem.history == FAST1 else 2)
        r_tab, q_tab, wf_tab, p3, n_far, feed_stop = build_level_tables(
            N, p.tau, p.alpha, p.theta, fast)
        omega = build_weights(problem, min(N, n_far + p3)).weights
        status = be.solve_fast_loop(
            M.sub, M.main, M.sup, A.sub, A.main, A.sup, v, loads,
            omega, p.tau, ta, p.theta, problem.corrected,
            r_tab, q_tab, wf_tab, fast.block_base, p3, n_far, feed_stop,
            problem.blow_limit, W, counters)
        peak_entries = int(counters[1])

    last = N if status < 0 else status
    U = W[: last + 1] + v[None, :]
    info = {
        "history_entries_peak": peak_entries,
        "accumulator_feed_updates": int(counters[0]),
        "accumulator_slots_peak": int(counters[2]),
        "far_field_steps": int(counters[3]),
    }
    return SolutionHistory(problem, p.times()[: last + 1], U,
                           None if status < 0 else int(status), info)


def solve_cn_fbdf2(problem: DiscreteProblem) -> SolutionHistory:
    if problem.scheme != CN_FBDF2:
        raise SchemeError("solve_cn_fbdf2 expects the cnfbdf2 scheme")
    return solve(problem)


def error_series(history: SolutionHistory, exact) -> np.ndarray:
    """Rows (t_n, discrete-L2 error) against exact nodal coefficients."""
    out = np.empty((history.n_levels, 2))
    for n in range(history.n_levels):
        t = history.times[n]
        diff = history.levels[n] - np.asarray(exact(t), dtype=float)
        out[n, 0] = t
        out[n, 1] = history.l2_norm(diff)
    return out


def observed_rate(err_coarse: float, err_fine: float) -> float:
    """log2 of the error drop under one halving of the step size."""
    if not (err_coarse > 0.0 and err_fine > 0.0):
        raise ValueError("observed_rate needs positive errors")
    return math.log2(err_coarse / err_fine)
