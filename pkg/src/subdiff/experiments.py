"""Experiment drivers: convergence tables, early-time error series,
stability probes, fast-weight accuracy maps and timing sweeps.

All drivers are deterministic: identical arguments produce identical rows
(timing columns excepted), and sweep results are sorted before writing.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .fast_history import FastParams, fast_weight, level_for_lag, make_talbot_level
from .fem1d import (Indicator, Mesh1D, assemble_mass, assemble_stiffness,
                    discrete_l2_norm, l2_project, load_vector, ritz_project)
from .mittag_leffler import mittag_leffler
from .params import SchemeParams
from .stepping import (CN_FBDF2, CORRECTED, FAST2, STANDARD, DiscreteProblem,
                       SolutionHistory, SpatialSystem, error_series, observed_rate,
                       solve)
from .weights import sftr_weights

EXAMPLES = ("ex1", "ex2i", "ex2ii", "ex3", "ex4")

# deterministic seed for the stability perturbation
_STAB_SEED = 20260809


def cells_for_h(a: float, b: float, h: float) -> int:
    return max(2, math.ceil((b - a) / h))


@dataclass(frozen=True)
class ExampleDef:
    name: str
    a: float
    b: float
    datum: object            # "sin" (Ritz) or Indicator (L2)
    has_forcing: bool
    has_exact: bool

    def g_forcing(self, t: float, alpha: float) -> float:
        return 6.0 * t ** (3.0 - alpha) / math.gamma(4.0 - alpha) + t ** 3

    def g_exact(self, t: float, alpha: float) -> float:
        val = mittag_leffler(alpha, -(t ** alpha))
        if self.has_forcing:
            val += t ** 3
        return val


_DEFS = {
    "ex1": ExampleDef("ex1", 0.0, math.pi, "sin", True, True),
    "ex2i": ExampleDef("ex2i", 0.0, math.pi, "sin", False, True),
    "ex2ii": ExampleDef("ex2ii", 0.0, 1.0, Indicator(0.0, 0.5), False, False),
    "ex3": ExampleDef("ex3", 0.0, math.pi, "sin", False, True),
    "ex4": ExampleDef("ex4", 0.0, math.pi, "sin", True, True),
}


def example_def(name: str) -> ExampleDef:
    if name not in _DEFS:
        raise ValueError(f"unknown example {name!r} (choose from {EXAMPLES})")
    return _DEFS[name]


@dataclass(frozen=True)
class FemSetup:
    mesh: Mesh1D
    system: SpatialSystem
    v_h: np.ndarray
    space_load: np.ndarray | None   # pairings (sin, phi_i) for separable f
    sin_nodes: np.ndarray


def build_fem_setup(ex: ExampleDef, ncells: int, perturb: float = 0.0) -> FemSetup:
    mesh = Mesh1D(ex.a, ex.b, ncells)
    system = SpatialSystem.fem(assemble_mass(mesh), assemble_stiffness(mesh))
    sin_nodes = np.sin(mesh.interior_nodes())
    if isinstance(ex.datum, Indicator):
        v_h = l2_project(mesh, ex.datum)
    else:
        v_h = ritz_project(mesh, np.sin, laplacian=lambda x: -np.sin(x))
    if perturb:
        rng = np.random.default_rng(_STAB_SEED)
        v_h = v_h * (1.0 + perturb * rng.uniform(-1.0, 1.0, v_h.shape[0]))
    space_load = load_vector(mesh, np.sin) if ex.has_forcing else None
    return FemSetup(mesh, system, v_h, space_load, sin_nodes)


def build_problem(example: str, alpha: float, theta: float, tau: float,
                  n_steps: int, ncells: int, scheme: str = CORRECTED,
                  history: str = STANDARD, fast: FastParams = FastParams(),
                  perturb: float = 0.0, setup: FemSetup | None = None):
    """Assemble one FEM problem; returns (problem, setup, exact_fn|None)."""
    ex = example_def(example)
    if setup is None:
        setup = build_fem_setup(ex, ncells, perturb)
    params = SchemeParams(alpha, theta, tau, n_steps)
    load_table = None
    if ex.has_forcing:
        g = np.array([ex.g_forcing(n * tau, alpha) for n in range(n_steps + 1)])
        load_table = np.ascontiguousarray(np.outer(g, setup.space_load))
    problem = DiscreteProblem(system=setup.system, v_h=setup.v_h, params=params,
                              scheme=scheme, load_table=load_table,
                              history=history, fast=fast)
    exact_fn = None
    if ex.has_exact:
        sin_nodes = setup.sin_nodes

        def exact_fn(t, _ex=ex, _a=alpha, _s=sin_nodes):
            return _ex.g_exact(t, _a) * _s

    return problem, setup, exact_fn


def _eval_index(t_eval: float, tau: float, n_steps: int) -> int:
    n = t_eval / tau
    k = round(n)
    if abs(n - k) > 1e-9 or not (0 <= k <= n_steps):
        raise ValueError(f"t_eval={t_eval} is not on the step grid tau={tau}")
    return k


def error_at(history: SolutionHistory, exact_fn, t_eval: float) -> float:
    k = _eval_index(t_eval, history.problem.params.tau,
                    history.problem.params.n_steps)
    if k >= history.n_levels:
        raise RuntimeError("run aborted before t_eval")
    diff = history.levels[k] - exact_fn(history.times[k])
    return history.l2_norm(diff)


@dataclass(frozen=True)
class RateRow:
    alpha: float
    theta: float
    tau: float
    error: float
    rate: float | None


def _reference_solution(ex: ExampleDef, alpha: float, ncells: int,
                        tau_ref: float, t_final: float, t_eval: float,
                        theta_ref: float = 0.3, stride: int | None = None,
                        history: str = STANDARD):
    """Self-generated fine reference for examples without a closed form:
    doubled mesh, corrected scheme, restricted back to the coarse nodes.
    With a stride the whole trajectory is returned, subsampled onto the
    coarse time grid; otherwise only the t_eval level."""
    n_steps = round(t_final / tau_ref)
    problem, setup, _ = build_problem(ex.name, alpha, theta_ref, tau_ref,
                                      n_steps, 2 * ncells, history=history)
    hist = solve(problem)
    if stride is not None:
        return hist.levels[::stride, 1::2]
    k = _eval_index(t_eval, tau_ref, n_steps)
    return hist.levels[k][1::2]


def run_convergence(example: str, alphas, thetas, taus, ncells: int,
                    scheme: str = CORRECTED, history: str = STANDARD,
                    fast: FastParams = FastParams(), t_eval: float = 0.5,
                    t_final: float = 1.0, ref_tau_factor: int = 8,
                    workers: int = 1):
    """Rate-table rows over the (alpha, theta, tau) grid, sorted. For the
    nonsmooth-datum example the errors are measured against a reference run
    with strictly finer mesh and at least `ref_tau_factor` finer steps.
    Cells are independent solves; with workers > 1 they run on a thread
    pool and are collected in grid order either way."""
    ex = example_def(example)
    taus = sorted(taus, reverse=True)
    if not all(taus[i] > taus[i + 1] for i in range(len(taus) - 1)):
        raise ValueError("tau list must be strictly decreasing")
    sch = CN_FBDF2 if example == "ex4" else scheme
    setup = build_fem_setup(ex, ncells)
    references = {}
    for alpha in sorted(alphas):
        if not ex.has_exact:
            references[alpha] = _reference_solution(
                ex, alpha, ncells, min(taus) / ref_tau_factor, t_final, t_eval)

    def run_cell(alpha, theta, tau):
        n_steps = round(t_final / tau)
        problem, _, exact_fn = build_problem(example, alpha, theta, tau,
                                             n_steps, ncells, sch, history,
                                             fast, setup=setup)
        hist = solve(problem)
        if exact_fn is not None:
            return error_at(hist, exact_fn, t_eval)
        k = _eval_index(t_eval, tau, n_steps)
        return hist.l2_norm(hist.levels[k] - references[alpha])

    grid = [(alpha, theta, tau) for alpha in sorted(alphas)
            for theta in sorted(thetas) for tau in taus]
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            errors = list(pool.map(lambda c: run_cell(*c), grid))
    else:
        errors = [run_cell(*cell) for cell in grid]

    rows = []
    for idx, ((alpha, theta, tau), err) in enumerate(zip(grid, errors)):
        first = idx % len(taus) == 0
        rate = None if first else observed_rate(errors[idx - 1], err)
        rows.append(RateRow(alpha, theta, tau, err, rate))
    return rows


def run_example1(alphas, thetas, taus, ncells: int, corrected: bool = True,
                 **kw):
    return run_convergence("ex1", alphas, thetas, taus, ncells,
                           scheme=CORRECTED if corrected else "plain", **kw)


def series_vs_reference(alpha: float, theta: float, n_steps: int, ncells: int,
                        t_final: float = 1.0, ref_factor: int = 8,
                        example: str = "ex2ii") -> np.ndarray:
    """Rows (t_n, error) against a fine reference trajectory (tau/ref_factor
    on a doubled mesh, fast history); for problems without a closed form."""
    ex = example_def(example)
    tau = t_final / n_steps
    problem, _, _ = build_problem(example, alpha, theta, tau, n_steps, ncells)
    hist = solve(problem)
    ref = _reference_solution(ex, alpha, ncells, tau / ref_factor, t_final,
                              None, stride=ref_factor, history=FAST2)
    out = np.empty((hist.n_levels, 2))
    for n in range(hist.n_levels):
        out[n, 0] = hist.times[n]
        out[n, 1] = hist.l2_norm(hist.levels[n] - ref[n])
    return out


def run_example2(case: str, alphas, thetas, taus, ncells: int,
                 with_series: bool = True, t_final: float = 1.0, **kw):
    """Rate rows plus, per grid cell, the early-time (t, error) series at
    the finest step size, for prefactor fitting: case (i) decays like
    t**(alpha-2), case (ii) like t**-2."""
    if case not in ("i", "ii"):
        raise ValueError("case must be 'i' or 'ii'")
    example = "ex2i" if case == "i" else "ex2ii"
    rows = run_convergence(example, alphas, thetas, taus, ncells,
                           t_final=t_final, **kw)
    series = {}
    if with_series:
        n_steps = round(t_final / min(taus))
        for alpha in sorted(alphas):
            for theta in sorted(thetas):
                if case == "i":
                    tau = t_final / n_steps
                    problem, _, exact_fn = build_problem(
                        example, alpha, theta, tau, n_steps, ncells)
                    series[(alpha, theta)] = error_series(solve(problem),
                                                          exact_fn)
                else:
                    series[(alpha, theta)] = series_vs_reference(
                        alpha, theta, n_steps, ncells, t_final)
    return rows, series


def run_example4(alphas, thetas, taus, ncells: int, **kw):
    return run_convergence("ex4", alphas, thetas, taus, ncells, **kw)


@dataclass(frozen=True)
class StabilityReport:
    theta: float
    init_max: float
    peak_max: float
    aborted_at: int | None
    flagged_unstable: bool
    probe_series: np.ndarray   # rows (t, u at the midpoint node)


def run_stability(theta: float, alpha: float = 0.8, tau: float = 5 * 2 ** -9,
                  t_final: float = 10.0, ncells: int = 500,
                  perturb: float = 1e-12) -> StabilityReport:
    """Long-time probe of the shift stability boundary.

    The initial datum carries a deterministic relative perturbation so the
    stiff modes start above the roundoff floor on both sides of the
    boundary; the stable side damps it, the unstable side amplifies it.
    """
    n_steps = round(t_final / tau)
    problem, setup, _ = build_problem("ex3", alpha, theta, tau, n_steps,
                                      ncells, CORRECTED, perturb=perturb)
    hist = solve(problem)
    linf = hist.linf_series()
    init = linf[0]
    peak = float(np.max(linf))
    mid = np.argmin(np.abs(setup.mesh.interior_nodes() - (setup.mesh.a + setup.mesh.b) / 2))
    series = np.column_stack([hist.times, hist.levels[:, mid]])
    flagged = (hist.unstable_at is not None) or not math.isfinite(peak) \
        or peak > 10.0 * init
    return StabilityReport(theta, init, peak, hist.unstable_at, flagged, series)


def run_example3(alphas=(0.1, 0.5, 0.9), thetas=(0.1, 0.01, 0.001, 0.0),
                 taus=None, ncells: int = 1000, stability: bool = True,
                 **kw):
    """Stability probes on both sides of theta = 1/2 plus the small-theta
    robustness rate table."""
    taus = taus or [2.0 ** -k for k in range(5, 10)]
    reports = []
    if stability:
        for theta in (0.509, 0.499):
            reports.append(run_stability(theta))
    rows = run_convergence("ex3", alphas, thetas, taus, ncells, **kw)
    return reports, rows


def prefactor_slope(example: str, alpha: float, theta: float, n_steps: int,
                    ncells: int, history: str = STANDARD,
                    fast: FastParams = FastParams(),
                    window: tuple[float, float] = (1e-2, 1e-1),
                    t_final: float = 1.0):
    """Least-squares slope of log(error) vs log(t) over the early-time
    window, plus the series rows (t, error)."""
    tau = t_final / n_steps
    problem, _, exact_fn = build_problem(example, alpha, theta, tau, n_steps,
                                         ncells, CORRECTED, history, fast)
    hist = solve(problem)
    series = error_series(hist, exact_fn)
    lo, hi = window
    mask = (series[:, 0] >= lo) & (series[:, 0] <= hi) & (series[:, 1] > 0)
    pts = series[mask]
    if pts.shape[0] < 3:
        raise RuntimeError("too few points in the fit window")
    slope = np.polyfit(np.log(pts[:, 0]), np.log(pts[:, 1]), 1)[0]
    return float(slope), series


def run_fast_accuracy(alpha: float, theta: float, algorithm: int,
                      n_min: int = 1, n_max: int = 250, tau: float = 2 ** -7,
                      block_base: int = 5, quad_nodes: int = 30):
    """Rows (n, exact, fast, abs_error) for the weight approximation."""
    exact = sftr_weights(alpha, theta, n_max)
    levels = {}
    rows = []
    for n in range(n_min, n_max + 1):
        ell = level_for_lag(n, block_base, exact_levels=0)
        if ell not in levels:
            levels[ell] = make_talbot_level(ell, tau, block_base, quad_nodes)
        try:
            approx = fast_weight(n, levels[ell], algorithm, alpha, theta)
        except Exception:
            approx = math.nan
        rows.append((n, exact[n], approx, abs(approx - exact[n])))
    return rows


def run_fast_timing(n_list, history_modes, ncells: int = 65,
                    alpha: float = 0.3, theta: float = 0.1,
                    warmup: bool = True, repeats: int = 1):
    """Wall time and peak retained history entries per (mode, N); the model
    problem is the smooth-datum diffusion example on a coarse mesh with
    tau = 1/N. Wall time is the best of `repeats` runs."""
    rows = []
    if warmup:
        for mode in history_modes:
            problem, _, _ = build_problem("ex2i", alpha, theta, 1.0 / 256, 256,
                                          ncells, CORRECTED, mode)
            solve(problem)
    for mode in history_modes:
        for n_steps in n_list:
            tau = 1.0 / n_steps
            problem, _, _ = build_problem("ex2i", alpha, theta, tau, n_steps,
                                          ncells, CORRECTED, mode)
            wall = math.inf
            for _ in range(max(repeats, 1)):
                t0 = time.perf_counter()
                hist = solve(problem)
                wall = min(wall, time.perf_counter() - t0)
            rows.append((mode, n_steps, wall,
                         hist.counters["history_entries_peak"]))
    return rows


def fast_deviation(example: str, alpha: float, theta: float, n_steps: int,
                   ncells: int, history: str, fast: FastParams = FastParams(),
                   t_final: float = 1.0) -> float:
    """max_n ||U_std - U_fast||_inf / ||U_std||_inf over the whole run."""
    tau = t_final / n_steps
    p_std, setup, _ = build_problem(example, alpha, theta, tau, n_steps,
                                    ncells, CORRECTED, STANDARD)
    p_fast, _, _ = build_problem(example, alpha, theta, tau, n_steps,
                                 ncells, CORRECTED, history, fast, setup=setup)
    u_std = solve(p_std).levels
    u_fast = solve(p_fast).levels
    dev = 0.0
    for n in range(1, u_std.shape[0]):
        denom = np.max(np.abs(u_std[n]))
        if denom > 0:
            dev = max(dev, np.max(np.abs(u_std[n] - u_fast[n])) / denom)
    return dev


def format_float(x) -> str:
    return format(float(x), ".17g")


def rate_rows_to_csv(rows) -> str:
    lines = ["alpha,theta,tau,error,rate"]
    for r in rows:
        rate = format_float(r.rate) if r.rate is not None else ""
        lines.append(",".join([format_float(r.alpha), format_float(r.theta),
                               format_float(r.tau), format_float(r.error), rate]))
    return "\n".join(lines) + "\n"


def series_to_csv(series, value_column: str) -> str:
    lines = [f"t,{value_column}"]
    for t, v in series:
        lines.append(f"{format_float(t)},{format_float(v)}")
    return "\n".join(lines) + "\n"
