"""Command-line driver: weight tables, single solves, convergence sweeps,
fast-weight checks and timing benchmarks, all emitting CSV."""
from __future__ import annotations

import argparse
import math
import sys

from . import experiments as xp
from ._kernels import backend_name, set_backend
from .fast_history import FastParams
from .params import SchemeParams
from .stepping import (CN_FBDF2, CORRECTED, CRANK_NICOLSON, PLAIN, STANDARD,
                       DiscreteProblem, SpatialSystem, error_series, solve)
from .weights import combined_cn_fbdf2_weights, fbdf2_weights, sftr_weights

_SCHEME_FLAGS = {"plain": PLAIN, "corrected": CORRECTED, "cn": CRANK_NICOLSON,
                 "cnfbdf2": CN_FBDF2}


def _parse_tau_token(tok: str) -> float:
    tok = tok.strip()
    if "^" in tok:
        base, exp = tok.split("^")
        return float(base) ** float(exp)
    return float(tok)


def parse_taus(spec: str):
    """Accepts '2^-5..2^-9' (exponent range), comma lists of '2^-k' tokens,
    or plain floats."""
    spec = spec.strip()
    if ".." in spec:
        lo_tok, hi_tok = spec.split("..")
        b1, e1 = lo_tok.split("^")
        b2, e2 = hi_tok.split("^")
        if b1.strip() != b2.strip():
            raise ValueError("tau range must use one base")
        base = float(b1)
        e1, e2 = int(e1), int(e2)
        step = 1 if e2 >= e1 else -1
        return [base ** e for e in range(e1, e2 + step, step)]
    return [_parse_tau_token(t) for t in spec.split(",")]


def _parse_floats(spec: str):
    return [float(t) for t in spec.split(",")]


def _write(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _fast_params(args, algorithm: int) -> FastParams:
    return FastParams(algorithm=algorithm, block_base=args.fast_b,
                      quad_nodes=args.fast_kc)


def _add_fast_flags(p):
    p.add_argument("--fast-b", type=int, default=5, help="block base B")
    p.add_argument("--fast-kc", type=int, default=30,
                   help="Talbot nodes per half contour")


def cmd_weights(args) -> int:
    k = args.count
    if args.kind == "sftr":
        tab = sftr_weights(args.alpha, args.theta, k)
    elif args.kind == "fbdf2":
        tab = fbdf2_weights(args.alpha, k)
    else:
        tab = combined_cn_fbdf2_weights(args.alpha, args.theta, k)
    lines = ["k,omega"]
    for i, w in enumerate(tab.weights):
        lines.append(f"{i},{xp.format_float(w)}")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_solve(args) -> int:
    scheme = _SCHEME_FLAGS[args.scheme]
    history = args.history
    fast = _fast_params(args, 1 if history == "fast1" else 2)
    tau = args.tfinal / args.nsteps
    if args.problem == "scalar":
        params = SchemeParams(args.alpha, args.theta, tau, args.nsteps)
        system = SpatialSystem.scalar(args.lam)
        import numpy as np

        load = np.full((args.nsteps + 1, 1), args.fvalue)
        problem = DiscreteProblem(system=system, v_h=np.array([args.v0]),
                                  params=params, scheme=scheme,
                                  load_table=load, history=history, fast=fast)
        hist = solve(problem)
        series = [(t, u) for t, u in zip(hist.times, hist.linf_series())]
        _write(args.out, xp.series_to_csv(series, "linf_norm"))
        return 0
    problem, setup, exact_fn = xp.build_problem(
        args.problem, args.alpha, args.theta, tau, args.nsteps, args.ncells,
        scheme, history, fast)
    sys.stderr.write(f"mesh: ncells={args.ncells} h={setup.mesh.h:.6g}\n")
    hist = solve(problem)
    if exact_fn is not None and args.problem in ("ex1", "ex2i"):
        series = error_series(hist, exact_fn)
        _write(args.out, xp.series_to_csv(series, "error"))
    else:
        series = [(t, u) for t, u in zip(hist.times, hist.linf_series())]
        _write(args.out, xp.series_to_csv(series, "linf_norm"))
    if hist.unstable_at is not None:
        sys.stderr.write(f"unstable: aborted at step {hist.unstable_at}\n")
    return 0


def cmd_convergence(args) -> int:
    taus = parse_taus(args.taus)
    scheme = _SCHEME_FLAGS[args.scheme]
    history = args.history
    fast = _fast_params(args, 1 if history == "fast1" else 2)
    ex = xp.example_def(args.example)
    sys.stderr.write(f"mesh: ncells={args.ncells} "
                     f"h={(ex.b - ex.a) / args.ncells:.6g}\n")
    rows = xp.run_convergence(args.example, _parse_floats(args.alphas),
                              _parse_floats(args.thetas), taus, args.ncells,
                              scheme, history, fast, t_eval=args.t_eval,
                              t_final=args.tfinal, workers=args.workers)
    _write(args.out, xp.rate_rows_to_csv(rows))
    return 0


def cmd_fastcheck(args) -> int:
    rows = xp.run_fast_accuracy(args.alpha, args.theta, args.alg,
                                n_min=args.nmin, n_max=args.nmax,
                                block_base=args.b, quad_nodes=args.kc)
    lines = ["n,exact,fast,abs_error"]
    for n, exact, fast, err in rows:
        lines.append(f"{n},{xp.format_float(exact)},{xp.format_float(fast)},"
                     f"{xp.format_float(err)}")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_bench(args) -> int:
    if args.backend != "auto":
        set_backend(args.backend)
    n_list = [int(t) for t in args.nsteps.split(",")]
    rows = xp.run_fast_timing(n_list, [args.history], ncells=args.ncells,
                              alpha=args.alpha, theta=args.theta)
    lines = ["n_steps,wall_seconds,history_entries_peak"]
    for _, n, wall, peak in rows:
        lines.append(f"{n},{xp.format_float(wall)},{peak}")
    _write(args.out, "\n".join(lines) + "\n")
    sys.stderr.write(f"kernel backend: {backend_name()}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="subdiff",
                                 description="subdiffusion solver experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("weights", help="emit a convolution weight table")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--kind", choices=("sftr", "fbdf2", "cnfbdf2"),
                   default="sftr")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_weights)

    p = sub.add_parser("solve", help="run one problem and emit a series")
    p.add_argument("--problem", choices=("ex1", "ex2i", "ex2ii", "ex3", "scalar"),
                   required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--nsteps", type=int, required=True)
    p.add_argument("--ncells", type=int, default=1000)
    p.add_argument("--scheme", choices=tuple(_SCHEME_FLAGS), default="corrected")
    p.add_argument("--tfinal", type=float, default=1.0)
    p.add_argument("--history", choices=("standard", "fast1", "fast2"),
                   default="standard")
    p.add_argument("--lam", type=float, default=0.0,
                   help="scalar-mode operator value")
    p.add_argument("--v0", type=float, default=0.0, help="scalar-mode datum")
    p.add_argument("--fvalue", type=float, default=0.0,
                   help="scalar-mode constant source")
    p.add_argument("--out", default="-")
    _add_fast_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("convergence", help="rate table over a parameter grid")
    p.add_argument("--example", choices=xp.EXAMPLES, required=True)
    p.add_argument("--alphas", required=True)
    p.add_argument("--thetas", required=True)
    p.add_argument("--taus", required=True, help="e.g. 2^-5..2^-9")
    p.add_argument("--ncells", type=int, default=1000)
    p.add_argument("--scheme", choices=tuple(_SCHEME_FLAGS), default="corrected")
    p.add_argument("--history", choices=("standard", "fast1", "fast2"),
                   default="standard")
    p.add_argument("--t-eval", type=float, default=0.5)
    p.add_argument("--tfinal", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1,
                   help="thread pool size for independent cells")
    p.add_argument("--out", default="-")
    _add_fast_flags(p)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("fastcheck", help="fast-vs-exact weight table")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--alg", type=int, choices=(1, 2), default=1)
    p.add_argument("--kc", type=int, default=30)
    p.add_argument("--b", type=int, default=5)
    p.add_argument("--nmin", type=int, default=1)
    p.add_argument("--nmax", type=int, default=250)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_fastcheck)

    p = sub.add_parser("bench", help="timing and history-retention sweep")
    p.add_argument("--history", choices=("standard", "fast1", "fast2"),
                   required=True)
    p.add_argument("--nsteps", required=True, help="comma list, e.g. 4096,8192")
    p.add_argument("--ncells", type=int, default=65)
    p.add_argument("--alpha", type=float, default=0.3)
    p.add_argument("--theta", type=float, default=0.1)
    p.add_argument("--backend", choices=("auto", "numba", "numpy"),
                   default="auto")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # one machine-readable line, nonzero exit
        sys.stderr.write(f"error: command={args.command} "
                         f"type={type(exc).__name__} message={exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
