"""Talbot-contour approximation of far-history weights and the geometric
block decomposition behind the O(N log N) history summation.

Weights with lag n in the level-l window I_l = [B^(l-1)*tau, (2B^l-2)*tau]
are reproduced by trapezoidal quadrature on a Talbot contour scaled to that
window. Two contour reformulations are available: algorithm 1 carries the
fractional power in the spectral variable, algorithm 2 in the shifted
resolvent. The youngest lags (below `exact_min_lag`, plus the lowest
`exact_levels` windows) always use exact weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import ParameterDomainError

TALBOT_KAPPA = 0.5653
TALBOT_NU = 0.6443
TALBOT_IOTA = -0.4814


class FastAlgorithmError(ValueError):
    """Contour/parameter combination outside the algorithm's domain."""


@dataclass(frozen=True)
class FastParams:
    """Tuning constants of the fast history summation."""

    algorithm: int = 1
    block_base: int = 5
    quad_nodes: int = 30
    exact_levels: int = 2
    exact_min_lag: int = 50

    def __post_init__(self):
        if self.algorithm not in (1, 2):
            raise FastAlgorithmError(f"algorithm must be 1 or 2, got {self.algorithm}")
        if self.block_base < 2:
            raise FastAlgorithmError("block_base must be >= 2")
        if self.quad_nodes < 1 or self.exact_levels < 1:
            raise FastAlgorithmError("quad_nodes and exact_levels must be >= 1")

    @property
    def near_lag(self) -> int:
        return max(self.exact_min_lag, self.block_base ** self.exact_levels)


def talbot_point(angle: float, scale: float) -> complex:
    """Contour point lambda(angle, scale); the angle=0 limit is taken
    analytically."""
    if not (abs(angle) < math.pi):
        raise ParameterDomainError(f"talbot angle {angle} outside (-pi, pi)")
    if angle == 0.0:
        cot_part = 1.0
    else:
        cot_part = angle / math.tan(angle)
    return scale * ((cot_part + 1j * TALBOT_KAPPA * angle) * TALBOT_NU + TALBOT_IOTA)


def talbot_derivative(angle: float, scale: float) -> complex:
    """d lambda / d angle, with the angle=0 limit of the real part (0)."""
    if not (abs(angle) < math.pi):
        raise ParameterDomainError(f"talbot angle {angle} outside (-pi, pi)")
    if angle == 0.0:
        real = 0.0
    else:
        s = math.sin(angle)
        real = 1.0 / math.tan(angle) - angle / (s * s)
    return scale * TALBOT_NU * (real + 1j * TALBOT_KAPPA)


def kernel_F(algorithm: int, lam: complex, alpha: float, theta: float,
             tau: float) -> complex:
    """Transform kernel evaluated at the contour point (principal branch)."""
    if lam == 0:
        raise FastAlgorithmError("kernel_F: lambda = 0")
    if algorithm == 1:
        return lam ** alpha
    arg = 1.0 / lam + (theta / alpha - 0.5) * tau
    if abs(arg) < 1e-14:
        raise FastAlgorithmError(
            "kernel_F: singular shifted resolvent; theta violates the sector "
            "condition for algorithm 2")
    return arg ** (-alpha)


def _rq(algorithm: int, z: complex, alpha: float, theta: float):
    if algorithm == 1:
        c = theta / alpha
        d1 = 1.0 - z * (0.5 + c)
        d2 = 1.0 + z * (0.5 - c)
        if abs(d1) < 1e-14 or abs(d2) < 1e-14:
            raise FastAlgorithmError("coefficient kernel pole at z=%r" % (z,))
        return d2 / d1, 1.0 / (d1 * d2)
    d = 1.0 - z
    if abs(d) < 1e-14:
        raise FastAlgorithmError("coefficient kernel pole at z=%r" % (z,))
    r = 1.0 / d
    return r, r


def kernel_e(algorithm: int, n: int, z: complex, alpha: float, theta: float) -> complex:
    """n-th coefficient of the geometric resolvent kernel, q * r**n."""
    if n < 0:
        raise ValueError("kernel_e: n must be >= 0")
    r, q = _rq(algorithm, z, alpha, theta)
    if n == 0 and algorithm == 1:
        # the n=0 coefficient of algorithm 1 is not of the q*r^n form
        c = theta / alpha
        return (0.5 + c) / (1.0 - z * (0.5 + c))
    return q * r ** n


@dataclass(frozen=True)
class TalbotLevel:
    """Quadrature rule of one lag window: nodes, weights and the window."""

    level: int
    block_base: int
    quad_nodes: int
    tau: float
    t_right: float
    nodes: np.ndarray
    quad_weights: np.ndarray

    @property
    def lag_window(self) -> tuple[int, int]:
        b = self.block_base
        return b ** (self.level - 1), 2 * b ** self.level - 2


def make_talbot_level(level: int, tau: float, block_base: int = 5,
                      quad_nodes: int = 30) -> TalbotLevel:
    if level < 1:
        raise FastAlgorithmError("level must be >= 1")
    kc = quad_nodes
    t_right = (2 * block_base ** level - 2) * tau
    scale = kc / t_right
    js = np.arange(-kc, kc + 1)
    angles = js * math.pi / (kc + 1)
    nodes = np.array([talbot_point(a, scale) for a in angles])
    wts = np.array([talbot_derivative(a, scale) / (2j * (kc + 1)) for a in angles])
    return TalbotLevel(level, block_base, kc, tau, t_right, nodes, wts)


def quadrature_sum(n: int, level: TalbotLevel, algorithm: int, alpha: float,
                   theta: float) -> complex:
    """Raw contour sum approximating the lag-n weight (complex, before
    discarding the conjugate-pair residue)."""
    lo, hi = level.lag_window
    if not (lo <= n <= hi):
        raise FastAlgorithmError(
            f"lag {n} outside window [{lo}, {hi}] of level {level.level}")
    tau = level.tau
    total = 0.0 + 0.0j
    for lam, w in zip(level.nodes, level.quad_weights):
        z = tau * lam
        r, q = _rq(algorithm, z, alpha, theta)
        total += w * (r ** n) * q * kernel_F(algorithm, lam, alpha, theta, tau)
    return tau ** (alpha + 1.0) * total


def fast_weight(n: int, level: TalbotLevel, algorithm: int, alpha: float,
                theta: float) -> float:
    return quadrature_sum(n, level, algorithm, alpha, theta).real


def level_for_lag(n: int, block_base: int = 5, exact_levels: int = 2) -> int:
    """Smallest far level whose window contains lag n."""
    ell = exact_levels + 1
    while n > 2 * block_base ** ell - 2:
        ell += 1
    return ell


def update_accumulator(y, w_entry, r, q, tau):
    """One append step of a block accumulator: y' = r*y + tau*q*w."""
    y = np.asarray(y, dtype=np.complex128)
    r = np.asarray(r, dtype=np.complex128)
    q = np.asarray(q, dtype=np.complex128)
    if y.ndim == 2:
        return r[:, None] * y + tau * q[:, None] * np.asarray(w_entry)[None, :]
    return r * y + tau * q * w_entry


class FastHistoryState:
    """Reference state machine of the fast history summation.

    Mirrors the solver kernels step by step in plain numpy: a near-field
    ring of raw entries, per-level building accumulators fed at arrival,
    frozen panels, and per-group Talbot accumulators for the far field.
    Used for validation and as the state surface of `fast_history_sum`;
    the production loops live in the kernel backends.
    """

    def __init__(self, alpha, theta, tau, n_steps, dof=1,
                 fast: FastParams = FastParams()):
        from ._kernels import get_backend

        self.alpha = alpha
        self.theta = theta
        self.tau = tau
        self.fast = fast
        self.dof = dof
        self.n_entries = 0  # entries appended so far (k = 0 implicit zero)
        (self.r_tab, self.q_tab, self.wf_tab, self.p3, self.n_far,
         self.feed_stop) = build_level_tables(n_steps, tau, alpha, theta, fast)
        self.levels = self.r_tab.shape[0]
        kmax = min(n_steps, self.n_far + self.p3)
        w = get_backend().sftr_weight_recursion(alpha, theta, kmax)
        self.omega_near = w
        self.ring = {0: np.zeros(dof)}
        self.b_near = 0
        K = self.r_tab.shape[1] if self.levels else 0
        self.ybuild = np.zeros((self.levels, K, dof), complex)
        self.frozen = [dict() for _ in range(self.levels)]   # panel m -> y
        self.zgrp = [dict() for _ in range(self.levels)]     # group g -> Z
        self.joined = [0] * self.levels
        self.g_dead = [0] * self.levels

    def _psize(self, li):
        return self.p3 * self.fast.block_base ** li

    def boundaries(self):
        n = self.n_entries + 1
        return block_decomposition(n, self.fast.block_base,
                                   self.fast.exact_levels,
                                   self.fast.exact_min_lag)

    def append(self, w_entry):
        """Record W^k for k = n_entries + 1 and feed the level builders."""
        self.n_entries += 1
        k = self.n_entries
        w_entry = np.asarray(w_entry, float).reshape(self.dof)
        self.ring[k] = w_entry.copy()
        for li in range(self.levels):
            if k >= self.feed_stop[li]:
                continue
            self.ybuild[li] = update_accumulator(
                self.ybuild[li], w_entry, self.r_tab[li], self.q_tab[li],
                self.tau)
            p = self._psize(li)
            if (k + 1) % p == 0:
                self.frozen[li][(k + 1) // p] = self.ybuild[li].copy()
                self.ybuild[li] = np.zeros_like(self.ybuild[li])

    def _advance_blocks(self, n):
        bfac = self.fast.block_base
        for li in range(self.levels - 1, -1, -1):
            p = self._psize(li)
            if li == 0:
                m_tgt = (n - self.n_far + 1) // p if n >= self.n_far else 0
            else:
                m_tgt = max((n + 1) // p - 1, 0)
            while self.joined[li] < m_tgt:
                m = self.joined[li] + 1
                g = (m - 1) // bfac + 1
                y = self.frozen[li].pop(m)
                # power n-1-e so the advance in history_sum lands on n-e
                shift = n - m * p
                z = self.zgrp[li].setdefault(g, np.zeros_like(y))
                z += self.r_tab[li][:, None] ** shift * y
                self.joined[li] = m
                if li == 0:
                    self.b_near = m * p
                    for kk in list(self.ring):
                        if kk < self.b_near:
                            del self.ring[kk]
                else:
                    self.g_dead[li - 1] = m
                    dead = self.zgrp[li - 1]
                    for gg in list(dead):
                        if gg <= m:
                            del dead[gg]

    def history_sum(self, n):
        """tau^(-alpha)-scaled history sum for step n (entries < n), i.e.
        the discrete-derivative history term without the omega_0 W^n part."""
        if n != self.n_entries + 1:
            raise RuntimeError(
                f"stale state: advanced through {self.n_entries}, asked for "
                f"step {n}")
        self._advance_blocks(n)
        total = np.zeros(self.dof, complex)
        for k in range(self.b_near, n):
            total += self.omega_near[n - k] * self.ring[k]
        total *= self.tau ** (-self.alpha)
        for li in range(self.levels):
            shifted = {}
            for g, z in self.zgrp[li].items():
                z = z * self.r_tab[li][:, None]
                shifted[g] = z
                total += (self.wf_tab[li][:, None] * z).sum(axis=0)
            self.zgrp[li].update(shifted)
        return total


def fast_history_sum(state: FastHistoryState, n: int) -> np.ndarray:
    """Real part of the state's history sum at step n; the conjugate-pair
    structure of the quadrature keeps the imaginary residue at rounding
    level."""
    total = state.history_sum(n)
    return total.real


@dataclass(frozen=True)
class BlockDecomposition:
    """Boundaries n = b_0 > b_1 > ... > b_L = 0 and the level of each block
    [b_i, b_{i-1}-1]. Far blocks satisfy the lag-window property; near
    blocks may hold extra young lags kept exact by `exact_min_lag`."""

    n: int
    boundaries: list[int]
    levels: list[int]

    def blocks(self):
        out = []
        for i in range(1, len(self.boundaries)):
            out.append((self.levels[i - 1], self.boundaries[i],
                        self.boundaries[i - 1] - 1))
        return out


def _far_join_count(n: int, li: int, p3: int, block_base: int, n_far: int) -> int:
    p = p3 * block_base ** li
    if li == 0:
        return max((n - n_far + 1) // p, 0) if n >= n_far else 0
    return max((n + 1) // p - 1, 0)


def block_decomposition(n: int, block_base: int = 5, exact_levels: int = 2,
                        exact_min_lag: int = 50) -> BlockDecomposition:
    if n < 1:
        raise ValueError("block decomposition needs n >= 1")
    b = block_base
    p3 = b ** exact_levels
    n_far = max(exact_min_lag, p3)
    bounds = [n]
    levels = []
    b_near = _far_join_count(n, 0, p3, b, n_far) * p3
    prev = n
    for ell in range(1, exact_levels + 1):
        if ell < exact_levels:
            cut = max(b_near, n - (2 * b ** ell - 2))
        else:
            cut = b_near
        if cut < prev:
            bounds.append(cut)
            levels.append(ell)
            prev = cut
    li = 0
    while prev > 0:
        cut = _far_join_count(n, li + 1, p3, b, n_far) * (p3 * b ** (li + 1))
        if cut < prev:
            bounds.append(cut)
            levels.append(exact_levels + 1 + li)
            prev = cut
        li += 1
    return BlockDecomposition(n, bounds, levels)


def build_level_tables(n_steps: int, tau: float, alpha: float, theta: float,
                       fast: FastParams):
    """Per-level kernel tables for the fast stepping loop: complex (L, K)
    arrays of the recursion ratio r, feed factor q, and the product of
    quadrature weight and transform kernel."""
    b = fast.block_base
    p3 = b ** fast.exact_levels
    n_far = fast.near_lag
    rows = []
    li = 0
    while True:
        first_join = p3 + n_far - 1 if li == 0 else 2 * (p3 * b ** li) - 1
        if first_join > n_steps:
            break
        rows.append(fast.exact_levels + 1 + li)
        li += 1
    K = 2 * fast.quad_nodes + 1
    r_tab = np.zeros((len(rows), K), dtype=np.complex128)
    q_tab = np.zeros((len(rows), K), dtype=np.complex128)
    wf_tab = np.zeros((len(rows), K), dtype=np.complex128)
    max_re_z = -math.inf
    for i, ell in enumerate(rows):
        lvl = make_talbot_level(ell, tau, b, fast.quad_nodes)
        for j, (lam, w) in enumerate(zip(lvl.nodes, lvl.quad_weights)):
            z = tau * lam
            max_re_z = max(max_re_z, z.real)
            r, q = _rq(fast.algorithm, z, alpha, theta)
            r_tab[i, j] = r
            q_tab[i, j] = q
            # tau**(alpha+1) of the weight formula cancels against the
            # tau**(-alpha) derivative prefactor and the tau in the feed
            wf_tab[i, j] = w * kernel_F(fast.algorithm, lam, alpha, theta, tau)
    if rows and fast.algorithm == 1:
        pole = 1.0 / (0.5 + theta / alpha)
        if not (max_re_z < pole):
            raise FastAlgorithmError(
                f"algorithm 1 pole z={pole:.6g} not strictly right of the "
                f"contour (max Re z = {max_re_z:.6g}); theta/alpha too large")
    # entries beyond a level's last panel that can still join within
    # n_steps never contribute through that level; stop feeding there
    feed_stop = np.empty(len(rows), dtype=np.int64)
    for i in range(len(rows)):
        p = p3 * b ** i
        feed_stop[i] = _far_join_count(n_steps, i, p3, b, n_far) * p
    return r_tab, q_tab, wf_tab, p3, n_far, feed_stop
