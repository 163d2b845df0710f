"""Pure-numpy kernels. Reference semantics for the numba backend.

Per-step arithmetic follows the same operation order in both history modes
so a fast-history solve agrees bit-for-bit with the standard one while the
far field is still dormant (small step counts).
"""
from __future__ import annotations

import math

import numpy as np

NAME = "numpy"


def sftr_weight_recursion(alpha, theta, kmax):
    w = np.empty(kmax + 1)
    base = 2.0 * alpha / (alpha + 2.0 * theta)
    w[0] = base ** alpha
    if kmax >= 1:
        w[1] = -alpha * base ** (alpha + 1.0)
    c1 = 2.0 * theta / alpha
    c2 = (alpha - 2.0 * theta) / (2.0 * alpha)
    for k in range(2, kmax + 1):
        w[k] = (2.0 * alpha / (k * (alpha + 2.0 * theta))) * (
            (c1 * (k - 1) - alpha) * w[k - 1] + c2 * (k - 2) * w[k - 2]
        )
    return w


def poly_power_series(p0, p1, p2, alpha, kmax):
    """Coefficients of (p0 + p1*x + p2*x^2)**alpha via the power-of-series
    recurrence; O(kmax) work for a polynomial base."""
    c = np.empty(kmax + 1)
    c[0] = p0 ** alpha
    for i in range(1, kmax + 1):
        s = ((alpha + 1.0) - i) * p1 * c[i - 1]
        if i >= 2:
            s += (2.0 * (alpha + 1.0) - i) * p2 * c[i - 2]
        c[i] = s / (i * p0)
    return c


def thomas_factor(sub, diag, sup):
    m = diag.shape[0]
    cp = np.empty(m)
    dinv = np.empty(m)
    d = diag[0]
    if d == 0.0:
        raise ZeroDivisionError("zero pivot in tridiagonal factorization")
    dinv[0] = 1.0 / d
    if m > 1:
        cp[0] = sup[0] * dinv[0]
    else:
        cp[0] = 0.0
    for i in range(1, m):
        d = diag[i] - sub[i - 1] * cp[i - 1]
        if d == 0.0:
            raise ZeroDivisionError("zero pivot in tridiagonal factorization")
        dinv[i] = 1.0 / d
        cp[i] = sup[i] * dinv[i] if i < m - 1 else 0.0
    return cp, dinv


def thomas_solve_factored(sub, cp, dinv, rhs):
    m = rhs.shape[0]
    x = np.empty(m)
    x[0] = rhs[0] * dinv[0]
    for i in range(1, m):
        x[i] = (rhs[i] - sub[i - 1] * x[i - 1]) * dinv[i]
    for i in range(m - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return x


def tridiag_matvec(sub, diag, sup, x):
    y = diag * x
    if x.shape[0] > 1:
        y[:-1] += sup * x[1:]
        y[1:] += sub * x[:-1]
    return y


def _step_coeffs(n, corrected, theta):
    if n == 1 and corrected:
        return 1.5 - theta, 0.5, 1.0 - theta
    return 1.0, theta, 1.0 - theta


def solve_standard_loop(msub, mdiag, msup, asub, adiag, asup, v, loads,
                        omega, ta, theta, corrected, blow, W):
    """Time loop with the direct O(N^2) history sum. W is (N+1, dof) with
    W[0] = 0 on entry. Returns -1 on success or the first bad step index."""
    N = W.shape[0] - 1
    lsub = ta * omega[0] * msub + (1.0 - theta) * asub
    ldiag = ta * omega[0] * mdiag + (1.0 - theta) * adiag
    lsup = ta * omega[0] * msup + (1.0 - theta) * asup
    cp, dinv = thomas_factor(lsub, ldiag, lsup)
    av = tridiag_matvec(asub, adiag, asup, v)
    for n in range(1, N + 1):
        acc = omega[n:0:-1] @ W[0:n]
        acc *= ta
        mh = tridiag_matvec(msub, mdiag, msup, acc)
        aw = tridiag_matvec(asub, adiag, asup, W[n - 1])
        cv, c0, c1 = _step_coeffs(n, corrected, theta)
        rhs = -mh - theta * aw - cv * av + c0 * loads[n - 1] + c1 * loads[n]
        W[n] = thomas_solve_factored(lsub, cp, dinv, rhs)
        peak = np.max(np.abs(W[n]))
        if not math.isfinite(peak) or peak > blow:
            return n
    return -1


def _cpow_int(z, m):
    out = np.ones_like(z)
    base = z.copy()
    while m > 0:
        if m & 1:
            out = out * base
        base = base * base
        m >>= 1
    return out


def solve_fast_loop(msub, mdiag, msup, asub, adiag, asup, v, loads,
                    omega_near, tau, ta, theta, corrected,
                    r_tab, q_tab, wf_tab, bfac, p3, n_far, feed_stop,
                    blow, W, counters):
    """Time loop with the block-decomposed fast history.

    The near field (lags below n_far plus the youngest panel) is summed with
    exact weights from a ring buffer. Far panels are Talbot accumulators fed
    at arrival; on joining its level's window a panel is folded, with the
    direct power r**(n-e), into the accumulator of its group (the k-range of
    one next-level panel). Group accumulators advance by r per step, so each
    carries bounded powers over its bounded lifetime, and a group is
    discarded whole once the next level takes its range over.

    counters (int64[4]): accumulator feed updates, peak near entries,
    peak accumulator slots, steps with an active far field.
    """
    N = W.shape[0] - 1
    dof = W.shape[1]
    L = r_tab.shape[0]
    K = r_tab.shape[1] if L else 0

    lsub = ta * omega_near[0] * msub + (1.0 - theta) * asub
    ldiag = ta * omega_near[0] * mdiag + (1.0 - theta) * adiag
    lsup = ta * omega_near[0] * msup + (1.0 - theta) * asup
    cp, dinv = thomas_factor(lsub, ldiag, lsup)
    av = tridiag_matvec(asub, adiag, asup, v)

    cap = n_far + p3 + 2
    ring = np.zeros((cap, dof))
    psize = np.array([p3 * bfac ** i for i in range(max(L, 1))], dtype=np.int64)
    rcap = 2 * bfac + 4
    gcap = 4
    ybuild = np.zeros((L, K, dof), dtype=np.complex128)
    yfro = np.zeros((L, rcap, K, dof), dtype=np.complex128)
    efro = np.zeros((L, rcap), dtype=np.int64)
    fro_tail = np.zeros(L, dtype=np.int64)   # next free slot
    fro_join = np.zeros(L, dtype=np.int64)   # first panel not yet joined
    zgrp = np.zeros((L, gcap, K, dof), dtype=np.complex128)
    g_built = np.zeros(L, dtype=np.int64)    # highest group with content
    g_dead = np.zeros(L, dtype=np.int64)     # groups fully taken over
    joined = np.zeros(L, dtype=np.int64)
    b_near = 0

    for n in range(1, N + 1):
        for li in range(L - 1, -1, -1):
            p = int(psize[li])
            if li == 0:
                m_tgt = (n - n_far + 1) // p if n >= n_far else 0
            else:
                m_tgt = max((n + 1) // p - 1, 0)
            while joined[li] < m_tgt:
                m_next = joined[li] + 1
                slot = int(fro_join[li] % rcap)
                g = (m_next - 1) // bfac + 1
                gslot = (g - 1) % gcap
                if g > g_built[li]:
                    zgrp[li, gslot] = 0.0
                    g_built[li] = g
                # power n-1-e so the advance pass below lands on r**(n-e)
                adv = _cpow_int(r_tab[li], int(n - 1 - efro[li, slot]))
                zgrp[li, gslot] += adv[:, None] * yfro[li, slot]
                fro_join[li] += 1
                joined[li] = m_next
                if li == 0:
                    b_near = m_next * p
                else:
                    g_dead[li - 1] = m_next

        nn = n - b_near
        acc = omega_near[nn:0:-1] @ ring[np.arange(b_near, n) % cap]
        acc *= ta
        far_on = False
        for li in range(L):
            for g in range(int(g_dead[li]) + 1, int(g_built[li]) + 1):
                far_on = True
                gslot = (g - 1) % gcap
                z = zgrp[li, gslot]
                z *= r_tab[li][:, None]
                # flush decayed content before it goes subnormal
                tiny = (np.abs(z.real) < 1e-280) & (np.abs(z.imag) < 1e-280)
                if tiny.any():
                    z[tiny] = 0.0
                acc += (wf_tab[li][:, None] * z).sum(axis=0).real
        if far_on:
            counters[3] += 1
        mh = tridiag_matvec(msub, mdiag, msup, acc)
        aw = tridiag_matvec(asub, adiag, asup, W[n - 1])
        cv, c0, c1 = _step_coeffs(n, corrected, theta)
        rhs = -mh - theta * aw - cv * av + c0 * loads[n - 1] + c1 * loads[n]
        wn = thomas_solve_factored(lsub, cp, dinv, rhs)
        W[n] = wn
        peak = np.max(np.abs(wn))
        if not math.isfinite(peak) or peak > blow:
            return n

        ring[n % cap] = wn
        if n - b_near + 1 > counters[1]:
            counters[1] = n - b_near + 1
        slots = 0
        for li in range(L):
            if n >= feed_stop[li]:
                slots += K * (1 + int(fro_tail[li] - fro_join[li])
                              + int(g_built[li] - g_dead[li]))
                continue
            ybuild[li] = r_tab[li][:, None] * ybuild[li] \
                + tau * q_tab[li][:, None] * wn[None, :]
            counters[0] += K
            if (n + 1) % psize[li] == 0:
                slot = int(fro_tail[li] % rcap)
                yfro[li, slot] = ybuild[li]
                efro[li, slot] = n
                fro_tail[li] += 1
                ybuild[li] = 0.0
            slots += K * (1 + int(fro_tail[li] - fro_join[li])
                          + int(g_built[li] - g_dead[li]))
        if slots > counters[2]:
            counters[2] = slots
    return -1
