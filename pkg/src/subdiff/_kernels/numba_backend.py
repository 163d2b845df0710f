"""Numba-jitted kernels. Signatures and semantics mirror numpy_backend;
hot loops are written out so LLVM can vectorize the dof dimension.
"""
from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True, nogil=True)
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


@njit(cache=True, nogil=True)
def poly_power_series(p0, p1, p2, alpha, kmax):
    c = np.empty(kmax + 1)
    c[0] = p0 ** alpha
    for i in range(1, kmax + 1):
        s = ((alpha + 1.0) - i) * p1 * c[i - 1]
        if i >= 2:
            s += (2.0 * (alpha + 1.0) - i) * p2 * c[i - 2]
        c[i] = s / (i * p0)
    return c


@njit(cache=True, nogil=True)
def thomas_factor(sub, diag, sup):
    m = diag.shape[0]
    cp = np.empty(m)
    dinv = np.empty(m)
    d = diag[0]
    if d == 0.0:
        raise ValueError("zero pivot in tridiagonal factorization")
    dinv[0] = 1.0 / d
    cp[0] = sup[0] * dinv[0] if m > 1 else 0.0
    for i in range(1, m):
        d = diag[i] - sub[i - 1] * cp[i - 1]
        if d == 0.0:
            raise ValueError("zero pivot in tridiagonal factorization")
        dinv[i] = 1.0 / d
        cp[i] = sup[i] * dinv[i] if i < m - 1 else 0.0
    return cp, dinv


@njit(cache=True, nogil=True)
def thomas_solve_factored(sub, cp, dinv, rhs):
    m = rhs.shape[0]
    x = np.empty(m)
    x[0] = rhs[0] * dinv[0]
    for i in range(1, m):
        x[i] = (rhs[i] - sub[i - 1] * x[i - 1]) * dinv[i]
    for i in range(m - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return x


@njit(cache=True, nogil=True)
def tridiag_matvec(sub, diag, sup, x):
    m = x.shape[0]
    y = np.empty(m)
    if m == 1:
        y[0] = diag[0] * x[0]
        return y
    y[0] = diag[0] * x[0] + sup[0] * x[1]
    for i in range(1, m - 1):
        y[i] = sub[i - 1] * x[i - 1] + diag[i] * x[i] + sup[i] * x[i + 1]
    y[m - 1] = sub[m - 2] * x[m - 2] + diag[m - 1] * x[m - 1]
    return y


@njit(cache=True, nogil=True)
def _peak_abs(x):
    p = 0.0
    for i in range(x.shape[0]):
        a = abs(x[i])
        if a > p or a != a:
            p = a
    return p


@njit(cache=True, nogil=True)
def solve_standard_loop(msub, mdiag, msup, asub, adiag, asup, v, loads,
                        omega, ta, theta, corrected, blow, W):
    N = W.shape[0] - 1
    dof = W.shape[1]
    lsub = ta * omega[0] * msub + (1.0 - theta) * asub
    ldiag = ta * omega[0] * mdiag + (1.0 - theta) * adiag
    lsup = ta * omega[0] * msup + (1.0 - theta) * asup
    cp, dinv = thomas_factor(lsub, ldiag, lsup)
    av = tridiag_matvec(asub, adiag, asup, v)
    acc = np.empty(dof)
    rhs = np.empty(dof)
    for n in range(1, N + 1):
        for i in range(dof):
            acc[i] = 0.0
        for k in range(0, n):
            wk = omega[n - k]
            for i in range(dof):
                acc[i] += wk * W[k, i]
        for i in range(dof):
            acc[i] *= ta
        mh = tridiag_matvec(msub, mdiag, msup, acc)
        aw = tridiag_matvec(asub, adiag, asup, W[n - 1])
        if n == 1 and corrected:
            cv = 1.5 - theta
            c0 = 0.5
            c1 = 1.0 - theta
        else:
            cv = 1.0
            c0 = theta
            c1 = 1.0 - theta
        for i in range(dof):
            rhs[i] = -mh[i] - theta * aw[i] - cv * av[i] \
                + c0 * loads[n - 1, i] + c1 * loads[n, i]
        wn = thomas_solve_factored(lsub, cp, dinv, rhs)
        for i in range(dof):
            W[n, i] = wn[i]
        peak = _peak_abs(wn)
        if not np.isfinite(peak) or peak > blow:
            return n
    return -1


@njit(cache=True, nogil=True)
def _cpow_int_scalar(z, m):
    out = 1.0 + 0.0j
    base = z
    while m > 0:
        if m & 1:
            out = out * base
        base = base * base
        m >>= 1
    return out


@njit(cache=True, nogil=True)
def solve_fast_loop(msub, mdiag, msup, asub, adiag, asup, v, loads,
                    omega_near, tau, ta, theta, corrected,
                    r_tab, q_tab, wf_tab, bfac, p3, n_far, feed_stop,
                    blow, W, counters):
    N = W.shape[0] - 1
    dof = W.shape[1]
    L = r_tab.shape[0]
    K = r_tab.shape[1]

    lsub = ta * omega_near[0] * msub + (1.0 - theta) * asub
    ldiag = ta * omega_near[0] * mdiag + (1.0 - theta) * adiag
    lsup = ta * omega_near[0] * msup + (1.0 - theta) * asup
    cp, dinv = thomas_factor(lsub, ldiag, lsup)
    av = tridiag_matvec(asub, adiag, asup, v)

    cap = n_far + p3 + 2
    ring = np.zeros((cap, dof))
    psize = np.empty(max(L, 1), dtype=np.int64)
    p = p3
    for li in range(max(L, 1)):
        psize[li] = p
        p *= bfac
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

    acc = np.empty(dof)
    rhs = np.empty(dof)
    for n in range(1, N + 1):
        for li in range(L - 1, -1, -1):
            p = psize[li]
            if li == 0:
                m_tgt = (n - n_far + 1) // p if n >= n_far else 0
            else:
                m_tgt = (n + 1) // p - 1
                if m_tgt < 0:
                    m_tgt = 0
            while joined[li] < m_tgt:
                m_next = joined[li] + 1
                slot = fro_join[li] % rcap
                g = (m_next - 1) // bfac + 1
                gslot = (g - 1) % gcap
                if g > g_built[li]:
                    for j in range(K):
                        for i in range(dof):
                            zgrp[li, gslot, j, i] = 0.0
                    g_built[li] = g
                # power n-1-e so the advance pass below lands on r**(n-e)
                shift = n - 1 - efro[li, slot]
                for j in range(K):
                    adv = _cpow_int_scalar(r_tab[li, j], shift)
                    for i in range(dof):
                        zgrp[li, gslot, j, i] += adv * yfro[li, slot, j, i]
                fro_join[li] += 1
                joined[li] = m_next
                if li == 0:
                    b_near = m_next * p
                else:
                    g_dead[li - 1] = m_next

        for i in range(dof):
            acc[i] = 0.0
        for k in range(b_near, n):
            wk = omega_near[n - k]
            row = k % cap
            for i in range(dof):
                acc[i] += wk * ring[row, i]
        for i in range(dof):
            acc[i] *= ta
        far_on = False
        for li in range(L):
            for g in range(g_dead[li] + 1, g_built[li] + 1):
                far_on = True
                gslot = (g - 1) % gcap
                for j in range(K):
                    rj = r_tab[li, j]
                    wfj = wf_tab[li, j]
                    wre = wfj.real
                    wim = wfj.imag
                    for i in range(dof):
                        z = rj * zgrp[li, gslot, j, i]
                        # flush decayed content before it goes subnormal
                        if abs(z.real) < 1e-280 and abs(z.imag) < 1e-280:
                            z = 0.0 + 0.0j
                        zgrp[li, gslot, j, i] = z
                        acc[i] += wre * z.real - wim * z.imag
        if far_on:
            counters[3] += 1
        mh = tridiag_matvec(msub, mdiag, msup, acc)
        aw = tridiag_matvec(asub, adiag, asup, W[n - 1])
        if n == 1 and corrected:
            cv = 1.5 - theta
            c0 = 0.5
            c1 = 1.0 - theta
        else:
            cv = 1.0
            c0 = theta
            c1 = 1.0 - theta
        for i in range(dof):
            rhs[i] = -mh[i] - theta * aw[i] - cv * av[i] \
                + c0 * loads[n - 1, i] + c1 * loads[n, i]
        wn = thomas_solve_factored(lsub, cp, dinv, rhs)
        for i in range(dof):
            W[n, i] = wn[i]
        peak = _peak_abs(wn)
        if not np.isfinite(peak) or peak > blow:
            return n

        row = n % cap
        for i in range(dof):
            ring[row, i] = wn[i]
        if n - b_near + 1 > counters[1]:
            counters[1] = n - b_near + 1
        slots = 0
        for li in range(L):
            if n >= feed_stop[li]:
                slots += K * (1 + (fro_tail[li] - fro_join[li])
                              + (g_built[li] - g_dead[li]))
                continue
            for j in range(K):
                rj = r_tab[li, j]
                qj = tau * q_tab[li, j]
                for i in range(dof):
                    ybuild[li, j, i] = rj * ybuild[li, j, i] + qj * wn[i]
            counters[0] += K
            if (n + 1) % psize[li] == 0:
                slot = fro_tail[li] % rcap
                for j in range(K):
                    for i in range(dof):
                        yfro[li, slot, j, i] = ybuild[li, j, i]
                        ybuild[li, j, i] = 0.0
                efro[li, slot] = n
                fro_tail[li] += 1
            slots += K * (1 + (fro_tail[li] - fro_join[li])
                          + (g_built[li] - g_dead[li]))
        if slots > counters[2]:
            counters[2] = slots
    return -1
