"""Compiled inner loops for tracking along linear segments.

These mirror ``LinearPath.prober`` and ``tracker._search`` exactly, but
evaluate one probe at a time with early exit, which is what makes long
paths affordable.  Supports are padded to a common size; padded slots
repeat a real point and carry zero coefficients.
"""

from __future__ import annotations

import numpy as np
from numba import njit


# A Newton step of length below this leaves an error of its square times gamma.
POLISH_BETA = 1e-7


@njit(cache=True)
def probe_data(x, pts, npts, g, f, rho):
    n = x.shape[0]
    Fg = np.zeros(n, np.complex128)
    Ff = np.zeros(n, np.complex128)
    Jg = np.zeros((n, n), np.complex128)
    Jf = np.zeros((n, n), np.complex128)
    gg = np.zeros(n)
    ff = np.zeros(n)
    gf = np.zeros(n)
    smax = pts.shape[1]
    expo = np.empty(smax, np.complex128)
    for i in range(n):
        ell = -np.inf
        for k in range(npts[i]):
            v = 0j
            for j in range(n):
                v += x[j] * pts[i, k, j]
            expo[k] = v
            if v.real > ell:
                ell = v.real
        for k in range(npts[i]):
            e = np.exp(expo[k] - ell)
            re = rho[i, k] * e
            gre = g[i, k] * re
            fre = f[i, k] * re
            Fg[i] += gre
            Ff[i] += fre
            for j in range(n):
                Jg[i, j] += gre * pts[i, k, j]
                Jf[i, j] += fre * pts[i, k, j]
            ge = g[i, k] * e
            fe = f[i, k] * e
            gg[i] += ge.real * ge.real + ge.imag * ge.imag
            ff[i] += fe.real * fe.real + fe.imag * fe.imag
            gf[i] += ge.real * fe.real + ge.imag * fe.imag
    return Fg, Ff, Jg, Jf, gg, ff, gf


@njit(cache=True)
def _solve_inplace(A, B):
    """Gaussian elimination with partial pivoting; False when singular."""
    n = A.shape[0]
    m = B.shape[1]
    for c in range(n):
        p = c
        best = abs(A[c, c])
        for r in range(c + 1, n):
            if abs(A[r, c]) > best:
                best = abs(A[r, c])
                p = r
        if best == 0.0 or not np.isfinite(best):
            return False
        if p != c:
            for j in range(n):
                A[c, j], A[p, j] = A[p, j], A[c, j]
            for j in range(m):
                B[c, j], B[p, j] = B[p, j], B[c, j]
        piv = A[c, c]
        for r in range(c + 1, n):
            fac = A[r, c] / piv
            if fac != 0:
                for j in range(c, n):
                    A[r, j] -= fac * A[c, j]
                for j in range(m):
                    B[r, j] -= fac * B[c, j]
    for c in range(n - 1, -1, -1):
        for j in range(m):
            v = B[c, j]
            for k in range(c + 1, n):
                v -= A[c, k] * B[k, j]
            B[c, j] = v / A[c, c]
    for c in range(n):
        for j in range(m):
            if not np.isfinite(B[c, j].real) or not np.isfinite(B[c, j].imag):
                return False
    return True


@njit(cache=True)
def invariants_at(s, Fg, Ff, Jg, Jf, gg, ff, gf, R, rho_norm, delta, need_mu=True):
    """Beta and mu at parameter ``s``; writes the Newton displacement into ``delta``.

    With ``need_mu=False`` only the Newton displacement and beta are formed.
    """
    n = Fg.shape[0]
    r = 1.0 - s
    A = r * Jg + s * Jf
    B = np.zeros((n, n + 1), np.complex128)
    for i in range(n):
        B[i, 0] = r * Fg[i] + s * Ff[i]
        pn2 = r * r * gg[i] + s * s * ff[i] + 2.0 * r * s * gf[i]
        B[i, i + 1] = rho_norm[i] * np.sqrt(max(pn2, 0.0))
    if not _solve_inplace(A, B):
        for i in range(n):
            delta[i] = np.nan
        return np.inf, np.inf
    beta2 = 0.0
    for i in range(n):
        delta[i] = -B[i, 0]
        v = 0j
        for j in range(i, n):
            v += R[i, j] * B[j, 0]
        beta2 += v.real ** 2 + v.imag ** 2
    if not need_mu:
        return np.sqrt(beta2), np.nan
    W = R.astype(np.complex128) @ B
    Wm = W[:, 1:].copy()
    ev = np.linalg.eigvalsh(Wm.conj().T @ Wm)
    return np.sqrt(beta2), np.sqrt(max(ev[-1], 0.0))


@njit(cache=True)
def search(u_j, u1, h0, probes, growth, tol, alpha_star, nu, Fg, Ff, Jg, Jf, gg, ff, gf, R, rho_norm):
    """Step search on a linear segment.  ``h0 <= 0`` means no previous step.

    Returns ``(u_new, found, delta, beta, mu)`` where the last three hold the
    local data at ``u_new`` when ``found``.
    """
    n = Fg.shape[0]
    tmp = np.empty(n, np.complex128)
    best_delta = np.empty(n, np.complex128)
    best_u = -1.0
    best_beta = np.inf
    best_mu = np.inf
    span = u1 - u_j
    if span <= 0:
        b, m = invariants_at(u1, Fg, Ff, Jg, Jf, gg, ff, gf, R, rho_norm, tmp)
        ok = 0.5 * b * m * nu < alpha_star
        return u1, ok, tmp.copy(), b, m
    h = span if h0 <= 0 else min(h0, span)
    lo = u_j
    hi = u1
    while True:
        first_bad = -1
        last_p = lo
        base = lo
        for k in range(1, probes + 1):
            p = min(base + h * (k / probes), u1)
            b, m = invariants_at(p, Fg, Ff, Jg, Jf, gg, ff, gf, R, rho_norm, tmp)
            if not (0.5 * b * m * nu < alpha_star):
                first_bad = k
                hi = p
                break
            last_p = p
            best_u = p
            best_beta = b
            best_mu = m
            best_delta[:] = tmp
        if first_bad < 0:
            lo = last_p
            if lo >= u1:
                return u1, True, best_delta, best_beta, best_mu
            h *= growth
            continue
        lo = last_p
        break
    while hi - lo > tol * max(lo - u_j, 0.0):
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
        base = lo
        width = hi - lo
        for k in range(1, probes):
            p = base + width * (k / probes)
            b, m = invariants_at(p, Fg, Ff, Jg, Jf, gg, ff, gf, R, rho_norm, tmp)
            if not (0.5 * b * m * nu < alpha_star):
                hi = p
                break
            lo = p
            best_u = p
            best_beta = b
            best_mu = m
            best_delta[:] = tmp
    return lo, best_u == lo, best_delta, best_beta, best_mu


@njit(cache=True)
def length_nodes(us, xs, pts, npts, g, f, rho, R, rho_norm):
    """Polish each node root, then evaluate the condition-length integrands there.

    Mirrors ``tracker._polish`` followed by ``tracker._integrand`` for a
    linear segment, whose coefficient derivative in ``s`` is ``f - g``.
    """
    K = us.shape[0]
    n = xs.shape[1]
    smax = pts.shape[1]
    full = np.zeros(K)
    part = np.zeros(K)
    zsp = np.zeros(K)
    delta = np.empty(n, np.complex128)
    e = np.empty(smax, np.complex128)
    Rc = R.astype(np.complex128)
    for idx in range(K):
        s = us[idx]
        x = xs[idx].copy()
        for _ in range(6):
            Fg, Ff, Jg, Jf, gg, ff, gf = probe_data(x, pts, npts, g, f, rho)
            b, m = invariants_at(s, Fg, Ff, Jg, Jf, gg, ff, gf, R, rho_norm, delta, False)
            if np.isfinite(b):
                x += delta
            if b < POLISH_BETA:
                break
        Fg, Ff, Jg, Jf, gg, ff, gf = probe_data(x, pts, npts, g, f, rho)
        b, m = invariants_at(s, Fg, Ff, Jg, Jf, gg, ff, gf, R, rho_norm, delta)
        A = (1.0 - s) * Jg + s * Jf
        B = np.zeros((n, 1), np.complex128)
        for i in range(n):
            B[i, 0] = -(Ff[i] - Fg[i])
        if not _solve_inplace(A, B):
            full[idx] = np.inf
            part[idx] = np.inf
            zsp[idx] = np.inf
            continue
        zdot = B[:, 0].copy()
        rz = Rc @ zdot
        zs2 = 0.0
        for i in range(n):
            zs2 += rz[i].real ** 2 + rz[i].imag ** 2
        fsum = 0.0
        psum = 0.0
        for i in range(n):
            ell = -np.inf
            for k in range(npts[i]):
                v = 0.0
                for j in range(n):
                    v += x[j].real * pts[i, k, j]
                if v > ell:
                    ell = v
            pn2 = 0.0
            w2 = 0.0
            wq2 = 0.0
            ip = 0j
            ipq = 0j
            for k in range(npts[i]):
                v = 0j
                az = 0j
                for j in range(n):
                    v += x[j] * pts[i, k, j]
                    az += zdot[j] * pts[i, k, j]
                ek = np.exp(v - ell)
                q = (1.0 - s) * g[i, k] + s * f[i, k]
                p = q * ek
                wq = (f[i, k] - g[i, k]) * ek
                w = wq + p * az
                pn2 += p.real ** 2 + p.imag ** 2
                w2 += w.real ** 2 + w.imag ** 2
                wq2 += wq.real ** 2 + wq.imag ** 2
                ip += p.conjugate() * w
                ipq += p.conjugate() * wq
            fsum += (w2 - (ip.real ** 2 + ip.imag ** 2) / pn2) / pn2
            psum += (wq2 - (ipq.real ** 2 + ipq.imag ** 2) / pn2) / pn2
        full[idx] = np.sqrt(max(fsum, 0.0)) * m
        part[idx] = np.sqrt(max(psum, 0.0)) * m
        zsp[idx] = np.sqrt(zs2) * m
    return full, part, zsp


@njit(cache=True)
def advance(x, u, delta, h_prev, u1, chunk, ticks_left, H, tail_factor,
            probes, growth, tol, alpha_star, nu, pts, npts, g, f, rho, R, rho_norm):
    """Run ordinary tracking iterations until anything needs the caller's attention.

    An iteration is committed only when the Newton step fits the budget, stays
    below ``H``, and the step search advances with local data at the new
    parameter.  Returns ``(k, us, xs, betas, mus, delta, h_prev, tail)`` for
    the ``k`` committed iterations; ``tail`` flags that the last one met the
    tail-jump condition (``tail_factor < 0`` disables it).
    """
    n = x.shape[0]
    us = np.empty(chunk)
    xs = np.empty((chunk, n), np.complex128)
    bs = np.empty(chunk)
    ms = np.empty(chunk)
    x = x.copy()
    delta = delta.copy()
    k = 0
    tail = False
    while k < chunk and k + 1 <= ticks_left and u < u1:
        x_next = x + delta
        big = 0.0
        for j in range(n):
            big = max(big, abs(x_next[j].real))
        if big >= H:
            break
        Fg, Ff, Jg, Jf, gg, ff, gf = probe_data(x_next, pts, npts, g, f, rho)
        h0 = -1.0 if h_prev <= 0 else growth * h_prev
        u_new, found, d, b, m = search(u, u1, h0, probes, growth, tol, alpha_star, nu,
                                       Fg, Ff, Jg, Jf, gg, ff, gf, R, rho_norm)
        if u_new - u <= 1e-14 * max(1.0, abs(u)) and u_new < u1:
            break
        if not found:
            break
        h_prev = u_new - u
        u = u_new
        x = x_next
        delta = d
        us[k] = u
        xs[k] = x
        bs[k] = b
        ms[k] = m
        k += 1
        if tail_factor >= 0 and u < u1 and u / (1.0 - u) >= tail_factor * m * m:
            tail = True
            break
    return k, us, xs, bs, ms, delta, h_prev, tail
