"""Compiled inner loops (numba).

All routines operate on data already sorted by the regression index.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def pav_sorted(y):
    n = y.shape[0]
    val = np.empty(n)
    wt = np.empty(n)
    width = np.empty(n, np.int64)
    top = -1
    for i in range(n):
        top += 1
        val[top] = y[i]
        wt[top] = 1.0
        width[top] = 1
        while top > 0 and val[top - 1] > val[top]:
            w = wt[top - 1] + wt[top]
            val[top - 1] = (wt[top - 1] * val[top - 1] + wt[top] * val[top]) / w
            wt[top - 1] = w
            width[top - 1] += width[top]
            top -= 1
    out = np.empty(n)
    k = 0
    for b in range(top + 1):
        for _ in range(width[b]):
            out[k] = val[b]
            k += 1
    return out


@njit(cache=True)
def _norm(v):
    return np.sqrt(np.sum(v * v))


@njit(cache=True)
def lmr_dykstra_sorted(y, s, delta, eps, max_iters):
    # s = cusum of sorted gaps; the upper set is handled as GPAV on the negation.
    g_l = pav_sorted(y)
    g_u = -pav_sorted(-y + s) + s
    v0 = np.zeros_like(y)
    v1 = g_u - y
    w = g_u.copy()
    z = g_u.copy()
    err = np.inf
    k = 0
    converged = False
    while k < max_iters:
        g_l_new = pav_sorted(g_u - v0)
        g_u_new = -pav_sorted(-(g_l_new - v1) + s) + s
        v0 = g_l_new - (g_u - v0)
        v1 = g_u_new - (g_l_new - v1)
        d_old = g_l - g_u
        d_new = g_l_new - g_u_new
        a = np.dot(d_old, d_old)
        den = a + np.dot(d_new, d_old)
        if abs(den) >= eps:
            z = g_u + (a / den) * (g_u_new - g_u)
        else:
            z = 0.5 * (g_l_new + g_u_new)
        err = _norm(z - w)
        w = z
        g_l = g_l_new
        g_u = g_u_new
        k += 1
        if err < delta and _norm(d_new) < delta:
            converged = True
            break
    return z, k, converged, err


@njit(cache=True)
def lmr_dp_sorted(y, t):
    """Exact Lipschitz monotone regression by dynamic programming.

    The derivative of the running cost-to-come is a continuous piecewise-linear
    nondecreasing function, stored as slope-change breakpoints in two stacks
    split at the current minimiser. ``t[j]`` is the gap between sorted points
    ``j - 1`` and ``j``; ``t[0]`` is unused.
    """
    n = y.shape[0]
    cap = 2 * n + 4
    left_pos = np.empty(cap)
    left_d = np.empty(cap)
    nl = 0
    right_pos = np.empty(cap)  # stored relative to right_off
    right_d = np.empty(cap)
    nr = 0
    right_off = 0.0
    mins = np.empty(n)
    m = y[0]
    sig = 1.0
    mins[0] = m
    for j in range(1, n):
        tj = t[j]
        yj = y[j]
        right_off += tj
        right_pos[nr] = m + tj - right_off
        right_d[nr] = sig
        nr += 1
        v = m - yj
        if v < 0.0:
            left_pos[nl] = m
            left_d[nl] = -sig
            nl += 1
            p = m
            cs = 1.0
            while True:
                if nr == 0:
                    m = p - v / cs
                    break
                b = right_pos[nr - 1] + right_off
                if v + cs * (b - p) >= 0.0:
                    m = p - v / cs
                    break
                v += cs * (b - p)
                p = b
                cs += right_d[nr - 1]
                left_pos[nl] = b
                left_d[nl] = right_d[nr - 1]
                nl += 1
                nr -= 1
        elif v > 0.0:
            right_pos[nr] = m - right_off
            right_d[nr] = -sig
            nr += 1
            p = m
            cs = sig + 1.0
            while True:
                if nl == 0:
                    m = p - v / cs
                    break
                b = left_pos[nl - 1]
                if v - cs * (p - b) <= 0.0:
                    m = p - v / cs
                    break
                v -= cs * (p - b)
                p = b
                cs -= left_d[nl - 1]
                right_pos[nr] = b - right_off
                right_d[nr] = left_d[nl - 1]
                nr += 1
                nl -= 1
        else:
            left_pos[nl] = m
            left_d[nl] = -sig
            nl += 1
            cs = 1.0
        sig = cs
        mins[j] = m
    g = np.empty(n)
    g[n - 1] = mins[n - 1]
    for j in range(n - 2, -1, -1):
        hi = g[j + 1]
        lo = hi - t[j + 1]
        mj = mins[j]
        if mj < lo:
            g[j] = lo
        elif mj > hi:
            g[j] = hi
        else:
            g[j] = mj
    return g


@njit(cache=True)
def lower_hull(knots, G):
    """Indices of the lower convex hull of sorted points (knots, G)."""
    q = knots.shape[0]
    hull = np.empty(q, np.int64)
    h = 0
    for i in range(q):
        if h > 0 and knots[hull[h - 1]] == knots[i]:
            if G[i] < G[hull[h - 1]]:
                h -= 1
            else:
                continue
        while h >= 2:
            a = hull[h - 2]
            b = hull[h - 1]
            cross = (knots[b] - knots[a]) * (G[i] - G[a]) - (G[b] - G[a]) * (knots[i] - knots[a])
            if cross <= 0.0:
                h -= 1
            else:
                break
        hull[h] = i
        h += 1
    return hull[:h]


@njit(cache=True)
def dlt_sorted_queries(knots, G, hull, ys):
    """Conjugate values at ascending queries by a monotone argmax pointer."""
    out = np.empty(ys.shape[0])
    h = hull.shape[0]
    ptr = 0
    for j in range(ys.shape[0]):
        y = ys[j]
        while ptr + 1 < h:
            a = hull[ptr]
            b = hull[ptr + 1]
            if knots[b] * y - G[b] >= knots[a] * y - G[a]:
                ptr += 1
            else:
                break
        i = hull[ptr]
        out[j] = knots[i] * y - G[i]
    return out
