"""Hot inner loops for simulation and backward-iteration coding.

Everything here is numba ``@njit`` (see :mod:`cms._accel`); all arguments are
plain scalars and ndarrays, vertices and edges are 0-based indices, and the
id-to-index mapping lives in :mod:`cms.systems`.

Edge draws use one uniform per step and inverse-CDF over the out-edges of the
current vertex in ascending edge-id order: edge k is chosen when the uniform
falls in [cum_{k-1}, cum_k).  Off-part edges carry probability zero, so
restricting the scan to out-edges leaves the draw unchanged.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import njit

__all__ = [
    "planar_simulate",
    "chain_simulate",
    "interval_simulate",
    "planar_code_many",
    "planar_code_trace",
    "interval_code_many",
    "interval_code_trace",
]


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

@njit(cache=True)
def planar_simulate(n, v0, x0, y0, u, out_off, out_edge,
                    ax, bx, absx, ay, by, trig_sin, amp, off, term):
    edges = np.empty(n, np.int64)
    verts = np.empty(n + 1, np.int64)
    xs = np.empty(n + 1, np.float64)
    ys = np.empty(n + 1, np.float64)
    v = v0
    X = x0
    Y = y0
    verts[0] = v
    xs[0] = X
    ys[0] = Y
    for k in range(n):
        s = abs(X) + abs(Y)
        sn = math.sin(s)
        cs = math.cos(s)
        sn2 = sn * sn
        cs2 = cs * cs
        chosen = out_edge[out_off[v + 1] - 1]
        c = 0.0
        for j in range(out_off[v], out_off[v + 1]):
            e = out_edge[j]
            t2 = sn2 if trig_sin[e] == 1 else cs2
            c += amp[e] * t2 + off[e]
            if u[k] < c:
                chosen = e
                break
        xa = abs(X) if absx[chosen] == 1 else X
        X = ax[chosen] * xa + bx[chosen]
        Y = ay[chosen] * Y + by[chosen]
        v = term[chosen]
        edges[k] = chosen
        verts[k + 1] = v
        xs[k + 1] = X
        ys[k + 1] = Y
    return edges, verts, xs, ys


@njit(cache=True)
def chain_simulate(n, v0, u, out_off, out_edge, prob, term):
    edges = np.empty(n, np.int64)
    verts = np.empty(n + 1, np.int64)
    v = v0
    verts[0] = v
    for k in range(n):
        chosen = out_edge[out_off[v + 1] - 1]
        c = 0.0
        for j in range(out_off[v], out_off[v + 1]):
            e = out_edge[j]
            c += prob[e]
            if u[k] < c:
                chosen = e
                break
        v = term[chosen]
        edges[k] = chosen
        verts[k + 1] = v
    return edges, verts


@njit(cache=True)
def interval_simulate(n, x0, u, prob, slope, offset):
    m = prob.shape[0]
    edges = np.empty(n, np.int64)
    xs = np.empty(n + 1, np.float64)
    X = x0
    xs[0] = X
    for k in range(n):
        chosen = m - 1
        c = 0.0
        for e in range(m):
            c += prob[e]
            if u[k] < c:
                chosen = e
                break
        X = slope[chosen] * X + offset[chosen]
        edges[k] = chosen
        xs[k + 1] = X
    return edges, xs


# ---------------------------------------------------------------------------
# backward-iteration coding
#
# A window of length L ending at position `end` (exclusive) is the edge word
# symbols[end-L:end], oldest first.  Its coded point applies the maps oldest
# to newest, starting from the anchor of the oldest edge's initial vertex.
# Window length grows until `patience` consecutive increments d(Y_L, Y_{L-1})
# stay within `tol` (l1 metric), the available past is exhausted, or
# `max_window` is hit.  A single small increment is not trusted: maps sharing
# images (an anchor on a fixed point, the |x| fold gluing +-x) can produce an
# exactly-zero increment while deeper windows still move the point.  On
# convergence the deepest iterate is returned and `used` is the window length
# at which the point had already stabilized (start of the qualifying run).
# ---------------------------------------------------------------------------

@njit(cache=True)
def _planar_window_point(symbols, j0, end, anchor_x, anchor_y, init,
                         ax, bx, absx, ay, by):
    e0 = symbols[j0]
    v = init[e0]
    X = anchor_x[v]
    Y = anchor_y[v]
    for j in range(j0, end):
        e = symbols[j]
        xa = abs(X) if absx[e] == 1 else X
        X = ax[e] * xa + bx[e]
        Y = ay[e] * Y + by[e]
    return X, Y


@njit(cache=True)
def planar_code_one(symbols, end, max_window, tol, patience,
                    anchor_x, anchor_y, init, ax, bx, absx, ay, by):
    max_len = min(end, max_window)
    px = 0.0
    py = 0.0
    last_inc = np.inf
    run = 0
    stable = 0
    for L in range(1, max_len + 1):
        X, Y = _planar_window_point(symbols, end - L, end, anchor_x, anchor_y,
                                    init, ax, bx, absx, ay, by)
        if L > 1:
            inc = abs(X - px) + abs(Y - py)
            last_inc = inc
            if inc <= tol:
                if run == 0:
                    stable = L - 1
                run += 1
                if run >= patience:
                    return X, Y, stable, inc, True
            else:
                run = 0
        px = X
        py = Y
    return px, py, max_len, last_inc, False


@njit(cache=True)
def planar_code_many(symbols, ends, max_window, tol, patience,
                     anchor_x, anchor_y, init, ax, bx, absx, ay, by):
    n = ends.shape[0]
    pts_x = np.empty(n, np.float64)
    pts_y = np.empty(n, np.float64)
    used = np.empty(n, np.int64)
    incs = np.empty(n, np.float64)
    conv = np.zeros(n, np.uint8)
    for i in range(n):
        X, Y, w, inc, ok = planar_code_one(symbols, ends[i], max_window, tol,
                                           patience, anchor_x, anchor_y, init,
                                           ax, bx, absx, ay, by)
        pts_x[i] = X
        pts_y[i] = Y
        used[i] = w
        incs[i] = inc
        if ok:
            conv[i] = 1
    return pts_x, pts_y, used, incs, conv


@njit(cache=True)
def planar_code_trace(symbols, end, max_window, tol, patience,
                      anchor_x, anchor_y, init, ax, bx, absx, ay, by):
    """Increment sequence d(Y_L, Y_{L-1}) for L = 2.. until stop."""
    max_len = min(end, max_window)
    out = np.empty(max(max_len - 1, 0), np.float64)
    px = 0.0
    py = 0.0
    count = 0
    run = 0
    for L in range(1, max_len + 1):
        X, Y = _planar_window_point(symbols, end - L, end, anchor_x, anchor_y,
                                    init, ax, bx, absx, ay, by)
        if L > 1:
            inc = abs(X - px) + abs(Y - py)
            out[count] = inc
            count += 1
            if inc <= tol:
                run += 1
                if run >= patience:
                    break
            else:
                run = 0
        px = X
        py = Y
    return out[:count]


@njit(cache=True)
def interval_code_one(symbols, end, max_window, tol, patience,
                      anchor, slope, offset):
    max_len = min(end, max_window)
    px = 0.0
    last_inc = np.inf
    run = 0
    stable = 0
    for L in range(1, max_len + 1):
        X = anchor
        for j in range(end - L, end):
            e = symbols[j]
            X = slope[e] * X + offset[e]
        if L > 1:
            inc = abs(X - px)
            last_inc = inc
            if inc <= tol:
                if run == 0:
                    stable = L - 1
                run += 1
                if run >= patience:
                    return X, stable, inc, True
            else:
                run = 0
        px = X
    return px, max_len, last_inc, False


@njit(cache=True)
def interval_code_many(symbols, ends, max_window, tol, patience,
                       anchor, slope, offset):
    n = ends.shape[0]
    pts = np.empty(n, np.float64)
    used = np.empty(n, np.int64)
    incs = np.empty(n, np.float64)
    conv = np.zeros(n, np.uint8)
    for i in range(n):
        X, w, inc, ok = interval_code_one(symbols, ends[i], max_window, tol,
                                          patience, anchor, slope, offset)
        pts[i] = X
        used[i] = w
        incs[i] = inc
        if ok:
            conv[i] = 1
    return pts, used, incs, conv


@njit(cache=True)
def interval_code_trace(symbols, end, max_window, tol, patience,
                        anchor, slope, offset):
    max_len = min(end, max_window)
    out = np.empty(max(max_len - 1, 0), np.float64)
    px = 0.0
    count = 0
    run = 0
    for L in range(1, max_len + 1):
        X = anchor
        for j in range(end - L, end):
            e = symbols[j]
            X = slope[e] * X + offset[e]
        if L > 1:
            inc = abs(X - px)
            out[count] = inc
            count += 1
            if inc <= tol:
                run += 1
                if run >= patience:
                    break
            else:
                run = 0
        px = X
    return out[:count]
