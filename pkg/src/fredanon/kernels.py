"""Hot numeric kernels, each with a numba path and a pure-numpy path.

``mdav_labels`` and ``clipped_centroid`` dispatch on ``USE_NUMBA``; both
implementations stay importable (``*_numba`` / ``*_numpy``) so tests and the
benchmark can compare them directly.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "mdav_labels",
    "mdav_labels_numba",
    "mdav_labels_numpy",
    "clipped_centroid",
    "clipped_centroid_numba",
    "clipped_centroid_numpy",
]


# --------------------------------------------------------------------------
# MDAV
# --------------------------------------------------------------------------

@njit
def _nb_centroid(X, alive):
    m, c = X.shape
    out = np.zeros(c)
    n = 0
    for i in range(m):
        if alive[i]:
            n += 1
            for j in range(c):
                out[j] += X[i, j]
    for j in range(c):
        out[j] /= n
    return out


@njit
def _nb_sqdist(X, i, p):
    s = 0.0
    for j in range(X.shape[1]):
        diff = X[i, j] - p[j]
        s += diff * diff
    return s


@njit
def _nb_farthest(X, alive, p):
    best = -1
    best_d = -1.0
    for i in range(X.shape[0]):
        if alive[i]:
            d = _nb_sqdist(X, i, p)
            if d > best_d:
                best_d = d
                best = i
    return best


@njit
def _nb_take_class(X, alive, labels, seed, k, cls):
    # seed plus its k-1 nearest alive records; ties -> lower row index
    labels[seed] = cls
    alive[seed] = False
    if k == 1:
        return
    p = X[seed].copy()
    n_alive = 0
    for i in range(X.shape[0]):
        if alive[i]:
            n_alive += 1
    idx = np.empty(n_alive, dtype=np.int64)
    dist = np.empty(n_alive)
    t = 0
    for i in range(X.shape[0]):
        if alive[i]:
            idx[t] = i
            dist[t] = _nb_sqdist(X, i, p)
            t += 1
    order = np.argsort(dist, kind="mergesort")
    for t in range(k - 1):
        i = idx[order[t]]
        labels[i] = cls
        alive[i] = False


@njit
def mdav_labels_numba(X, k):
    m = X.shape[0]
    labels = np.full(m, -1, dtype=np.int64)
    alive = np.ones(m, dtype=np.bool_)
    remaining = m
    cls = 0
    while remaining >= 3 * k:
        r = _nb_farthest(X, alive, _nb_centroid(X, alive))
        xr = X[r].copy()
        _nb_take_class(X, alive, labels, r, k, cls)
        cls += 1
        s = _nb_farthest(X, alive, xr)
        _nb_take_class(X, alive, labels, s, k, cls)
        cls += 1
        remaining -= 2 * k
    if remaining >= 2 * k:
        r = _nb_farthest(X, alive, _nb_centroid(X, alive))
        _nb_take_class(X, alive, labels, r, k, cls)
        cls += 1
        remaining -= k
    if remaining > 0:
        for i in range(m):
            if alive[i]:
                labels[i] = cls
                alive[i] = False
    return labels


def mdav_labels_numpy(X, k):
    X = np.ascontiguousarray(X, dtype=np.float64)
    m = X.shape[0]
    labels = np.full(m, -1, dtype=np.int64)
    rest = np.arange(m)  # kept sorted ascending so argmax/stable sort break ties low
    cls = 0

    def farthest(p):
        d = ((X[rest] - p) ** 2).sum(axis=1)
        return rest[np.argmax(d)]

    def take(seed):
        nonlocal rest, cls
        others = rest[rest != seed]
        d = ((X[others] - X[seed]) ** 2).sum(axis=1)
        members = others[np.argsort(d, kind="stable")[: k - 1]]
        labels[seed] = cls
        labels[members] = cls
        keep = np.ones(m, dtype=bool)
        keep[members] = False
        keep[seed] = False
        rest = rest[keep[rest]]
        cls += 1

    while rest.size >= 3 * k:
        r = farthest(X[rest].mean(axis=0))
        xr = X[r].copy()
        take(r)
        take(farthest(xr))
    if rest.size >= 2 * k:
        take(farthest(X[rest].mean(axis=0)))
    if rest.size:
        labels[rest] = cls
    return labels


def mdav_labels(X, k):
    """Class label per row, classes numbered in formation order."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    if USE_NUMBA:
        return mdav_labels_numba(X, int(k))
    return mdav_labels_numpy(X, int(k))


# --------------------------------------------------------------------------
# Centroid of max-aggregated, min-clipped trapezoids
# --------------------------------------------------------------------------
#
# Each consequent set is a trapezoid (a, b, c, d) clipped at height w. Between
# consecutive knots every clipped set is linear, so the aggregate is the upper
# envelope of lines there; adding pairwise crossings makes the envelope linear
# on each sub-segment and the integrals exact.

@njit
def _nb_piece(a, b, c, d, w, x, xm):
    # value at x of the linear piece of clip(trap(a,b,c,d), w) containing xm
    if xm <= a or xm >= d:
        return 0.0
    if b > a and xm < a + w * (b - a):
        return (x - a) / (b - a)
    if d > c and xm > d - w * (d - c):
        return (d - x) / (d - c)
    return w


@njit
def clipped_centroid_numba(params, w):
    R = params.shape[0]
    knots = np.empty(4 * R)
    for r in range(R):
        a, b, c, d = params[r, 0], params[r, 1], params[r, 2], params[r, 3]
        knots[4 * r] = a
        knots[4 * r + 1] = a + w[r] * (b - a)
        knots[4 * r + 2] = d - w[r] * (d - c)
        knots[4 * r + 3] = d
    knots = np.sort(knots)
    f0 = np.empty(R)
    f1 = np.empty(R)
    cuts = np.empty(R * (R - 1) // 2 + 2)
    area = 0.0
    moment = 0.0
    for s in range(knots.shape[0] - 1):
        x0 = knots[s]
        x1 = knots[s + 1]
        if x1 <= x0:
            continue
        xm = 0.5 * (x0 + x1)
        for r in range(R):
            a, b, c, d = params[r, 0], params[r, 1], params[r, 2], params[r, 3]
            f0[r] = _nb_piece(a, b, c, d, w[r], x0, xm)
            f1[r] = _nb_piece(a, b, c, d, w[r], x1, xm)
        n = 0
        cuts[n] = x0
        n += 1
        for i in range(R):
            for j in range(i + 1, R):
                g0 = f0[i] - f0[j]
                g1 = f1[i] - f1[j]
                if g0 * g1 < 0.0:
                    cuts[n] = x0 + (x1 - x0) * g0 / (g0 - g1)
                    n += 1
        cuts[n] = x1
        n += 1
        pts = np.sort(cuts[:n])
        span = x1 - x0
        for t in range(n - 1):
            u0 = pts[t]
            u1 = pts[t + 1]
            if u1 <= u0:
                continue
            h0 = 0.0
            h1 = 0.0
            for r in range(R):
                v0 = f0[r] + (f1[r] - f0[r]) * (u0 - x0) / span
                v1 = f0[r] + (f1[r] - f0[r]) * (u1 - x0) / span
                if v0 > h0:
                    h0 = v0
                if v1 > h1:
                    h1 = v1
            du = u1 - u0
            area += 0.5 * (h0 + h1) * du
            moment += du * (u0 * (2.0 * h0 + h1) + u1 * (h0 + 2.0 * h1)) / 6.0
    if area <= 0.0:
        return np.nan
    return moment / area


def _np_pieces(P, w, x, xm):
    # P: (R, 4), w: (R,), x/xm: (S,) -> (R, S)
    a, b, c, d = (P[:, j : j + 1] for j in range(4))
    w = w[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        rise = (x - a) / (b - a)
        fall = (d - x) / (d - c)
    out = np.broadcast_to(w, rise.shape).copy()
    in_fall = (d > c) & (xm > d - w * (d - c))
    in_rise = (b > a) & (xm < a + w * (b - a))
    out = np.where(in_fall, fall, out)
    out = np.where(in_rise, rise, out)
    out = np.where((xm <= a) | (xm >= d), 0.0, out)
    return out


def clipped_centroid_numpy(params, w):
    P = np.asarray(params, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    a, b, c, d = P.T
    knots = np.unique(np.concatenate([a, a + w * (b - a), d - w * (d - c), d]))
    x0, x1 = knots[:-1], knots[1:]
    xm = 0.5 * (x0 + x1)
    f0 = _np_pieces(P, w, x0, xm)
    f1 = _np_pieces(P, w, x1, xm)
    g0 = f0[:, None, :] - f0[None, :, :]
    g1 = f1[:, None, :] - f1[None, :, :]
    hit = g0 * g1 < 0
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = x0 + (x1 - x0) * g0 / (g0 - g1)
    pts = np.unique(np.concatenate([knots, xc[hit]]))
    u0, u1 = pts[:-1], pts[1:]
    um = 0.5 * (u0 + u1)
    h0 = _np_pieces(P, w, u0, um).max(axis=0, initial=0.0)
    h1 = _np_pieces(P, w, u1, um).max(axis=0, initial=0.0)
    du = u1 - u0
    area = float(np.sum(0.5 * (h0 + h1) * du))
    if area <= 0.0:
        return np.nan
    moment = float(np.sum(du * (u0 * (2 * h0 + h1) + u1 * (h0 + 2 * h1)) / 6.0))
    return moment / area


def clipped_centroid(params, w):
    """Centroid of ``max_r min(w_r, trap_r(y))``; NaN when the area is zero.

    ``params`` is an (R, 4) array of trapezoid corners, triangles passed as
    (a, b, b, c). Only strictly positive ``w`` contribute.
    """
    P = np.ascontiguousarray(params, dtype=np.float64).reshape(-1, 4)
    w = np.ascontiguousarray(w, dtype=np.float64).reshape(-1)
    keep = w > 0
    if not keep.any():
        return float("nan")
    P, w = np.ascontiguousarray(P[keep]), np.ascontiguousarray(w[keep])
    if USE_NUMBA:
        return float(clipped_centroid_numba(P, w))
    return clipped_centroid_numpy(P, w)
