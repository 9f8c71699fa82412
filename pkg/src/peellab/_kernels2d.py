"""Numba kernels for planar peeling.

All kernels take coordinates already sorted lexicographically (x, then y)
and work on positions in that order. Orientation uses Shewchuk's float
filter; inconclusive cases drop to exact rational arithmetic through
``numba.objmode``.
"""
import numpy as np

from ._accel import USE_NUMBA, njit, numba
from ._predicates import CCW_ERRBOUND, orient2d_exact

if USE_NUMBA:
    @njit
    def _exact(ax, ay, bx, by, cx, cy):
        with numba.objmode(s="int64"):
            s = orient2d_exact(ax, ay, bx, by, cx, cy)
        return s
else:  # pragma: no cover - plain-python execution of the kernels
    _exact = orient2d_exact


@njit
def orient_xy(ax, ay, bx, by, cx, cy):
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    if abs(det) > CCW_ERRBOUND * (abs(detleft) + abs(detright)):
        return 1 if det > 0 else -1
    return _exact(ax, ay, bx, by, cx, cy)


@njit
def orient(x, y, a, b, c):
    return orient_xy(x[a], y[a], x[b], y[b], x[c], y[c])


@njit
def _lower_chain(x, y, alive, m, out):
    k = 0
    for t in range(m):
        i = alive[t]
        while k >= 2 and orient(x, y, alive[out[k - 2]], alive[out[k - 1]], i) <= 0:
            k -= 1
        out[k] = t
        k += 1
    return k


@njit
def _upper_chain(x, y, alive, m, out):
    k = 0
    for t in range(m - 1, -1, -1):
        i = alive[t]
        while k >= 2 and orient(x, y, alive[out[k - 2]], alive[out[k - 1]], i) <= 0:
            k -= 1
        out[k] = t
        k += 1
    return k


@njit
def _mark_edges(x, y, alive, chain, k, mark, ascending):
    # points strictly between consecutive chain positions that lie on the edge
    for e in range(k - 1):
        p, q = chain[e], chain[e + 1]
        a, b = alive[p], alive[q]
        lo, hi = (p, q) if ascending else (q, p)
        for t in range(lo + 1, hi):
            if not mark[t] and orient(x, y, a, b, alive[t]) == 0:
                mark[t] = True


@njit
def _layer(x, y, alive, m, lower, upper, mark):
    """Mark the boundary points of conv(alive[:m]).

    Returns (kind, kl, ku): kind 0 = all points coincide, 1 = collinear,
    2 = proper polygon with chains lower[:kl], upper[:ku].
    """
    for t in range(m):
        mark[t] = False
    first, last = alive[0], alive[m - 1]
    if x[first] == x[last] and y[first] == y[last]:
        for t in range(m):
            mark[t] = True
        return 0, 0, 0
    kl = _lower_chain(x, y, alive, m, lower)
    ku = _upper_chain(x, y, alive, m, upper)
    if kl + ku - 2 <= 2:
        # collinear remainder: relative boundary = the two endpoints
        for t in range(m):
            i = alive[t]
            if (x[i] == x[first] and y[i] == y[first]) or (x[i] == x[last] and y[i] == y[last]):
                mark[t] = True
        return 1, kl, ku
    for e in range(kl):
        mark[lower[e]] = True
    for e in range(ku):
        mark[upper[e]] = True
    _mark_edges(x, y, alive, lower, kl, mark, True)
    _mark_edges(x, y, alive, upper, ku, mark, False)
    return 2, kl, ku


@njit
def _emit(verts, nv, alive, m, kind, lower, kl, upper, ku):
    if kind == 0:
        verts[nv] = alive[0]
        return nv + 1
    if kind == 1:
        verts[nv] = alive[0]
        verts[nv + 1] = alive[m - 1]
        return nv + 2
    for e in range(kl - 1):
        verts[nv] = alive[lower[e]]
        nv += 1
    for e in range(ku - 1):
        verts[nv] = alive[upper[e]]
        nv += 1
    return nv


@njit
def _compact(alive, m, mark, labels, layer):
    w = 0
    for t in range(m):
        i = alive[t]
        if mark[t]:
            labels[i] = layer
        else:
            alive[w] = i
            w += 1
    return w


@njit
def _polygon(x, y, alive, lower, kl, upper, ku):
    h = kl + ku - 2
    px = np.empty(h)
    py = np.empty(h)
    j = 0
    for e in range(kl - 1):
        px[j] = x[alive[lower[e]]]
        py[j] = y[alive[lower[e]]]
        j += 1
    for e in range(ku - 1):
        px[j] = x[alive[upper[e]]]
        py[j] = y[alive[upper[e]]]
        j += 1
    return px, py


@njit
def _strictly_inside(px, py, qx, qy):
    """All points q strictly inside the ccw polygon p (exact signs)."""
    h = px.shape[0]
    for j in range(qx.shape[0]):
        for e in range(h):
            f = (e + 1) % h
            if orient_xy(px[e], py[e], px[f], py[f], qx[j], qy[j]) <= 0:
                return False
    return True


BATCH_MIN = 4096


@njit
def _gauge(x, y, alive, m, px, py, g):
    """Polygon gauge of each alive point w.r.t. the vertex centroid of p."""
    h = px.shape[0]
    cx = 0.0
    cy = 0.0
    for e in range(h):
        cx += px[e]
        cy += py[e]
    cx /= h
    cy /= h
    ang = np.empty(h)
    nx = np.empty(h)
    ny = np.empty(h)
    den = np.empty(h)
    two_pi = 2.0 * np.pi
    a0 = np.arctan2(py[0] - cy, px[0] - cx)
    for e in range(h):
        f = (e + 1) % h
        a = np.arctan2(py[e] - cy, px[e] - cx)
        ang[e] = a0 + ((a - a0) % two_pi)
        nx[e] = py[f] - py[e]
        ny[e] = -(px[f] - px[e])
        den[e] = (px[e] - cx) * nx[e] + (py[e] - cy) * ny[e]
    for t in range(m):
        i = alive[t]
        dx = x[i] - cx
        dy = y[i] - cy
        th = a0 + ((np.arctan2(dy, dx) - a0) % two_pi)
        k = np.searchsorted(ang, th, side="right") - 1
        if k < 0:
            k = 0
        # neighbouring edges guard against angle rounding
        best = -1e300
        for kk in (k - 1, k, k + 1):
            kk = kk % h
            v = (dx * nx[kk] + dy * ny[kk]) / den[kk]
            if v > best:
                best = v
        g[t] = best
    return cx, cy


@njit
def peel_sorted(x, y, max_layers):
    """Convex peeling of sorted points.

    Returns (labels, vptr, verts, nlayers): verts[vptr[l]:vptr[l+1]] are the
    hull vertices of layer l+1 in counter-clockwise order (sorted positions).

    Large remainders are processed in batches: after a full layer, points
    strictly inside a shrunken copy Q of that layer's hull are set aside and
    the outer annulus is peeled alone for as long as Q stays strictly inside
    the annulus layers (checked exactly). Set-aside points are then interior
    to every committed layer, so the labels equal those of plain peeling.
    """
    n = x.shape[0]
    labels = np.zeros(n, np.int64)
    alive = np.arange(n)
    m = n
    lower = np.empty(n + 1, np.int64)
    upper = np.empty(n + 1, np.int64)
    mark = np.zeros(n, np.bool_)
    verts = np.empty(2 * n + 2, np.int64)
    vptr = np.zeros(n + 1, np.int64)
    g = np.empty(n)
    sout = np.empty(n, np.int64)
    rin = np.empty(n, np.int64)
    nv = 0
    layer = 0
    while m > 0 and (max_layers <= 0 or layer < max_layers):
        layer += 1
        kind, kl, ku = _layer(x, y, alive, m, lower, upper, mark)
        nv = _emit(verts, nv, alive, m, kind, lower, kl, upper, ku)
        vptr[layer] = nv
        if kind == 2 and m > BATCH_MIN and (max_layers <= 0 or layer < max_layers):
            px, py = _polygon(x, y, alive, lower, kl, upper, ku)
            m = _compact(alive, m, mark, labels, layer)
            if m <= BATCH_MIN:
                continue
            cx, cy = _gauge(x, y, alive, m, px, py, g)
            A = max(BATCH_MIN, m // 16)
            tau = np.partition(g[:m].copy(), m - A)[m - A]
            if not (tau > 0.0):
                continue
            qx = cx + tau * (px - cx)
            qy = cy + tau * (py - cy)
            lim = tau * (1.0 - 1e-9)
            ms = 0
            mr = 0
            for t in range(m):
                if g[t] >= lim:
                    sout[ms] = alive[t]
                    ms += 1
                else:
                    rin[mr] = alive[t]
                    mr += 1
            while ms > 0 and (max_layers <= 0 or layer < max_layers):
                kind, kl, ku = _layer(x, y, sout, ms, lower, upper, mark)
                if kind != 2:
                    break
                hx, hy = _polygon(x, y, sout, lower, kl, upper, ku)
                if not _strictly_inside(hx, hy, qx, qy):
                    break
                layer += 1
                nv = _emit(verts, nv, sout, ms, kind, lower, kl, upper, ku)
                vptr[layer] = nv
                ms = _compact(sout, ms, mark, labels, layer)
            # merge the two ascending position lists back into alive
            i = 0
            j = 0
            w = 0
            while i < ms or j < mr:
                if j >= mr or (i < ms and sout[i] < rin[j]):
                    alive[w] = sout[i]
                    i += 1
                else:
                    alive[w] = rin[j]
                    j += 1
                w += 1
            m = w
        else:
            m = _compact(alive, m, mark, labels, layer)
    return labels, vptr[: layer + 1].copy(), verts[:nv].copy(), layer


@njit
def cone_peel_sorted(x, y, max_layers):
    """Peeling by lower-left staircases (minimisers of positive functionals).

    A point belongs to the current layer iff it lies on the lower hull chain
    between the leftmost point and the first lowest point; points on the
    horizontal or vertical extremes beyond those are kept for later layers.
    Returns (labels, vptr, verts, nlayers) with chain vertices ordered from
    the leftmost point to the lowest one.
    """
    n = x.shape[0]
    labels = np.zeros(n, np.int64)
    alive = np.arange(n)
    m = n
    lower = np.empty(n + 1, np.int64)
    mark = np.zeros(n, np.bool_)
    verts = np.empty(n, np.int64)
    vptr = np.zeros(n + 1, np.int64)
    nv = 0
    layer = 0
    while m > 0 and (max_layers <= 0 or layer < max_layers):
        layer += 1
        for t in range(m):
            mark[t] = False
        kl = _lower_chain(x, y, alive, m, lower)
        q = 0
        for e in range(1, kl):
            if y[alive[lower[e]]] < y[alive[lower[q]]]:
                q = e
        for e in range(q + 1):
            mark[lower[e]] = True
            verts[nv] = alive[lower[e]]
            nv += 1
        _mark_edges(x, y, alive, lower, q + 1, mark, True)
        # coincident copies of the chain ends
        for e in (0, q):
            i = alive[lower[e]]
            for t in range(m):
                j = alive[t]
                if x[j] == x[i] and y[j] == y[i]:
                    mark[t] = True
        vptr[layer] = nv
        w = 0
        for t in range(m):
            i = alive[t]
            if mark[t]:
                labels[i] = layer
            else:
                alive[w] = i
                w += 1
        m = w
    return labels, vptr[: layer + 1].copy(), verts[:nv].copy(), layer


@njit
def hull_vertex_count(x, y):
    """Number of strict hull vertices of an unsorted small point set."""
    n = x.shape[0]
    if n < 3:
        return n
    order = np.argsort(x, kind="mergesort")
    # stable tie-break on y
    xs = x[order]
    ys = y[order]
    for i in range(1, n):
        j = i
        while j > 0 and xs[j - 1] == xs[j] and ys[j - 1] > ys[j]:
            xs[j - 1], xs[j] = xs[j], xs[j - 1]
            ys[j - 1], ys[j] = ys[j], ys[j - 1]
            j -= 1
    alive = np.arange(n)
    lower = np.empty(n + 1, np.int64)
    upper = np.empty(n + 1, np.int64)
    kl = _lower_chain(xs, ys, alive, n, lower)
    ku = _upper_chain(xs, ys, alive, n, upper)
    return kl + ku - 2


@njit
def convex_position_batch(pts):
    """pts: (reps, n, 2). True where all n points are hull vertices."""
    reps = pts.shape[0]
    n = pts.shape[1]
    out = np.zeros(reps, np.bool_)
    for r in range(reps):
        out[r] = hull_vertex_count(pts[r, :, 0].copy(), pts[r, :, 1].copy()) == n
    return out
