"""Vectorised numpy versions of the planar peeling kernels.

Same contracts as ``_kernels2d`` (sorted input, identical outputs); used when
numba is disabled. Hull chains come from a vectorised quickhull recursion
followed by an exact monotone-chain cleanup over the (short) candidate chain.
"""
import numpy as np

from ._predicates import orient2d, orient2d_vec


def _below_chain(x, y, a, b, cand):
    """Positions (into x, y) of lower-hull vertices strictly between a and b.

    cand holds positions with x strictly between x[a] and x[b]. The result is
    a superset of the true chain vertices, ordered by x.
    """
    if cand.size == 0:
        return []
    s = orient2d_vec(x[a], y[a], x[b], y[b], x[cand], y[cand])
    below = cand[s < 0]
    if below.size == 0:
        return []
    dist = (x[b] - x[a]) * (y[below] - y[a]) - (y[b] - y[a]) * (x[below] - x[a])
    f = int(below[np.argmin(dist)])
    left = below[x[below] < x[f]]
    right = below[x[below] > x[f]]
    return _below_chain(x, y, a, f, left) + [f] + _below_chain(x, y, f, b, right)


def _clean(x, y, chain):
    out = []
    for i in chain:
        while len(out) >= 2 and orient2d(x[out[-2]], y[out[-2]], x[out[-1]], y[out[-1]], x[i], y[i]) <= 0:
            out.pop()
        out.append(i)
    return out


def _lower(x, y, alive):
    """Lower chain over alive positions (sorted), from leftmost-lowest to rightmost-highest."""
    xa, ya = x[alive], y[alive]
    xmin, xmax = xa[0], xa[-1]
    left = alive[xa == xmin]
    right = alive[xa == xmax]
    a, b = int(left[0]), int(right[-1])
    b_low = int(right[0])
    mid = alive[(xa > xmin) & (xa < xmax)]
    if xmin == xmax:
        return [a, b] if a != b else [a]
    chain = [a] + _below_chain(x, y, a, b_low, mid) + [b_low]
    if b != b_low:
        chain.append(b)
    return _clean(x, y, chain)


def _upper(x, y, alive):
    """Upper chain from rightmost-highest back to leftmost-lowest."""
    ny = -y
    xa = x[alive]
    xmin, xmax = xa[0], xa[-1]
    left = alive[xa == xmin]
    right = alive[xa == xmax]
    a_top, a = int(left[-1]), int(left[0])
    b = int(right[-1])
    mid = alive[(xa > xmin) & (xa < xmax)]
    inner = _below_chain(x, ny, a_top, b, mid)
    chain = [b] + inner[::-1] + [a_top]
    if a_top != a:
        chain.append(a)
    out = []
    for i in chain:
        while len(out) >= 2 and orient2d(x[out[-2]], y[out[-2]], x[out[-1]], y[out[-1]], x[i], y[i]) <= 0:
            out.pop()
        out.append(i)
    return out


def _on_chain_edges(x, y, chain, pts):
    """Mask of pts (positions) lying exactly on an edge of the x-monotone chain."""
    cx = x[chain]
    mark = np.zeros(pts.size, dtype=bool)
    if len(chain) < 2 or pts.size == 0:
        return mark
    lo, hi = min(cx[0], cx[-1]), max(cx[0], cx[-1])
    inside = (x[pts] >= lo) & (x[pts] <= hi)
    asc = cx[-1] >= cx[0]
    keys = cx if asc else cx[::-1]
    ch = np.asarray(chain if asc else chain[::-1])
    e = np.searchsorted(keys, x[pts], side="left")
    # a point at an abscissa shared by a vertical edge is handled by callers
    for k in np.nonzero(inside)[0]:
        j = e[k]
        cands = [j - 1, j] if 0 < j < len(ch) else ([j] if j < len(ch) - 1 else [j - 1])
        for c in cands:
            if 0 <= c < len(ch) - 1:
                a, b = ch[c], ch[c + 1]
                p = pts[k]
                if orient2d(x[a], y[a], x[b], y[b], x[p], y[p]) == 0 and \
                        min(x[a], x[b]) <= x[p] <= max(x[a], x[b]) and \
                        min(y[a], y[b]) <= y[p] <= max(y[a], y[b]):
                    mark[k] = True
                    break
    return mark


def _near_chain(x, y, chain, pts):
    """Cheap float prefilter: pts that may lie on the chain (within 1e-9 rel)."""
    if pts.size == 0 or len(chain) < 2:
        return np.zeros(pts.size, dtype=bool)
    ch = np.asarray(chain)
    if x[ch[-1]] < x[ch[0]]:
        ch = ch[::-1]
    cx, cy = x[ch], y[ch]
    ok = np.zeros(pts.size, dtype=bool)
    px, py = x[pts], y[pts]
    j = np.clip(np.searchsorted(cx, px) - 1, 0, len(cx) - 2)
    for off in (-1, 0, 1):
        jj = np.clip(j + off, 0, len(cx) - 2)
        x0, y0, x1, y1 = cx[jj], cy[jj], cx[jj + 1], cy[jj + 1]
        det = (x1 - x0) * (py - y0) - (y1 - y0) * (px - x0)
        scale = (np.abs(x1 - x0) + np.abs(y1 - y0)) * (np.abs(px - x0) + np.abs(py - y0)) + 1e-300
        ok |= np.abs(det) <= 1e-9 * scale
    return ok


def peel_sorted(x, y, max_layers):
    n = x.shape[0]
    labels = np.zeros(n, np.int64)
    alive = np.arange(n)
    verts = []
    vptr = [0]
    layer = 0
    while alive.size and (max_layers <= 0 or layer < max_layers):
        layer += 1
        first, last = alive[0], alive[-1]
        same_first = (x[alive] == x[first]) & (y[alive] == y[first])
        same_last = (x[alive] == x[last]) & (y[alive] == y[last])
        if x[first] == x[last] and y[first] == y[last]:
            mark = np.ones(alive.size, dtype=bool)
            verts.append(first)
        else:
            lo = _lower(x, y, alive)
            up = _upper(x, y, alive)
            if len(lo) + len(up) - 2 <= 2:
                mark = same_first | same_last
                verts.extend([first, last])
            else:
                xa = x[alive]
                mark = np.isin(alive, lo) | np.isin(alive, up)
                # vertical extreme edges: every point on them is on the boundary
                mark |= (xa == xa[0]) | (xa == xa[-1])
                rest = np.nonzero(~mark)[0]
                near = _near_chain(x, y, lo, alive[rest]) | _near_chain(x, y, up, alive[rest])
                sel = rest[near]
                if sel.size:
                    on = _on_chain_edges(x, y, lo, alive[sel]) | _on_chain_edges(x, y, up, alive[sel])
                    mark[sel[on]] = True
                verts.extend(lo[:-1])
                verts.extend(up[:-1])
        labels[alive[mark]] = layer
        vptr.append(len(verts))
        alive = alive[~mark]
    return labels, np.asarray(vptr, np.int64), np.asarray(verts, np.int64), layer


def cone_peel_sorted(x, y, max_layers):
    n = x.shape[0]
    labels = np.zeros(n, np.int64)
    alive = np.arange(n)
    verts = []
    vptr = [0]
    layer = 0
    while alive.size and (max_layers <= 0 or layer < max_layers):
        layer += 1
        a = int(alive[0])
        ya = y[alive]
        ymin = ya.min()
        low = alive[ya == ymin]
        L = int(low[np.argmin(x[low])])
        if L == a or (x[L] == x[a] and y[L] == y[a]):
            chain = [a]
        else:
            mid = alive[(x[alive] > x[a]) & (x[alive] < x[L])]
            chain = _clean(x, y, [a] + _below_chain(x, y, a, L, mid) + [L])
        mark = np.isin(alive, chain)
        for e in (chain[0], chain[-1]):
            mark |= (x[alive] == x[e]) & (y[alive] == y[e])
        if len(chain) > 1:
            rest = np.nonzero(~mark)[0]
            inrange = rest[(x[alive[rest]] >= x[a]) & (x[alive[rest]] <= x[L])]
            near = _near_chain(x, y, chain, alive[inrange])
            sel = inrange[near]
            if sel.size:
                mark[sel[_on_chain_edges(x, y, chain, alive[sel])]] = True
        verts.extend(chain)
        vptr.append(len(verts))
        labels[alive[mark]] = layer
        alive = alive[~mark]
    return labels, np.asarray(vptr, np.int64), np.asarray(verts, np.int64), layer


def convex_position_batch(pts):
    reps, n = pts.shape[0], pts.shape[1]
    out = np.zeros(reps, dtype=bool)
    for r in range(reps):
        p = pts[r]
        o = np.lexsort((p[:, 1], p[:, 0]))
        x, y = p[o, 0].copy(), p[o, 1].copy()
        alive = np.arange(n)
        h = len(_lower(x, y, alive)) + len(_upper(x, y, alive)) - 2
        out[r] = h == n
    return out
