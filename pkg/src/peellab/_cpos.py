"""Sequential importance sampling of planar convex-position configurations.

Given k points in convex position (a ccw polygon P), the positions of a
new point that keep all k+1 points in convex position form disjoint
regions R_j: beyond edge j and behind the lines of its two neighbours.
Drawing the new point uniformly from their union (clipped to the body) and
multiplying the weight by area(union) / area(body) gives weights whose mean
is exactly the convex-position probability.

Plain weights degenerate for n beyond ~20, so ``smc_log_z`` runs the same
moves as a particle system: since the incremental weight only depends on the
current polygon, particles are reweighted and resampled before each move
(systematic resampling), and the running product of mean incremental
weights is an unbiased estimate of p(n).
"""
import numpy as np

from ._accel import njit


@njit
def _clip(px, py, m, ax, ay, bx, by, qx, qy):
    """Clip polygon (px, py)[:m] to the closed left side of a->b; result in q, returns size."""
    k = 0
    for i in range(m):
        j = (i + 1) % m
        si = (bx - ax) * (py[i] - ay) - (by - ay) * (px[i] - ax)
        sj = (bx - ax) * (py[j] - ay) - (by - ay) * (px[j] - ax)
        if si >= 0:
            qx[k] = px[i]
            qy[k] = py[i]
            k += 1
        if (si >= 0) != (sj >= 0):
            t = si / (si - sj)
            qx[k] = px[i] + t * (px[j] - px[i])
            qy[k] = py[i] + t * (py[j] - py[i])
            k += 1
    return k


@njit
def _area(px, py, m):
    a = 0.0
    for i in range(m):
        j = (i + 1) % m
        a += px[i] * py[j] - px[j] * py[i]
    return 0.5 * a


@njit
def _sample_in(px, py, m, u1, u2, u3):
    """Uniform point of a convex polygon by fan triangulation."""
    tot = _area(px, py, m)
    target = u1 * tot
    acc = 0.0
    t = 1
    for t in range(1, m - 1):
        a = 0.5 * ((px[t] - px[0]) * (py[t + 1] - py[0]) - (px[t + 1] - px[0]) * (py[t] - py[0]))
        acc += a
        if acc >= target:
            break
    r1 = np.sqrt(u2)
    wa = 1.0 - r1
    wb = r1 * (1.0 - u3)
    wc = r1 * u3
    x = wa * px[0] + wb * px[t] + wc * px[t + 1]
    y = wa * py[0] + wb * py[t] + wc * py[t + 1]
    return x, y


@njit
def sis_log_weights(ring, area_body, n, U):
    reps = U.shape[0]
    m = ring.shape[0]
    cap = m + 8
    out = np.zeros(reps)
    Px = np.empty(n)
    Py = np.empty(n)
    bx = np.empty(cap)
    by = np.empty(cap)
    cx = np.empty(cap)
    cy = np.empty(cap)
    areas = np.empty(n)
    for r in range(reps):
        for i in range(3):
            x, y = _sample_in(ring[:, 0].copy(), ring[:, 1].copy(), m, U[r, i, 0], U[r, i, 1], U[r, i, 2])
            Px[i] = x
            Py[i] = y
        if (Px[1] - Px[0]) * (Py[2] - Py[0]) - (Py[1] - Py[0]) * (Px[2] - Px[0]) < 0:
            Px[1], Px[2] = Px[2], Px[1]
            Py[1], Py[2] = Py[2], Py[1]
        k = 3
        logw = 0.0
        while k < n:
            tot = 0.0
            for j in range(k):
                areas[j] = _region(Px, Py, k, j, ring, m, bx, by, cx, cy)
                tot += areas[j]
            if tot <= 0.0:
                logw = -np.inf
                break
            logw += np.log(tot / area_body)
            target = U[r, k, 0] * tot
            acc = 0.0
            j = 0
            for j in range(k):
                acc += areas[j]
                if acc >= target and areas[j] > 0.0:
                    break
            sz = _region_poly(Px, Py, k, j, ring, m, bx, by, cx, cy)
            x, y = _sample_in(bx, by, sz, U[r, k, 1], U[r, k, 2], U[r, k, 3])
            for t in range(k, j + 1, -1):
                Px[t] = Px[t - 1]
                Py[t] = Py[t - 1]
            Px[j + 1] = x
            Py[j + 1] = y
            k += 1
        out[r] = logw
    return out


@njit
def _region_poly(Px, Py, k, j, ring, m, bx, by, cx, cy):
    for i in range(m):
        bx[i] = ring[i, 0]
        by[i] = ring[i, 1]
    sz = m
    a = (j - 1) % k
    b = j
    c = (j + 1) % k
    e = (j + 2) % k
    # beyond edge b->c: left side of c->b
    sz = _clip(bx, by, sz, Px[c], Py[c], Px[b], Py[b], cx, cy)
    if sz < 3:
        return 0
    sz = _clip(cx, cy, sz, Px[a], Py[a], Px[b], Py[b], bx, by)
    if sz < 3:
        return 0
    sz = _clip(bx, by, sz, Px[c], Py[c], Px[e], Py[e], cx, cy)
    if sz < 3:
        return 0
    for i in range(sz):
        bx[i] = cx[i]
        by[i] = cy[i]
    return sz


@njit
def _region(Px, Py, k, j, ring, m, bx, by, cx, cy):
    sz = _region_poly(Px, Py, k, j, ring, m, bx, by, cx, cy)
    if sz < 3:
        return 0.0
    return max(_area(bx, by, sz), 0.0)


@njit
def smc_log_z(ring, area_body, n, U, V):
    """log of the particle estimate of p(n); U: (R, n, 4) uniforms, V: (n,) uniforms."""
    R = U.shape[0]
    m = ring.shape[0]
    cap = m + 8
    P = np.empty((R, n, 2))
    Q = np.empty((R, n, 2))
    areas = np.empty((R, n))
    tot = np.empty(R)
    bx = np.empty(cap)
    by = np.empty(cap)
    cx = np.empty(cap)
    cy = np.empty(cap)
    rx = ring[:, 0].copy()
    ry = ring[:, 1].copy()
    for r in range(R):
        for i in range(3):
            x, y = _sample_in(rx, ry, m, U[r, i, 0], U[r, i, 1], U[r, i, 2])
            P[r, i, 0] = x
            P[r, i, 1] = y
        if (P[r, 1, 0] - P[r, 0, 0]) * (P[r, 2, 1] - P[r, 0, 1]) - (P[r, 1, 1] - P[r, 0, 1]) * (P[r, 2, 0] - P[r, 0, 0]) < 0:
            for c in range(2):
                t = P[r, 1, c]
                P[r, 1, c] = P[r, 2, c]
                P[r, 2, c] = t
    logz = 0.0
    Px = np.empty(n)
    Py = np.empty(n)
    for k in range(3, n):
        s = 0.0
        for r in range(R):
            for i in range(k):
                Px[i] = P[r, i, 0]
                Py[i] = P[r, i, 1]
            t = 0.0
            for j in range(k):
                areas[r, j] = _region(Px, Py, k, j, ring, m, bx, by, cx, cy)
                t += areas[r, j]
            tot[r] = t
            s += t
        if s <= 0.0:
            return -np.inf
        logz += np.log(s / R / area_body)
        # systematic resampling proportional to tot
        step = s / R
        pos = V[k] * step
        acc = tot[0]
        src = 0
        for r in range(R):
            while acc < pos and src < R - 1:
                src += 1
                acc += tot[src]
            for i in range(k):
                Px[i] = P[src, i, 0]
                Py[i] = P[src, i, 1]
            target = U[r, k, 0] * tot[src]
            a = 0.0
            j = 0
            for j in range(k):
                a += areas[src, j]
                if a >= target and areas[src, j] > 0.0:
                    break
            sz = _region_poly(Px, Py, k, j, ring, m, bx, by, cx, cy)
            x, y = _sample_in(bx, by, sz, U[r, k, 1], U[r, k, 2], U[r, k, 3])
            for i in range(j + 1):
                Q[r, i, 0] = Px[i]
                Q[r, i, 1] = Py[i]
            Q[r, j + 1, 0] = x
            Q[r, j + 1, 1] = y
            for i in range(j + 1, k):
                Q[r, i + 1, 0] = Px[i]
                Q[r, i + 1, 1] = Py[i]
            pos += step
        for r in range(R):
            for i in range(k + 1):
                P[r, i, 0] = Q[r, i, 0]
                P[r, i, 1] = Q[r, i, 1]
    return logz
