"""Orientation predicates: floating-point filter, exact rational fallback.

All signs returned here are exact. The float path is trusted only when the
computed value clears a forward error bound; otherwise the determinant is
recomputed over ``fractions.Fraction`` (every double converts exactly).
"""
from fractions import Fraction

import numpy as np

EPS = 2.0 ** -53
# Shewchuk's bound for the 2x2 orientation determinant.
CCW_ERRBOUND = (3.0 + 16.0 * EPS) * EPS


def orient2d_exact(ax, ay, bx, by, cx, cy):
    ax, ay, bx, by, cx, cy = (Fraction(float(t)) for t in (ax, ay, bx, by, cx, cy))
    det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    return (det > 0) - (det < 0)


def orient2d(ax, ay, bx, by, cx, cy):
    """Sign of the signed area of triangle abc (+1 counter-clockwise)."""
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    if abs(det) > CCW_ERRBOUND * (abs(detleft) + abs(detright)):
        return 1 if det > 0 else -1
    return orient2d_exact(ax, ay, bx, by, cx, cy)


def orient2d_vec(ax, ay, bx, by, cx, cy):
    """Vectorised ``orient2d``; arguments broadcast. Returns int8 signs."""
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    bound = CCW_ERRBOUND * (np.abs(detleft) + np.abs(detright))
    out = np.sign(det).astype(np.int8)
    amb = ~(np.abs(det) > bound)
    if np.any(amb):
        shape = out.shape
        args = [np.broadcast_to(np.asarray(t, dtype=float), shape) for t in (ax, ay, bx, by, cx, cy)]
        for pos in zip(*np.nonzero(amb)):
            out[pos] = orient2d_exact(*(a[pos] for a in args))
    return out


def det_exact(rows):
    """Exact sign of det(rows) for a square matrix of floats."""
    m = [[Fraction(float(v)) for v in r] for r in rows]
    n = len(m)
    sign = 1
    for col in range(n):
        piv = None
        for r in range(col, n):
            if m[r][col] != 0:
                piv = r
                break
        if piv is None:
            return 0
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            sign = -sign
        p = m[col][col]
        for r in range(col + 1, n):
            f = m[r][col] / p
            if f:
                rr, rc = m[r], m[col]
                for c in range(col + 1, n):
                    rr[c] -= f * rc[c]
        if m[col][col] < 0:
            sign = -sign
    return sign


def _errbound(n):
    # Generous relative bound for an LU determinant of an n x n matrix,
    # measured against Hadamard's product of row norms.
    return 64.0 * n ** 3 * EPS


def det_sign(rows):
    """Exact sign of a small determinant with a float filter."""
    a = np.asarray(rows, dtype=float)
    n = a.shape[0]
    if n == 0:
        return 1
    val = float(np.linalg.det(a))
    scale = float(np.prod(np.linalg.norm(a, axis=1)))
    if scale == 0.0:
        return 0
    if abs(val) > _errbound(n) * scale:
        return 1 if val > 0 else -1
    return det_exact(a)


def orient(simplex, p):
    """Sign of det[q1-q0, ..., q_{d-1}-q0, p-q0] for d points q and a point p."""
    q = np.asarray(simplex, dtype=float)
    rows = np.vstack([q[1:] - q[0], np.asarray(p, dtype=float) - q[0]])
    return det_sign(rows)


def cofactor_normal(simplex):
    """Vector c with det[q1-q0, ..., p-q0] = c . (p - q0) (float)."""
    q = np.asarray(simplex, dtype=float)
    m = q[1:] - q[0]
    d = q.shape[1]
    c = np.empty(d)
    for j in range(d):
        sub = np.delete(m, j, axis=1)
        c[j] = (-1.0) ** (d - 1 + j) * (np.linalg.det(sub) if sub.size else 1.0)
    return c


def orient_many(simplex, pts, normal=None):
    """Exact orientation signs of many points against one simplex (d points)."""
    q = np.asarray(simplex, dtype=float)
    pts = np.asarray(pts, dtype=float)
    if normal is None:
        normal = cofactor_normal(q)
    diff = pts - q[0]
    vals = diff @ normal
    d = q.shape[1]
    base = float(np.prod(np.linalg.norm(q[1:] - q[0], axis=1))) if d > 1 else 1.0
    bound = _errbound(d) * base * np.linalg.norm(diff, axis=1)
    out = np.sign(vals).astype(np.int8)
    amb = np.nonzero(~(np.abs(vals) > bound))[0]
    for i in amb:
        out[i] = orient(q, pts[i])
    return out


def affine_rank_exact(pts):
    """Exact affine rank of a small point set (dimension of its affine hull)."""
    pts = np.asarray(pts, dtype=float)
    if len(pts) <= 1:
        return 0
    m = [[Fraction(float(v)) for v in (r - pts[0])] for r in pts[1:]]
    rank = 0
    ncol = pts.shape[1]
    rows = len(m)
    for col in range(ncol):
        piv = None
        for r in range(rank, rows):
            if m[r][col] != 0:
                piv = r
                break
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(rank + 1, rows):
            f = m[r][col] / m[rank][col]
            if f:
                for c in range(col, ncol):
                    m[r][c] -= f * m[rank][c]
        rank += 1
        if rank == rows:
            break
    return rank

