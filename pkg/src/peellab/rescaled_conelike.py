"""Corner rescaling (v, h) coordinates, the grain function G, cone-like
peeling, and the empirical height-tail and stabilization estimators.

Points of (0, inf)^d are sent to V x R, V = {sum z_i = 0} written in a fixed
orthonormal (Helmert) basis B, by

    v = B^T log z,   h = (log lam + sum log z_i) / d,

so level sets of prod z_i become horizontal hyperplanes. The inverse is
z = lam^{-1/d} exp(h + B v), and l(v) = B v are the coordinates of v in
the standard basis of R^d.

Cone-like peeling is computed by pulling points back to (0, inf)^d: a point
is on the current layer iff it minimises some strictly positive linear
functional over the remaining points. Points that are only extreme in
directions with a zero (or positive) coordinate stay for later layers.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np
from scipy.optimize import linprog

from . import _kernels
from .errors import NonPositiveCoordinate
from .geom_core import PointSet, boundary_mask, convex_hull
from .sampling import LimitWindow, sample_limit_process, Seed

REF_LAMBDA = 1.0  # stand-in for lam = inf: labels are invariant under vertical shifts


@lru_cache(maxsize=None)
def _basis(d):
    """Helmert basis of {sum z_i = 0}: (d, d-1) with orthonormal columns."""
    B = np.zeros((d, d - 1))
    for j in range(1, d):
        B[:j, j - 1] = 1.0
        B[j, j - 1] = -j
        B[:, j - 1] /= math.sqrt(j * (j + 1))
    B.setflags(write=False)
    return B


def basis(d):
    return _basis(int(d))


def coords_l(v):
    """l(v): standard-basis coordinates of v in V (last axis of length d-1)."""
    v = np.asarray(v, dtype=float)
    return v @ basis(v.shape[-1] + 1).T


def G(v, grad=False):
    """G(v) = log((1/d) sum_i e^{l_i(v)}); with grad, also B^T softmax(l(v))."""
    v = np.asarray(v, dtype=float)
    d = v.shape[-1] + 1
    l = coords_l(v)
    mx = l.max(axis=-1, keepdims=True)
    e = np.exp(l - mx)
    se = e.sum(axis=-1, keepdims=True)
    g = (mx + np.log(se))[..., 0] - math.log(d)
    if not grad:
        return g
    return g, (e / se) @ basis(d)


def norm_constants(d):
    """(c_low, c_high) with c_low |v| <= max_i l_i(v) <= c_high |v| on V."""
    return 1.0 / math.sqrt(d * (d - 1)), math.sqrt((d - 1) / d)


def grad_bound(d):
    """sup |grad G| = sup_p |p - 1/d| over probability vectors."""
    return math.sqrt((d - 1) / d)


# ---------------------------------------------------------------- transform

def scaling_transform(z, lam):
    """(v, h) of points z in (0, inf)^d; rows of an (m, d) array or one point."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise NonPositiveCoordinate("scaling transform needs positive coordinates")
    d = z.shape[-1]
    lz = np.log(z)
    v = lz @ basis(d)
    h = (math.log(lam) + lz.sum(axis=-1)) / d
    return np.concatenate([v, h[..., None]], axis=-1)


def inverse_transform(w, lam):
    w = np.asarray(w, dtype=float)
    d = w.shape[-1]
    v, h = w[..., :-1], w[..., -1]
    return np.exp(coords_l(v) + h[..., None] - math.log(lam) / d)


@dataclass(frozen=True)
class Grain:
    """Down grain {h < a_h - G(v - a_v)} or its reflection, the up grain
    {h > a_h + G(a_v - v)}, with apex a = (v_1, ..., v_{d-1}, h).

    The up grain is -(down grain) so that w is on the boundary of the up
    grain at w' exactly when w' is on the boundary of the down grain at w.
    """
    apex: tuple
    direction: str = "down"

    def gap(self, w):
        """Positive strictly inside the grain, zero on its boundary."""
        w = np.atleast_2d(np.asarray(w, dtype=float))
        a = np.asarray(self.apex)
        if self.direction == "down":
            return a[-1] - G(w[:, :-1] - a[:-1]) - w[:, -1]
        return w[:, -1] - a[-1] - G(a[:-1] - w[:, :-1])

    def contains(self, w):
        return self.gap(w) > 0

    def dual(self):
        return Grain(self.apex, "up" if self.direction == "down" else "down")


def on_up_boundary(w, w_prime, tol=1e-10):
    """w on the boundary of the up grain at w_prime: h = h' + G(v' - v)."""
    w, wp = np.asarray(w, float), np.asarray(w_prime, float)
    return abs(w[-1] - (wp[-1] + G(wp[:-1] - w[:-1]))) <= tol


def on_down_boundary(w, w_prime, tol=1e-10):
    """w on the boundary of the down grain at w_prime: h = h' - G(v - v')."""
    w, wp = np.asarray(w, float), np.asarray(w_prime, float)
    return abs(w[-1] - (wp[-1] - G(w[:-1] - wp[:-1]))) <= tol


def halfspace_to_grain(z0, lam) -> Grain:
    """Image of {z : sum z_i / z0_i < d} under the transform: the down grain at T(z0)."""
    apex = scaling_transform(np.asarray(z0, dtype=float), lam)
    return Grain(tuple(float(t) for t in apex), "down")


def in_halfspace(z, z0):
    z = np.atleast_2d(np.asarray(z, dtype=float))
    z0 = np.asarray(z0, dtype=float)
    return np.sum(z / z0, axis=1) - z0.shape[0]


# ---------------------------------------------------------------- cone-like peeling

@dataclass
class ConePeelingResult:
    points: PointSet
    labels: np.ndarray
    extreme: list  # per layer: ids of the extreme (vertex) points
    face_counts: list  # per layer: counts of cone-extreme k-faces, k = 0..d-1
    face_members: list | None = None  # per layer: {k: list of id tuples}

    @property
    def label(self):
        return {int(i): int(l) for i, l in zip(self.points.ids, self.labels)}

    @property
    def n_layers(self):
        return int(self.labels.max()) if self.labels.size else 0


def _chain_faces(ids, chain):
    ch = [int(ids[c]) for c in chain]
    verts = [(v,) for v in ch[1:-1]]
    edges = [tuple(sorted(e)) for e in zip(ch, ch[1:])]
    return {0: verts, 1: edges}


def _cone_peel_planar(Z, ps, max_layers):
    labels, chains = _kernels.cone_peel_2d(Z, max_layers or 0)
    ext, counts, members = [], [], []
    for ch in chains:
        ch = list(ch)
        fm = _chain_faces(ps.ids, ch)
        ext.append(sorted({int(ps.ids[c]) for c in ch}))
        counts.append((len(fm[0]), len(fm[1])))
        members.append(fm)
    return ConePeelingResult(ps, labels, ext, counts, members)


def _positive_minimizer(P, i, cand):
    """Does P[i] minimise some u > 0 over P[cand]? (LP with u >= 1.)"""
    D = P[cand] - P[i]
    D = D[np.any(D != 0, axis=1)]
    if len(D) == 0:
        return True
    scale = np.abs(D).max(axis=1, keepdims=True)
    D = D / scale
    d = P.shape[1]
    res = linprog(np.ones(d), A_ub=-D, b_ub=np.zeros(len(D)), bounds=[(1, None)] * d, method="highs")
    return res.status == 0


def _cone_peel_general(Z, ps, max_layers):
    d = Z.shape[1]
    labels = np.zeros(len(Z), np.int64)
    alive = np.arange(len(Z))
    ext, counts, members = [], [], []
    n = 0
    while alive.size and (not max_layers or n < max_layers):
        n += 1
        sub = PointSet(Z[alive], ps.ids[alive])
        h = convex_hull(sub, allow_degenerate=True)
        on = boundary_mask(sub, h)
        take = np.zeros(alive.size, bool)
        for t in np.nonzero(on)[0]:
            take[t] = _positive_minimizer(Z, alive[t], alive)
        labels[alive[take]] = n
        fm = {k: [] for k in range(d)}
        if not h.degenerate:
            neg = np.all(h.facet_normals < -1e-12, axis=1)
            facets = [set(f) for f in h.faces[d - 1]]
            for k in range(d):
                for F in h.faces[k]:
                    Fs = set(F)
                    if all(neg[j] for j, G_ in enumerate(facets) if Fs <= G_):
                        fm[k].append(F)
        vid = set(h.vertex_ids)
        ext.append(sorted(int(i) for i in ps.ids[alive[take]] if int(i) in vid))
        counts.append(tuple(len(fm[k]) for k in range(d)))
        members.append(fm)
        alive = alive[~take]
    return ConePeelingResult(ps, labels, ext, counts, members)


def cone_peel(Y, lam=None, max_layers=None) -> ConePeelingResult:
    """Cone-like peeling of rescaled points Y ((m, d) array or PointSet)."""
    ps = Y if isinstance(Y, PointSet) else PointSet(np.asarray(Y, dtype=float).reshape(-1, np.shape(Y)[-1]))
    lam = REF_LAMBDA if lam is None or math.isinf(lam) else lam
    if len(ps) == 0:
        return ConePeelingResult(ps, np.zeros(0, np.int64), [], [])
    Z = inverse_transform(ps.coords, lam)
    if ps.dim == 2:
        return _cone_peel_planar(Z, ps, max_layers)
    return _cone_peel_general(Z, ps, max_layers)


def score(res: ConePeelingResult, pid, n, k=None):
    """Layer-membership indicator (k None) or (1/(k+1)) * number of cone-extreme
    k-faces of layer n containing point ``pid``."""
    i = res.points.index_of(pid)
    if k is None:
        return float(res.labels[i] == n)
    if n > len(res.face_members):
        return 0.0
    faces = res.face_members[n - 1].get(k, [])
    return sum(1 for F in faces if pid in F) / (k + 1)


# ---------------------------------------------------------------- estimators

def layer1_vertex_at_axis(Y, h, lam=REF_LAMBDA):
    """Vectorised test: is (0, h_j) a cone-extreme vertex of layer 1 of Y + (0, h_j)? (d = 2)

    With p the pulled-back test point and u = (cos t, sin t), p is a vertex
    whose whole normal cone lies in the open quadrant iff the feasible
    angle interval [lo, hi] (from u . (q - p) >= 0 for all q) satisfies
    0 < lo < hi < pi/2.
    """
    Y = np.asarray(Y, dtype=float)
    h = np.atleast_1d(np.asarray(h, dtype=float))
    Q = inverse_transform(Y, lam)
    P = inverse_transform(np.column_stack([np.zeros_like(h), h]), lam)
    out = np.zeros(len(h), bool)
    for j, p in enumerate(P):
        dx = Q[:, 0] - p[0]
        dy = Q[:, 1] - p[1]
        if np.any((dx < 0) & (dy < 0)):
            continue
        a = (dx < 0) & (dy >= 0)
        b = (dx >= 0) & (dy < 0)
        lo = np.max(np.arctan2(-dx[a], dy[a])) if a.any() else 0.0
        hi = np.min(np.arctan2(dx[b], -dy[b])) if b.any() else math.pi / 2
        out[j] = (0.0 < lo < hi < math.pi / 2)
    return out


def height_tail_estimate(win: LimitWindow, n, reps, t_grid, seed, margin=0.5):
    """P(max height of layer-n points with |v| <= margin * r >= t) over t_grid."""
    t_grid = np.asarray(t_grid, dtype=float)
    maxima = np.full(reps, -np.inf)
    for r in range(reps):
        Y = sample_limit_process(win, Seed(seed, r)).coords
        if len(Y) == 0:
            continue
        res = cone_peel(Y, max_layers=n)
        sel = (res.labels == n) & (np.linalg.norm(Y[:, :-1], axis=1) <= margin * win.radius)
        if sel.any():
            maxima[r] = Y[sel, -1].max()
    tail = np.array([(maxima >= t).mean() for t in t_grid])
    ok = (tail > 0) & (tail < 1)
    slope = None
    if ok.sum() >= 2:
        slope = float(np.polyfit(t_grid[ok], np.log(-np.log(tail[ok])), 1)[0])
    return {"t": t_grid.tolist(), "tail": tail.tolist(), "maxima": maxima.tolist(), "slope": slope}


def stabilization_radius(w0, Y, score_kind, r_grid, lam=None):
    """Smallest grid radius from which the score of w0 no longer changes.

    score_kind is ("layer", n) for the layer-n indicator or ("face", n, k).
    The score at radius r uses Y restricted to the cylinder |v - v0| <= r,
    plus w0. Returns inf when the score still changes at the last step.
    """
    w0 = np.asarray(w0, dtype=float)
    Y = np.asarray(Y, dtype=float).reshape(-1, w0.shape[0])
    r_grid = sorted(float(r) for r in r_grid)
    vals = []
    for r in r_grid:
        keep = np.linalg.norm(Y[:, :-1] - w0[:-1], axis=1) <= r
        pts = np.vstack([Y[keep], w0[None, :]])
        ps = PointSet(pts)
        pid = int(ps.ids[-1])
        n = score_kind[1]
        res = cone_peel(ps, lam, max_layers=n)
        vals.append(score(res, pid, n, None if score_kind[0] == "layer" else score_kind[2]))
    last = vals[-1]
    i = len(vals) - 1
    while i > 0 and vals[i - 1] == last:
        i -= 1
    if i == len(vals) - 1 and len(vals) > 1:
        return math.inf
    return r_grid[i]
