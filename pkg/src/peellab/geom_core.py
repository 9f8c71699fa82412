"""Point sets and exact-predicate convex hulls in any dimension.

The hull is built by beneath-beyond insertion: points are inserted
furthest-first from per-facet conflict (outside) sets, visible facets are
replaced by the cone over the horizon. Every visibility decision goes through
the filtered exact predicates in ``_predicates``. Coplanar simplicial facets
are merged afterwards and the face lattice is obtained by closing the facet
vertex sets under intersection.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Iterable, Sequence

import numpy as np

from . import _predicates as pr
from .errors import DegenerateInput


@dataclass(frozen=True)
class Point:
    coords: tuple
    id: int

    @property
    def dim(self):
        return len(self.coords)


class PointSet:
    """Immutable labelled point configuration backed by an (m, d) array."""

    __slots__ = ("coords", "ids", "dim")

    def __init__(self, coords, ids=None, dim=None):
        c = np.array(coords, dtype=float)
        if c.ndim == 1 and c.size == 0:
            if dim is None:
                raise ValueError("dim required for an empty PointSet")
            c = c.reshape(0, dim)
        if c.ndim != 2:
            raise ValueError("coords must be (m, d)")
        if c.shape[1] < 1:
            raise ValueError("dimension must be positive")
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coordinate")
        if ids is None:
            i = np.arange(c.shape[0], dtype=np.int64)
        else:
            i = np.array(ids, dtype=np.int64).reshape(-1)
            if i.shape[0] != c.shape[0]:
                raise ValueError("ids/coords length mismatch")
            if np.unique(i).size != i.size:
                raise ValueError("ids must be unique")
        c.setflags(write=False)
        i.setflags(write=False)
        self.coords = c
        self.ids = i
        self.dim = c.shape[1]

    @classmethod
    def from_points(cls, points: Iterable[Point], dim=None):
        pts = list(points)
        if not pts:
            return cls(np.empty((0, dim or 2)), dim=dim)
        return cls([p.coords for p in pts], [p.id for p in pts])

    def __len__(self):
        return self.coords.shape[0]

    def __iter__(self):
        for c, i in zip(self.coords, self.ids):
            yield Point(tuple(float(v) for v in c), int(i))

    @property
    def points(self):
        return list(self)

    def index_of(self, pid):
        hit = np.nonzero(self.ids == pid)[0]
        if hit.size == 0:
            raise KeyError(pid)
        return int(hit[0])

    def subset(self, mask_or_index):
        return PointSet(self.coords[mask_or_index], self.ids[mask_or_index], dim=self.dim)

    def with_point(self, x: Point | Sequence[float], pid=None):
        if isinstance(x, Point):
            coords, pid = x.coords, x.id
        else:
            coords = x
            if pid is None:
                pid = int(self.ids.max()) + 1 if len(self) else 0
        return PointSet(np.vstack([self.coords, np.asarray(coords, float)[None, :]]),
                        np.append(self.ids, pid), dim=self.dim)

    def __repr__(self):
        return f"PointSet(n={len(self)}, dim={self.dim})"


@dataclass
class HullComplex:
    dim: int
    vertex_ids: tuple
    faces: dict  # k -> list of sorted id tuples
    facet_normals: np.ndarray  # aligned with faces[dim - 1]
    facet_offsets: np.ndarray
    volume: float
    degenerate: bool = False
    affine_dim: int | None = None
    simplices: list = field(default_factory=list, repr=False)  # triangulated facets (id tuples)
    facet_reps: list = field(default_factory=list, repr=False)  # one simplex per facet

    @property
    def f(self):
        return tuple(len(self.faces.get(k, ())) for k in range(self.dim))

    def euler(self):
        return sum((-1) ** k * n for k, n in enumerate(self.f))


# ---------------------------------------------------------------- helpers

def _dedup(coords, ids):
    """Unique coordinate rows, keeping the lowest id of each group."""
    order = np.lexsort((ids,) + tuple(coords[:, j] for j in range(coords.shape[1] - 1, -1, -1)))
    c = coords[order]
    keep = np.ones(len(c), dtype=bool)
    if len(c) > 1:
        keep[1:] = np.any(c[1:] != c[:-1], axis=1)
    return order[keep]


def _initial_simplex(X):
    """Indices of d+1 affinely independent rows of X, or the rank found."""
    m, d = X.shape
    chosen = [int(np.argmin(X[:, 0]))]
    far = np.linalg.norm(X - X[chosen[0]], axis=1)
    chosen.append(int(np.argmax(far)))
    if far[chosen[1]] == 0.0:
        return chosen[:1], 0
    for _ in range(d - 1):
        base = X[chosen[1:]] - X[chosen[0]]
        q, _ = np.linalg.qr(base.T)
        diff = X - X[chosen[0]]
        resid = diff - (diff @ q) @ q.T
        r = np.linalg.norm(resid, axis=1)
        nxt = int(np.argmax(r))
        if r[nxt] <= 1e-300:
            break
        chosen.append(nxt)
    if len(chosen) == d + 1 and pr.det_sign(X[chosen[1:]] - X[chosen[0]]) != 0:
        return chosen, d
    # float search failed; fall back to exact greedy rank growth
    chosen = [chosen[0]]
    for i in range(m):
        if pr.affine_rank_exact(X[chosen + [i]]) == len(chosen):
            chosen.append(i)
            if len(chosen) == d + 1:
                return chosen, d
    return chosen, len(chosen) - 1


def _projection_coords(X, basis_idx):
    """Coordinate subset on which projection is injective over the flat.

    Dropping coordinates is exact, so extremality in the projected points is
    exactly extremality in the flat.
    """
    base = X[basis_idx[1:]] - X[basis_idx[0]]
    k, d = base.shape
    best, best_val = None, -1.0
    from itertools import combinations
    for cols in combinations(range(d), k):
        v = abs(np.linalg.det(base[:, cols])) if k else 1.0
        if v > best_val:
            best, best_val = cols, v
    return list(best)


class _Facet:
    __slots__ = ("verts", "normal", "flip", "outside", "alive")

    def __init__(self, verts, normal, flip):
        self.verts = verts
        self.normal = normal
        self.flip = flip
        self.outside = np.empty(0, dtype=np.int64)
        self.alive = True


def _side_many(X, f, idx):
    """Exact signs (+1 outside) of points X[idx] against facet f."""
    if len(idx) == 0:
        return np.empty(0, dtype=np.int8)
    return f.flip * pr.orient_many(X[list(f.verts)], X[idx], f.normal)


def _beneath_beyond(X):
    """Simplicial hull of full-dimensional X. Returns list of oriented vertex tuples."""
    m, d = X.shape
    init, rank = _initial_simplex(X)
    assert rank == d
    interior = X[init].mean(axis=0)
    facets: list[_Facet] = []
    ridge_map: dict = {}

    def make(verts):
        q = X[list(verts)]
        nrm = pr.cofactor_normal(q)
        s = pr.orient(q, interior)
        if s == 0:
            raise RuntimeError("interior point on facet plane")
        f = _Facet(tuple(verts), nrm, -s)
        fid = len(facets)
        facets.append(f)
        for j in range(d):
            key = tuple(sorted(verts[:j] + verts[j + 1:]))
            ridge_map.setdefault(key, set()).add(fid)
        return fid

    def drop(fid):
        f = facets[fid]
        f.alive = False
        for j in range(d):
            key = tuple(sorted(f.verts[:j] + f.verts[j + 1:]))
            s = ridge_map.get(key)
            if s is not None:
                s.discard(fid)
                if not s:
                    del ridge_map[key]

    def assign(points, new_ids):
        rest = points
        for fid in new_ids:
            if rest.size == 0:
                break
            f = facets[fid]
            sg = _side_many(X, f, rest)
            f.outside = rest[sg > 0]
            rest = rest[sg <= 0]

    init_ids = []
    for j in range(d + 1):
        init_ids.append(make(tuple(init[:j] + init[j + 1:])))
    mask = np.ones(m, dtype=bool)
    mask[init] = False
    assign(np.nonzero(mask)[0], init_ids)

    stack = list(init_ids)
    while stack:
        fid = stack.pop()
        f = facets[fid]
        if not f.alive or f.outside.size == 0:
            continue
        q0 = X[f.verts[0]]
        dist = (X[f.outside] - q0) @ (f.flip * f.normal)
        p = int(f.outside[int(np.argmax(dist))])
        # visible region by flooding across ridges
        visible = {fid}
        todo = [fid]
        horizon = []
        while todo:
            g = facets[todo.pop()]
            for j in range(d):
                key = tuple(sorted(g.verts[:j] + g.verts[j + 1:]))
                nb = [h for h in ridge_map[key] if facets[h] is not g]
                h = nb[0]
                if h in visible:
                    continue
                hf = facets[h]
                if p in hf.verts:
                    continue
                if hf.flip * pr.orient(X[list(hf.verts)], X[p]) > 0:
                    visible.add(h)
                    todo.append(h)
                else:
                    horizon.append(key)
        pending = [facets[v].outside for v in visible]
        pending = np.unique(np.concatenate(pending)) if pending else np.empty(0, np.int64)
        pending = pending[pending != p]
        for v in visible:
            drop(v)
        new_ids = [make(tuple(r) + (p,)) for r in horizon]
        assign(pending, new_ids)
        stack.extend(new_ids)
    return [f.verts for f in facets if f.alive]


def _facet_plane(X, verts, interior):
    q = X[list(verts)]
    nrm = pr.cofactor_normal(q)
    if nrm @ (interior - q[0]) > 0:
        nrm = -nrm
    nn = np.linalg.norm(nrm)
    return nrm / nn, float((nrm / nn) @ q[0]), nn


def _closure_faces(facet_sets, d):
    faces = {d - 1: sorted(set(facet_sets))}
    facet_fs = [frozenset(s) for s in faces[d - 1]]
    for k in range(d - 1, 0, -1):
        lower = set()
        for F in faces[k]:
            Fs = frozenset(F)
            cands = {Fs & G for G in facet_fs if not Fs <= G}
            cands.discard(frozenset())
            for c in cands:
                if not any(c < o for o in cands):
                    lower.add(tuple(sorted(c)))
        faces[k - 1] = sorted(lower)
    return faces


def _full_hull(X, ids):
    """Hull data for a full-dimensional unique point array."""
    m, d = X.shape
    simp_local = _beneath_beyond(X)
    interior = X[list({v for s in simp_local for v in s})].mean(axis=0)
    n_s = len(simp_local)
    # coplanar merge by exact test of neighbour apexes
    parent = list(range(n_s))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    planes = [_facet_plane(X, s, interior) for s in simp_local]
    by_ridge: dict = {}
    for i, s in enumerate(simp_local):
        for j in range(d):
            by_ridge.setdefault(tuple(sorted(s[:j] + s[j + 1:])), []).append(i)
    for key, pair in by_ridge.items():
        if len(pair) != 2:
            continue
        a, b = pair
        if find(a) == find(b):
            continue
        apex = [v for v in simp_local[b] if v not in key][0]
        if pr.orient(X[list(simp_local[a])], X[apex]) == 0:
            parent[find(a)] = find(b)
    groups: dict = {}
    for i in range(n_s):
        groups.setdefault(find(i), []).append(i)
    cand_sets = []
    group_list = list(groups.values())
    for g in group_list:
        cand_sets.append(frozenset(v for i in g for v in simp_local[i]))
    # a candidate is a vertex iff the facets containing it meet only in it
    cand_pts = set().union(*cand_sets)
    containing: dict = {v: [] for v in cand_pts}
    for gi, cs in enumerate(cand_sets):
        for v in cs:
            containing[v].append(gi)
    verts = set()
    for v in cand_pts:
        inter = frozenset.intersection(*(cand_sets[g] for g in containing[v]))
        if inter == frozenset([v]):
            verts.add(v)
    facet_sets = []
    normals = []
    offsets = []
    reps = []
    for g, cs in zip(group_list, cand_sets):
        fv = tuple(sorted(int(ids[v]) for v in cs if v in verts))
        best = max(g, key=lambda i: planes[i][2])
        facet_sets.append(fv)
        normals.append(planes[best][0])
        offsets.append(planes[best][1])
        reps.append(tuple(int(ids[v]) for v in simp_local[best]))
    order = sorted(range(len(facet_sets)), key=lambda i: facet_sets[i])
    facet_sets = [facet_sets[i] for i in order]
    normals = np.array([normals[i] for i in order])
    offsets = np.array([offsets[i] for i in order])
    reps = [reps[i] for i in order]
    faces = _closure_faces(facet_sets, d)
    faces[0] = sorted((int(ids[v]),) for v in verts) if d > 1 else faces.get(0, [])
    # volume: fan from the vertex centroid over triangulated facets
    vlist = sorted(verts)
    c = X[vlist].mean(axis=0)
    vol = 0.0
    for s in simp_local:
        vol += abs(np.linalg.det(X[list(s)] - c))
    vol /= math.factorial(d)
    simplices = [tuple(int(ids[v]) for v in s) for s in simp_local]
    return HullComplex(d, tuple(sorted(int(ids[v]) for v in verts)), faces, normals, offsets,
                       vol, False, d, simplices, reps)


def _flat_hull(X, ids, basis_idx, rank):
    """Hull of an affinely flat set: vertices via exact coordinate projection."""
    d = X.shape[1]
    if rank == 0:
        vid = (int(ids.min()),)
        return HullComplex(d, vid, {0: [vid]}, np.empty((0, d)), np.empty(0), 0.0, True, 0)
    cols = _projection_coords(X, basis_idx)
    sub = X[:, cols]
    if rank == 1:
        o = np.lexsort(tuple(sub[:, j] for j in range(sub.shape[1] - 1, -1, -1)))
        vid = tuple(sorted((int(ids[o[0]]), int(ids[o[-1]]))))
        return HullComplex(d, vid, {0: [(v,) for v in vid], 1: [vid]}, np.empty((0, d)),
                           np.empty(0), 0.0, True, 1)
    inner = _full_hull(sub, ids)
    faces = dict(inner.faces)
    faces[rank] = [inner.vertex_ids]
    return HullComplex(d, inner.vertex_ids, faces, np.empty((0, d)), np.empty(0), 0.0, True, rank)


def _unique_input(ps: PointSet):
    if len(ps) == 0:
        raise ValueError("empty point set")
    keep = _dedup(ps.coords, ps.ids)
    return ps.coords[keep], ps.ids[keep]


def convex_hull(ps: PointSet, allow_degenerate=False) -> HullComplex:
    """Convex hull with exact vertex set, face lattice, outward normals, volume.

    Raises DegenerateInput when the points do not span the ambient space,
    unless ``allow_degenerate`` is set, in which case a flagged complex with
    the lower-dimensional vertex set (and no facet normals) is returned.
    """
    X, ids = _unique_input(ps)
    d = X.shape[1]
    if len(X) >= d + 1:
        basis, rank = _initial_simplex(X)
    else:
        basis, rank = _initial_simplex(X) if len(X) > 1 else ([0], 0)
        rank = min(rank, len(X) - 1)
    if rank == d:
        return _full_hull(X, ids)
    if not allow_degenerate:
        raise DegenerateInput(f"points span an affine subspace of dimension {rank}", rank)
    return _flat_hull(X, ids, basis, rank)


def extreme_points(ps: PointSet) -> set:
    """Ids of hull vertices; one (lowest) id per coincident group."""
    return set(convex_hull(ps, allow_degenerate=True).vertex_ids)


def hull_volume(h: HullComplex) -> float:
    if h.degenerate:
        raise DegenerateInput("flat hull has no d-volume", h.affine_dim)
    return h.volume


def boundary_mask(ps: PointSet, h: HullComplex) -> np.ndarray:
    """Exact mask of the points of ps on the (relative) boundary of h.

    ps is expected to lie inside h (typically the set h was built from).
    Coincident copies of vertices count as boundary points.
    """
    X = ps.coords
    pos = {int(i): k for k, i in enumerate(ps.ids)}
    out = np.zeros(len(X), dtype=bool)
    for v in h.vertex_ids:
        out |= np.all(X == X[pos[v]], axis=1)
    if h.degenerate:
        if h.affine_dim <= 1:
            return out
        return out | _on_boundary_flat(ps, h, pos)
    cand = np.nonzero(~out)[0]
    if cand.size == 0:
        return out
    dists = X[cand] @ h.facet_normals.T - h.facet_offsets
    scale = np.abs(X[cand]).max(axis=1)[:, None] + np.abs(h.facet_offsets)[None, :] + 1.0
    rows, facets = np.nonzero(np.abs(dists) <= 1e-9 * scale)
    for r, fi in zip(rows, facets):
        i = cand[r]
        if out[i]:
            continue
        q = X[[pos[v] for v in h.facet_reps[fi]]]
        if pr.orient(q, X[i]) == 0:
            out[i] = True
    return out


def _on_boundary_flat(ps, h, pos):
    X = ps.coords
    vids = list(h.vertex_ids)
    V = X[[pos[v] for v in vids]]
    basis, _ = _initial_simplex(V)
    cols = _projection_coords(V, basis)
    inner = convex_hull(PointSet(V[:, cols], vids))
    return boundary_mask(PointSet(X[:, cols], ps.ids), inner)
