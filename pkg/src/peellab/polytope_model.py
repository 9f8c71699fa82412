"""Bounded H-polytopes, simplicity checks, corner frames and tower counts."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
import json
import math

import numpy as np
from scipy.optimize import linprog

from . import _predicates as pr
from .errors import NotSimple, Unbounded
from .geom_core import PointSet, convex_hull


class HPolytope:
    """{z : a.z <= b} with canonical (lexicographic) facet order.

    The raw coefficients are kept for exact incidence tests; ``A``/``b`` are
    the unit-normal versions.
    """

    def __init__(self, A, b, name=None):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValueError("A and b disagree in length")
        self.dim = A.shape[1]
        self.name = name
        nrm = np.linalg.norm(A, axis=1)
        if np.any(nrm == 0):
            raise ValueError("zero normal")
        self._check_bounded(A, b)
        keep = self._irredundant(A, b)
        A, b, nrm = A[keep], b[keep], nrm[keep]
        unit = A / nrm[:, None]
        order = sorted(range(len(b)), key=lambda i: (tuple(unit[i]), b[i] / nrm[i]))
        self.A_raw = A[order]
        self.b_raw = b[order]
        self.A = unit[order]
        self.b = (b / nrm)[order]

    # -- construction helpers
    @staticmethod
    def _check_bounded(A, b):
        d = A.shape[1]
        for j in range(d):
            for sgn in (1.0, -1.0):
                c = np.zeros(d)
                c[j] = -sgn
                res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * d, method="highs")
                if res.status == 3:
                    raise Unbounded("recession cone is nontrivial")
                if res.status == 2:
                    raise ValueError("empty polytope")

    @staticmethod
    def _irredundant(A, b):
        """Drop halfspaces that do not support a facet (d affinely independent tight vertices)."""
        verts, tight = _enumerate_vertices(A, b)
        d = A.shape[1]
        keep = []
        for i in range(len(b)):
            pts = [verts[k] for k in range(len(verts)) if i in tight[k]]
            if len(pts) >= d and np.linalg.matrix_rank(np.array(pts[1:]) - pts[0], tol=1e-9) == d - 1:
                keep.append(i)
        return keep

    @cached_property
    def _vt(self):
        return _enumerate_vertices(self.A_raw, self.b_raw)

    @property
    def vertices(self) -> np.ndarray:
        return np.array(self._vt[0])

    @property
    def vertex_facets(self) -> list:
        """Indices of facets containing each vertex (exact incidences)."""
        return self._vt[1]

    @cached_property
    def hull(self):
        return convex_hull(PointSet(self.vertices))

    @property
    def volume(self) -> float:
        return self.hull.volume

    @property
    def n_facets(self):
        return len(self.b)

    def bbox(self):
        v = self.vertices
        return v.min(axis=0), v.max(axis=0)

    def contains(self, pts, tol=0.0):
        pts = np.atleast_2d(pts)
        return np.all(pts @ self.A.T <= self.b + tol, axis=1)

    def scaled(self, factor):
        return HPolytope(self.A_raw, self.b_raw * factor, name=self.name)

    def affine_image(self, M, t):
        """Image under z -> M z + t (M invertible)."""
        Minv = np.linalg.inv(M)
        A = self.A_raw @ Minv
        b = self.b_raw + A @ t
        return HPolytope(A, b)

    def __repr__(self):
        return f"HPolytope(dim={self.dim}, facets={self.n_facets}, name={self.name!r})"


def _enumerate_vertices(A, b, rtol=1e-9):
    """All vertices by d-subset intersection.

    Incidences use a relative slack tolerance: facet data that went through
    an affine map is rarely exactly incident in floating point.
    """
    m, d = A.shape
    An = A / np.linalg.norm(A, axis=1)[:, None]
    bn = b / np.linalg.norm(A, axis=1)
    scale = np.abs(bn).max() + 1.0
    tol = rtol * scale
    verts, tight = [], []
    for S in combinations(range(m), d):
        M = An[list(S)]
        if pr.det_sign(M) == 0:
            continue
        x = np.linalg.solve(M, bn[list(S)])
        slack = bn - An @ x
        if np.all(slack >= -tol):
            if not any(np.max(np.abs(x - u)) <= tol for u in verts):
                verts.append(x)
    verts.sort(key=lambda v: tuple(v))
    for x in verts:
        slack = bn - An @ x
        tight.append(frozenset(int(i) for i in np.nonzero(np.abs(slack) <= tol)[0]))
    return verts, tight


def vertices_and_simplicity(K: HPolytope):
    verts = K.vertices
    simple = all(len(t) == K.dim for t in K.vertex_facets)
    return verts, simple


@dataclass(frozen=True)
class CornerFrame:
    vertex: np.ndarray
    matrix: np.ndarray
    offset: np.ndarray
    facets: tuple  # facet indices mapped to the coordinate hyperplanes, in axis order
    edge_lengths: np.ndarray  # extent of the mapped polytope along each axis

    def map(self, z):
        z = np.asarray(z, dtype=float)
        return z @ self.matrix.T + self.offset

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        return (y - self.offset) @ np.linalg.inv(self.matrix).T

    @property
    def det(self):
        return float(np.linalg.det(self.matrix))


def corner_frame(K: HPolytope, i: int) -> CornerFrame:
    """Volume-preserving affine map sending vertex i to 0 and its edges to the positive axes.

    The map is z -> c * (b_T - A_T z) for the tight facets T (canonical
    order), i.e. scaled slacks, with c chosen so that |det| = 1.
    """
    d = K.dim
    T = sorted(K.vertex_facets[i])
    if len(T) != d:
        raise NotSimple(f"vertex {i} lies on {len(T)} facets")
    V = K.vertices[i]
    AT = K.A[T]
    c = abs(np.linalg.det(AT)) ** (-1.0 / d)
    M = -c * AT
    t = c * K.b[T]
    # edge e_j = -AT^{-1}[:, j]; walk until another facet blocks
    E = -np.linalg.inv(AT)
    lengths = np.empty(d)
    for j in range(d):
        e = E[:, j]
        rate = K.A @ e
        slack = K.b - K.A @ V
        with np.errstate(divide="ignore", invalid="ignore"):
            steps = np.where(rate > 1e-12, slack / rate, np.inf)
        steps[T] = np.inf
        s = steps.min()
        lengths[j] = (M @ (e * s))[j]
    return CornerFrame(V, M, t, tuple(T), lengths)


def corner_frames(K: HPolytope):
    return [corner_frame(K, i) for i in range(len(K.vertices))]


def face_lattice(K: HPolytope):
    """Faces of K as sets of vertex indices, keyed by dimension."""
    return convex_hull(PointSet(K.vertices)).faces


def count_towers(K: HPolytope) -> int:
    """Number of chains F_0 < F_1 < ... < F_{d-1} of faces of K."""
    faces = face_lattice(K)
    d = K.dim
    counts = {F: 1 for F in faces[0]}
    for k in range(1, d):
        nxt = {}
        lower = [(set(G), c) for G, c in counts.items()]
        for F in faces[k]:
            Fs = set(F)
            nxt[F] = sum(c for G, c in lower if G <= Fs)
        counts = nxt
    return int(sum(counts.values()))


# ---------------------------------------------------------------- built-ins

def cube(d, side=1.0):
    A = np.vstack([np.eye(d), -np.eye(d)])
    b = np.concatenate([np.full(d, float(side)), np.zeros(d)])
    return HPolytope(A, b, name="cube" if side == 1.0 else "scaled-cube")


def simplex(d):
    A = np.vstack([-np.eye(d), np.ones((1, d))])
    b = np.concatenate([np.zeros(d), [1.0]])
    return HPolytope(A, b, name="simplex")


def triangle():
    return simplex(2)


def cross_polytope(d=3):
    rows = [np.array(s, dtype=float) for s in np.ndindex(*(2,) * d)]
    A = np.array([2 * r - 1 for r in rows])
    return HPolytope(A, np.ones(len(A)), name="cross-polytope")


def truncated_cube(d=3, cut=2.5):
    A = np.vstack([np.eye(d), -np.eye(d), np.ones((1, d))])
    b = np.concatenate([np.ones(d), np.zeros(d), [cut]])
    return HPolytope(A, b, name="truncated-cube")


def builtin(name, dim, param=None):
    if name == "cube":
        return cube(dim)
    if name == "scaled-cube":
        return cube(dim, 1.0 if param is None else float(param))
    if name == "simplex":
        return simplex(dim)
    if name == "unit-volume-simplex":
        return simplex(dim).scaled(math.factorial(dim) ** (1.0 / dim))
    raise ValueError(f"unknown polytope {name!r}")


def from_json(obj):
    """{"dim": d, "halfspaces": [[[a...], b], ...]} or a path to such a file."""
    if isinstance(obj, (str, bytes)) and not str(obj).lstrip().startswith("{"):
        with open(obj) as fh:
            obj = json.load(fh)
    elif isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    d = int(obj["dim"])
    A = [h[0] for h in obj["halfspaces"]]
    b = [h[1] for h in obj["halfspaces"]]
    A = np.asarray(A, dtype=float)
    if A.shape[1] != d:
        raise ValueError("halfspace dimension mismatch")
    return HPolytope(A, b, name=obj.get("name"))


def to_json(K: HPolytope):
    return {"dim": K.dim, "halfspaces": [[list(map(float, a)), float(b)] for a, b in zip(K.A_raw, K.b_raw)]}
