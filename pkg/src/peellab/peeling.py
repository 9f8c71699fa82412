"""Convex hull peeling: layer labels, per-layer hulls, face counts and
defect volumes.

A layer is the set of remaining points on the boundary of the hull of the
remainder (boundary membership, not vertex-hood: points in the relative
interior of a face go with that face's layer). Once the remainder is flat
it is peeled inside its own affine hull, so labels keep increasing until
every point is placed.

The planar case runs on the compiled kernels in ``_kernels``; other
dimensions rebuild the hull of the remainder with ``geom_core`` each round.
"""
from __future__ import annotations

from dataclasses import dataclass
import csv
import json

import numpy as np

from . import _kernels
from .errors import LayerMissing
from .geom_core import HullComplex, PointSet, Point, boundary_mask, convex_hull


def _ring_complex(coords, ids, ring) -> HullComplex:
    """HullComplex of a planar layer from its ccw vertex ring (row indices)."""
    ring = [int(r) for r in ring]
    vid = tuple(sorted(int(ids[r]) for r in ring))
    if len(ring) <= 2:
        faces = {0: [(i,) for i in vid]}
        if len(ring) == 2:
            faces[1] = [vid]
        return HullComplex(2, vid, faces, np.empty((0, 2)), np.empty(0), 0.0, True, len(ring) - 1)
    P = coords[ring]
    E = np.roll(P, -1, axis=0) - P
    nrm = np.column_stack([E[:, 1], -E[:, 0]])
    nrm /= np.linalg.norm(nrm, axis=1)[:, None]
    off = np.einsum("ij,ij->i", nrm, P)
    edges = [tuple(sorted((int(ids[a]), int(ids[b])))) for a, b in zip(ring, ring[1:] + ring[:1])]
    order = sorted(range(len(edges)), key=lambda i: edges[i])
    faces = {0: [(i,) for i in vid], 1: [edges[i] for i in order]}
    area = _kernels.polygon_area(coords, ring)
    return HullComplex(2, vid, faces, nrm[order], off[order], area,
                       simplices=[edges[i] for i in order], facet_reps=[edges[i] for i in order])


@dataclass
class LayerStats:
    n: int
    f: tuple
    defect_volume: float


class PeelingResult:
    """Labels and layer hulls of one peeling.

    ``labels[i]`` is the layer of row i of ``points`` (0 if peeling stopped
    before reaching it). Layer hulls are built on first access.
    """

    def __init__(self, points: PointSet, labels, rings=None, complexes=None):
        self.points = points
        self.labels = np.asarray(labels, dtype=np.int64)
        self._rings = rings
        self._complexes = complexes

    @property
    def n_layers(self):
        return int(self.labels.max()) if self.labels.size else 0

    @property
    def label(self) -> dict:
        return {int(i): int(l) for i, l in zip(self.points.ids, self.labels)}

    @property
    def leftover(self) -> list:
        return [int(i) for i in self.points.ids[self.labels == 0]]

    @property
    def layers(self) -> list:
        if self._complexes is None:
            c, ids = self.points.coords, self.points.ids
            self._complexes = [_ring_complex(c, ids, r) for r in self._rings]
        return self._complexes

    def layer_ids(self, n):
        return [int(i) for i in self.points.ids[self.labels == n]]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "layer"])
            for i, l in zip(self.points.ids, self.labels):
                w.writerow([int(i), int(l)])

    def to_json(self, K=None):
        rows = []
        for n, h in enumerate(self.layers, start=1):
            row = {"n": n, "f": list(h.f), "volume": float(h.volume), "degenerate": bool(h.degenerate)}
            if K is not None:
                row["defect_volume"] = float(K.volume - h.volume)
            rows.append(row)
        return json.dumps({"n_points": len(self.points), "n_layers": self.n_layers, "layers": rows}, indent=2)


def _peel_1d(ps, max_layers):
    x = ps.coords[:, 0]
    labels = np.zeros(len(x), np.int64)
    alive = np.ones(len(x), bool)
    comps = []
    n = 0
    while alive.any() and (not max_layers or n < max_layers):
        n += 1
        xa = x[alive]
        lo, hi = xa.min(), xa.max()
        hit = alive & ((x == lo) | (x == hi))
        labels[hit] = n
        sub = ps.subset(hit)
        comps.append(convex_hull(sub, allow_degenerate=True))
        alive &= ~hit
    return PeelingResult(ps, labels, complexes=comps)


def _peel_general(ps, max_layers):
    labels = np.zeros(len(ps), np.int64)
    alive = np.arange(len(ps))
    comps = []
    n = 0
    while alive.size and (not max_layers or n < max_layers):
        n += 1
        sub = ps.subset(alive)
        h = convex_hull(sub, allow_degenerate=True)
        on = boundary_mask(sub, h)
        labels[alive[on]] = n
        comps.append(h)
        alive = alive[~on]
    return PeelingResult(ps, labels, complexes=comps)


def peel(ps: PointSet, max_layers=None) -> PeelingResult:
    """Peel ps completely, or only its first ``max_layers`` layers."""
    if len(ps) == 0:
        return PeelingResult(ps, np.zeros(0, np.int64), rings=[])
    if ps.dim == 2:
        labels, rings = _kernels.peel_2d(ps.coords, max_layers or 0)
        return PeelingResult(ps, labels, rings=rings)
    if ps.dim == 1:
        return _peel_1d(ps, max_layers)
    return _peel_general(ps, max_layers)


def layer_label(ps: PointSet, x) -> int:
    """Layer of x in the peeling of ps with x added."""
    coords = x.coords if isinstance(x, Point) else x
    pid = int(ps.ids.max()) + 1 if len(ps) else 0
    if isinstance(x, Point) and x.id not in set(ps.ids.tolist()):
        pid = x.id
    both = ps.with_point(coords, pid)
    res = peel(both)
    return int(res.labels[-1])


def layer_stats(pr: PeelingResult, K, n) -> LayerStats:
    if n < 1 or n > pr.n_layers:
        raise LayerMissing(f"layer {n} requested, {pr.n_layers} available")
    h = pr.layers[n - 1]
    d = h.dim
    f = tuple(len(h.faces.get(k, ())) for k in range(d))
    vol = 0.0 if h.degenerate else h.volume
    return LayerStats(n, f, float(K.volume - vol))


def total_layers(ps: PointSet) -> int:
    return peel(ps).n_layers


def planar_stats(coords, n_max, area, full=True):
    """Fast statistics of a planar peeling, without building hull complexes.

    Returns (f0, defect, total) where f0[n-1] and defect[n-1] are the vertex
    count and Vol(K) - Vol(conv_n) for n = 1..n_max (0 and ``area`` when the
    layer does not exist), and total is the number of layers (None unless
    ``full``).
    """
    coords = np.asarray(coords, dtype=float)
    f0 = np.zeros(n_max, np.int64)
    defect = np.full(n_max, float(area))
    if len(coords) == 0:
        return f0, defect, 0 if full else None
    labels, rings = _kernels.peel_2d(coords, 0 if full else n_max)
    for i, r in enumerate(rings[:n_max]):
        f0[i] = len(r)
        defect[i] = area - _kernels.polygon_area(coords, list(r))
    total = len(rings) if full else None
    return f0, defect, total
