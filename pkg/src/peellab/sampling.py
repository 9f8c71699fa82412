"""Random inputs: Poisson and binomial processes in a polytope, and the
rescaled limit process on a truncated cylinder.

Every sample is a pure function of a ``Seed``. The generator is numpy's
Philox (counter-based) keyed by ``SeedSequence(master, spawn_key=(stream,))``,
so replication streams are independent and can run in any order or process.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
import logging
import math

import numpy as np

from .geom_core import PointSet

log = logging.getLogger(__name__)

_BATCH = 1 << 16


@dataclass(frozen=True)
class Seed:
    master: int
    stream: int = 0

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.master) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, stream):
        return Seed(self.master, stream)


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, Seed):
        return seed.rng()
    return Seed(int(seed)).rng()


@dataclass(frozen=True)
class LimitWindow:
    """B_{d-1}(0, radius) x [h_min, h_max] in (v, h) coordinates."""
    radius: float
    h_min: float
    h_max: float
    dim: int = 2

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not self.h_min < self.h_max:
            raise ValueError("need h_min < h_max")
        if self.dim < 2:
            raise ValueError("dim must be at least 2")

    @property
    def base_volume(self):
        k = self.dim - 1
        return math.pi ** (k / 2) / math.gamma(k / 2 + 1) * self.radius ** k

    def expected_count(self, h_min=None, h_max=None):
        d = self.dim
        lo = self.h_min if h_min is None else h_min
        hi = self.h_max if h_max is None else h_max
        return math.sqrt(d) * self.base_volume * (math.exp(d * hi) - math.exp(d * lo)) / d

    def contains(self, pts):
        pts = np.atleast_2d(pts)
        v, h = pts[:, :-1], pts[:, -1]
        return (np.linalg.norm(v, axis=1) <= self.radius) & (h >= self.h_min) & (h <= self.h_max)


def uniform_in(K, n, rng):
    """n i.i.d. uniform points of K by rejection from its bounding box."""
    lo, hi = K.bbox()
    d = K.dim
    out = np.empty((n, d))
    got = drawn = 0
    while got < n:
        m = max(min(_BATCH, 2 * (n - got)), 16)
        cand = lo + (hi - lo) * rng.random((m, d))
        ok = cand[K.contains(cand)]
        take = min(len(ok), n - got)
        out[got:got + take] = ok[:take]
        got += take
        drawn += m
    if n:
        log.debug("rejection sampling: %d accepted of %d drawn (rate %.4f)", n, drawn, n / drawn)
    return out


def sample_poisson(K, lam, seed) -> PointSet:
    """Poisson process of intensity lam * Lebesgue in K."""
    if lam < 0:
        raise ValueError("intensity must be nonnegative")
    rng = _as_rng(seed)
    n = int(rng.poisson(lam * K.volume)) if lam > 0 else 0
    return PointSet(uniform_in(K, n, rng), dim=K.dim)


def sample_binomial(K, n, seed) -> PointSet:
    if n < 0:
        raise ValueError("n must be nonnegative")
    rng = _as_rng(seed)
    return PointSet(uniform_in(K, int(n), rng), dim=K.dim)


def uniform_ball(k, r, m, rng):
    if k == 1:
        return r * (2.0 * rng.random((m, 1)) - 1.0)
    g = rng.standard_normal((m, k))
    g /= np.linalg.norm(g, axis=1)[:, None]
    return g * (r * rng.random(m) ** (1.0 / k))[:, None]


def sample_heights(win: LimitWindow, m, rng):
    """Inverse-CDF draw from the density proportional to e^{d h} on [h_min, h_max]."""
    d = win.dim
    u = rng.random(m)
    return win.h_max + np.log(u + (1.0 - u) * np.exp(d * (win.h_min - win.h_max))) / d


def sample_limit_process(win: LimitWindow, seed) -> PointSet:
    """Poisson process with intensity sqrt(d) e^{d h} dv dh on the window.

    Coordinates are (v_1, ..., v_{d-1}, h) with v in the orthonormal basis
    of {sum z_i = 0} used by ``rescaled_conelike``.
    """
    rng = _as_rng(seed)
    m = int(rng.poisson(win.expected_count()))
    v = uniform_ball(win.dim - 1, win.radius, m, rng)
    h = sample_heights(win, m, rng)
    return PointSet(np.column_stack([v, h]), dim=win.dim)


def thin(ps: PointSet, p, seed) -> PointSet:
    """Keep each point independently with probability p."""
    rng = _as_rng(seed)
    return ps.subset(rng.random(len(ps)) < p)


# ---------------------------------------------------------------- persistence

def write_csv(ps: PointSet, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id"] + [f"x{j + 1}" for j in range(ps.dim)])
        for i, c in zip(ps.ids, ps.coords):
            w.writerow([int(i)] + [repr(float(t)) for t in c])


def read_csv(path) -> PointSet:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        head = next(r)
        d = len(head) - 1
        rows = [row for row in r if row]
    ids = [int(row[0]) for row in rows]
    coords = [[float(t) for t in row[1:]] for row in rows]
    return PointSet(np.array(coords).reshape(len(rows), d), ids, dim=d)


def save_npz(ps: PointSet, path):
    np.savez_compressed(path, coords=ps.coords, ids=ps.ids)


def load_npz(path) -> PointSet:
    with np.load(path) as z:
        return PointSet(z["coords"], z["ids"], dim=z["coords"].shape[1])
