"""Macbeath regions, the dyadic M-region net near a cube corner, minimal
caps, cap-covering volume checks, layers inside M-regions and the
convex-position probability.

Volumes in the dyadic construction are computed in exact rational
arithmetic: every region is a box cut by one hyperplane, so the bounds can
be checked with no rounding at all.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
import logging
import math
import warnings

import numpy as np

from . import _kernels
from ._cpos import sis_log_weights, smc_log_z
from .errors import BoundaryPoint, NonIntegerLevel
from .floating_sandwich import corner_constant, v_cube_corner
from .peeling import peel
from .polytope_model import HPolytope
from .sampling import Seed, _as_rng, sample_poisson, uniform_in
from .geom_core import PointSet

log = logging.getLogger(__name__)


@dataclass
class MRegion:
    center: np.ndarray
    factor: float
    polytope: HPolytope
    box: tuple | None = None  # (lo, hi) for axis-aligned regions
    k: tuple | None = None  # dyadic exponents


def macbeath_region(K: HPolytope, z, factor) -> MRegion:
    """z + factor [(K - z) cap (z - K)] as an H-polytope."""
    z = np.asarray(z, dtype=float)
    slack = K.b - K.A @ z
    if np.any(slack <= 0):
        raise BoundaryPoint("center must be interior")
    A = np.vstack([K.A, -K.A])
    az = K.A @ z
    b = np.concatenate([az + factor * slack, -az + factor * slack])
    P = HPolytope(A, b, name="macbeath")
    box = None
    axis = np.all(np.sum(np.abs(K.A) > 0, axis=1) == 1)
    if axis:
        lo, hi = P.bbox()
        box = (lo, hi)
    return MRegion(z, float(factor), P, box)


def dyadic_level(d, delta, T):
    """log_3(d! T / (d^d delta^d)), checked to be an integer."""
    x = math.log(math.factorial(d) * T / (d ** d * delta ** d), 3)
    L = round(x)
    if abs(x - L) > 1e-9:
        raise NonIntegerLevel(f"level {x} is not an integer")
    return int(L)


def k_max(delta):
    """Largest integer k with 3^k < 1/(3 delta)."""
    k = math.floor(math.log(1.0 / (3.0 * delta), 3))
    while 3.0 ** (k + 1) < 1.0 / (3.0 * delta):
        k += 1
    while 3.0 ** k >= 1.0 / (3.0 * delta):
        k -= 1
    return k


def dyadic_exponents(d, L, kmax):
    lo = L - (d - 1) * kmax
    out = []
    for ks in product(range(lo, kmax + 1), repeat=d - 1):
        last = L - sum(ks)
        if lo <= last <= kmax:
            out.append(tuple(ks) + (last,))
    return sorted(out)


def dyadic_net(d, delta, T, level=None) -> list:
    """M-regions M((3^k_1 delta, ..., 3^k_d delta), 1/2) of the corner at 0 of [0,1]^d.

    Exponents satisfy 3^{k_i} < 1/(3 delta) and sum k_i = level. ``delta``
    may be a Fraction; boxes are then exact.
    """
    L = dyadic_level(d, float(delta), float(T)) if level is None else int(level)
    km = k_max(float(delta))
    regions = []
    for ks in dyadic_exponents(d, L, km):
        c = [Fraction(3) ** k * Fraction(delta) for k in ks]
        lo = np.array([float(x / 2) for x in c])
        hi = np.array([float(3 * x / 2) for x in c])
        A = np.vstack([np.eye(d), -np.eye(d)])
        P = HPolytope(A, np.concatenate([hi, -lo]), name="dyadic")
        regions.append(MRegion(np.array([float(x) for x in c]), 0.5, P, (lo, hi), ks))
    return regions


def minimal_cap_cube_corner(z):
    """Tangent cap {x : sum x_i/z_i <= d} of a corner point: (unit normal, offset, volume)."""
    z = np.asarray(z, dtype=float)
    vol = float(v_cube_corner(z))
    g = 1.0 / z
    nrm = np.linalg.norm(g)
    return g / nrm, z.shape[0] / nrm, vol


# ---------------------------------------------------------------- exact volumes

def _simplex_in_cube(a):
    """Exact Vol{x in [0,1]^d : sum x_i/a_i <= 1} for positive rationals a."""
    d = len(a)
    inv = [1 / x for x in a]
    tot = Fraction(0)
    for r in range(d + 1):
        for S in combinations(range(d), r):
            rem = 1 - sum((inv[i] for i in S), Fraction(0))
            if rem > 0:
                tot += (-1) ** r * rem ** d
    prod_a = Fraction(1)
    for x in a:
        prod_a *= x
    return prod_a * tot / math.factorial(d)


def exact_region_volumes(center, d):
    """(Vol K'_i, Vol K_i, v(center)) for a dyadic center in the unit cube, exactly.

    K'_i is the M-box cut by the tangent hyperplane through its own center,
    which halves it by central symmetry. K_i is the cap of depth 6 times the
    minimal one, clipped to the cube.
    """
    c = [Fraction(x) for x in center]
    box = Fraction(1)
    for x in c:
        box *= x  # side 3x/2 - x/2 = x
    v = Fraction(d ** d, math.factorial(d)) * box
    kp = box / 2
    ki = _simplex_in_cube([6 * d * x for x in c])
    return kp, ki, v


@dataclass
class CapCoverReport:
    d: int
    s: Fraction
    delta: Fraction
    level: int
    rows: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    inclusion_checked: int = 0
    warnings: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


def _level_for(d, s, delta0=Fraction(1, 6)):
    # smallest integer level whose delta does not exceed delta0
    base = math.factorial(d) * float(s) / d ** d
    L = math.ceil(math.log(base / float(delta0) ** d, 3) - 1e-12)
    delta = (base / 3.0 ** L) ** (1.0 / d)
    return L, Fraction(delta)


def cap_cover_check(d=2, s=None, delta=Fraction(1, 6), level=None, n_check=1000, seed=0) -> CapCoverReport:
    """Volume and inclusion checks for the dyadic cap covering of [0,1]^d.

    Either give (delta, level), making s = d^d delta^d 3^level / d! exact, or
    give s and let the level and delta be chosen. By the symmetry of the cube
    the regions at every vertex are reflections of those at 0.
    """
    if level is None:
        if s is None:
            raise ValueError("need s or level")
        level, delta = _level_for(d, s)
    delta = Fraction(delta)
    s_exact = Fraction(d ** d, math.factorial(d)) * delta ** d * Fraction(3) ** level
    rep = CapCoverReport(d, s_exact, delta, int(level))
    s0 = Fraction(1, (2 * d) ** (2 * d))
    if s_exact > s0:
        msg = f"s = {float(s_exact):.3g} exceeds the covering threshold (2d)^(-2d) = {float(s0):.3g}"
        rep.warnings.append(msg)
        warnings.warn(msg)
    km = k_max(float(delta))
    lower_kp = s_exact / (6 * d) ** d
    upper_kp = s_exact / 2 ** d
    for ks in dyadic_exponents(d, level, km):
        center = [Fraction(3) ** k * delta for k in ks]
        kp, ki, v = exact_region_volumes(center, d)
        row = {"k": ks, "center": [float(x) for x in center], "vol_Kp": kp, "vol_Ki": ki, "v_center": v}
        rep.rows.append(row)
        if v != s_exact:
            rep.violations.append((ks, "center off K(v=s)"))
        if not (s_exact <= ki <= 6 ** d * s_exact):
            rep.violations.append((ks, "Vol K_i outside [s, 6^d s]"))
        if not (lower_kp <= kp <= upper_kp):
            rep.violations.append((ks, "Vol K'_i outside [(6d)^-d s, 2^-d s]"))
    if n_check:
        _check_inclusions(rep, n_check, seed)
    return rep


def _in_kprime(pts, center):
    c = np.asarray(center)
    inbox = np.all((pts >= c / 2) & (pts <= 1.5 * c), axis=1)
    return inbox & (np.sum(pts / c, axis=1) <= pts.shape[1])


def _in_kfull(pts, center):
    c = np.asarray(center)
    return np.sum(pts / c, axis=1) <= 6 * pts.shape[1]


def _check_inclusions(rep: CapCoverReport, n_check, seed):
    """Item 1 on samples: K'_i inside K(v <= s), and K(v <= s) near the corner inside the union of K_i."""
    rng = _as_rng(Seed(seed, 0))
    d = rep.d
    s = float(rep.s)
    c = corner_constant(d)
    for row in rep.rows:
        ctr = np.array(row["center"])
        pts = ctr / 2 + ctr * rng.random((4 * n_check, d))
        pts = pts[_in_kprime(pts, ctr)][:n_check]
        v = c * np.prod(pts, axis=1)
        bad = int(np.sum(v > s * (1 + 1e-12)))
        rep.inclusion_checked += len(pts)
        if bad:
            rep.violations.append((row["k"], f"{bad} sampled points of K'_i above v = s"))
    # points of K(v <= s) within the span of the net
    span = max(1.5 * r["center"][j] for r in rep.rows for j in range(d))
    span = min(span, 0.5)
    pts = span * rng.random((20 * n_check, d))
    pts = pts[c * np.prod(pts, axis=1) <= s][:n_check]
    covered = np.zeros(len(pts), bool)
    for row in rep.rows:
        covered |= _in_kfull(pts, np.array(row["center"]))
    rep.inclusion_checked += len(pts)
    if not covered.all():
        rep.violations.append((None, f"{int((~covered).sum())} sampled points of K(v <= s) uncovered"))


def region_rows_csv(rep: CapCoverReport, L_counts=None):
    head = ["k", "center", "vol_Kp", "vol_Ki", "L_i"]
    lines = [",".join(head)]
    for i, r in enumerate(rep.rows):
        L = "" if L_counts is None else str(L_counts[i])
        lines.append(",".join([
            '"' + " ".join(map(str, r["k"])) + '"',
            '"' + " ".join(repr(x) for x in r["center"]) + '"',
            repr(float(r["vol_Kp"])), repr(float(r["vol_Ki"])), L]))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- layers in M-regions

def _reflections(d):
    return [np.array(b, dtype=float) for b in product((0, 1), repeat=d)]


def layers_in_mregions(lam, n, seed, d=2, T=None, alpha_override=None, delta0=Fraction(1, 6)):
    """Layer counts L_i of the Poisson sample restricted to each K'_i of the unit cube.

    The net is taken at level T (from ``sandwich_params`` unless given) with
    delta adjusted so that the level is an integer; all 2^d corners are used.
    """
    from .floating_sandwich import sandwich_params
    from .polytope_model import cube
    if T is None:
        T = sandwich_params(lam, d, alpha_override).T
    L, delta = _level_for(d, T, delta0)
    km = k_max(float(delta))
    centers = [np.array([float(Fraction(3) ** k * delta) for k in ks]) for ks in dyadic_exponents(d, L, km)]
    X = sample_poisson(cube(d), lam, seed).coords
    counts = []
    for corner in _reflections(d):
        Y = np.abs(X - corner)  # reflect the corner to 0
        for ctr in centers:
            m = _in_kprime(Y, ctr)
            if not m.any():
                counts.append(0)
                continue
            sub = PointSet(X[m])
            counts.append(peel(sub).n_layers)
    counts = np.array(counts, dtype=np.int64)
    return {"T": T, "delta": float(delta), "level": L, "n_regions": len(counts),
            "L": counts, "min_L": int(counts.min()) if len(counts) else 0,
            "success": bool(len(counts) and counts.min() > n)}


# ---------------------------------------------------------------- convex position

def wilson(k, n, z=1.96):
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return (max(0.0, mid - half), min(1.0, mid + half))


def convex_position_prob(L: HPolytope, n, reps, seed, method="auto", batches=4):
    """Probability that n uniform points of L are in convex position.

    method "mc": plain frequency with a Wilson interval (d = 2 or 3).
    method "is": sequential importance sampling (d = 2): each new point is
    drawn uniformly from the region keeping the configuration convex, and the
    replication weight is the product of those region areas over Vol(L). The
    mean weight is an unbiased estimate of p(n, L).
    method "sis": the same moves run as ``batches`` resampled particle systems
    sharing ``reps`` particles; needed once n exceeds ~20.
    "auto" uses mc for n <= 8 and sis otherwise.
    """
    if n < 3:
        raise ValueError("n must be at least 3")
    d = L.dim
    rng = _as_rng(seed if not isinstance(seed, int) else Seed(seed, 0))
    if method == "auto":
        method = "mc" if (n <= 8 or d != 2) else "sis"
    if method == "mc":
        hits = 0
        done = 0
        chunk = 4096
        while done < reps:
            m = min(chunk, reps - done)
            pts = uniform_in(L, m * n, rng).reshape(m, n, d)
            if d == 2:
                hits += int(_kernels.convex_position_batch(pts).sum())
            else:
                from .geom_core import convex_hull
                for r in range(m):
                    h = convex_hull(PointSet(pts[r]), allow_degenerate=True)
                    hits += len(h.vertex_ids) == n
            done += m
        p = hits / reps
        return {"n": n, "method": "mc", "p": p, "reps": reps, "ci": wilson(hits, reps),
                "log_p": math.log(p) if p > 0 else -math.inf}
    if d != 2:
        raise ValueError("sis estimator is planar only")
    ring = np.ascontiguousarray(_ccw_ring(L))
    if method == "is":
        logw = sis_log_weights(ring, float(L.volume), int(n), rng.random((int(reps), int(n), 4)))
        mx = logw.max()
        w = np.exp(logw - mx)
        log_p = mx + math.log(w.mean())
        se = w.std(ddof=1) / math.sqrt(reps) / w.mean() if reps > 1 else math.inf
        return {"n": n, "method": "is", "p": math.exp(log_p), "log_p": log_p, "reps": reps,
                "log_ci": (log_p - 1.96 * se, log_p + 1.96 * se),
                "ess": float(w.sum() ** 2 / np.sum(w * w))}
    # particle version: `batches` independent systems of reps // batches particles
    B = max(1, min(batches, reps // 50))
    R = reps // B
    logs = np.array([smc_log_z(ring, float(L.volume), int(n), rng.random((R, int(n), 4)), rng.random(int(n)))
                     for _ in range(B)])
    mx = logs.max()
    log_p = float(mx + math.log(np.mean(np.exp(logs - mx))))
    half = float(1.96 * logs.std(ddof=1) / math.sqrt(B)) if B > 1 else math.inf
    return {"n": n, "method": "sis", "p": math.exp(log_p), "log_p": log_p, "reps": R * B,
            "log_ci": (log_p - half, log_p + half), "batch_log_p": logs.tolist()}


def _ccw_ring(L):
    v = L.vertices
    c = v.mean(axis=0)
    ang = np.arctan2(v[:, 1] - c[1], v[:, 0] - c[0])
    return v[np.argsort(ang)]


def exact_convex_position_log_p(n, body):
    """Exact log p(n) for a triangle or a parallelogram (planar oracle)."""
    lg = math.lgamma
    if body == "triangle":
        return n * math.log(2) + lg(3 * n - 2) - 3 * lg(n) - lg(2 * n + 1)
    if body in ("square", "parallelogram"):
        return 2 * (lg(2 * n - 1) - 2 * lg(n) - lg(n + 1))
    raise ValueError(body)
