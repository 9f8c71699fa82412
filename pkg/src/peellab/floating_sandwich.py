"""Cap-volume function near vertices, floating-body membership, sandwich
constants and the sandwiching event for the first peeling layers.

All t-type parameters (s, T, T*, and the ``t`` of ``floating_membership``)
are fractions of Vol(K): K is treated as rescaled to unit volume.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
import math

import numpy as np

from .errors import OutOfRegime, RegimeViolation, LayerMissing
from .polytope_model import corner_frames as _corner_frames

BELOW, ON, ABOVE = -1, 0, 1
_NAMES = {BELOW: "below", ON: "on", ABOVE: "above"}
ON_TOL = 1e-10


def corner_constant(d):
    """d^d / d!, the factor between prod z_i and the corner cap volume."""
    return d ** d / math.factorial(d)


def v_cube_corner(z):
    """Corner cap volume (d^d/d!) prod z_i for z in (0, 1/2]^d.

    This is the minimal cap volume exactly when every z_i <= 1/d (the tangent
    simplex then stays inside the cube); for d >= 3 and larger coordinates it
    overestimates, which is why ``corner_boxes`` uses sides min(1/2, L_j/d).
    """
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0) or np.any(z > 0.5):
        raise OutOfRegime("coordinates must lie in (0, 1/2]")
    d = z.shape[-1]
    return corner_constant(d) * np.prod(z, axis=-1)


@dataclass(frozen=True)
class FloatingParams:
    lam: float
    d: int
    s: float
    T: float
    T_star: float
    alpha: float
    alpha_is_formula: bool = True

    def as_dict(self):
        return asdict(self)


def alpha_formula(d):
    return 16 * 2.0 ** (-d) * (6 * d) ** (2 * d) * (4 * d * d + d - 1)


def sandwich_params(lam, d, alpha_override=None) -> FloatingParams:
    """s = 1/(lam log^{4d^2+d-1} lam), T = alpha loglog(lam)/lam, T* = d 6^d T."""
    if not lam > math.e ** math.e:
        raise ValueError("lambda must exceed e^e")
    L = math.log(lam)
    s = 1.0 / (lam * L ** (4 * d * d + d - 1))
    alpha = alpha_formula(d) if alpha_override is None else float(alpha_override)
    T = alpha * math.log(L) / lam
    return FloatingParams(float(lam), int(d), s, T, d * 6 ** d * T, alpha, alpha_override is None)


def corner_boxes(frames):
    """Per-frame corner box sides min(1/2, L_j/d) in mapped coordinates."""
    out = []
    for fr in frames:
        d = len(fr.edge_lengths)
        out.append(np.minimum(0.5, np.asarray(fr.edge_lengths) / d))
    return out


def corner_v(K, pts, frames=None):
    """Cap volume v(z) (absolute units) via the corner frames; nan outside every box.

    Inside the box of a frame the tangent simplex through z stays inside K, so
    the corner formula is the exact minimal cap; the smallest value over the
    frames whose box contains z is returned.
    """
    frames = _corner_frames(K) if frames is None else frames
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    d = pts.shape[1]
    c = corner_constant(d)
    best = np.full(len(pts), np.nan)
    for fr, box in zip(frames, corner_boxes(frames)):
        y = fr.map(pts)
        y = np.where(np.abs(y) < 1e-14, 0.0, y)
        inb = np.all((y >= 0) & (y <= box * (1 + 1e-12)), axis=1)
        if inb.any():
            v = c * np.prod(y[inb], axis=1)
            cur = best[inb]
            best[inb] = np.where(np.isnan(cur) | (v < cur), v, cur)
    return best


def classify(K, pts, t, frames=None, raise_outside=True):
    """Array of BELOW/ON/ABOVE codes of pts against K(v >= t Vol(K))."""
    v = corner_v(K, pts, frames) / K.volume
    if raise_outside and np.any(np.isnan(v)):
        raise RegimeViolation("point outside every corner box")
    out = np.where(v > t + ON_TOL, ABOVE, np.where(v < t - ON_TOL, BELOW, ON))
    return out, v


def floating_membership(K, z, t, frames=None) -> str:
    """'above', 'below' or 'on' for one point z of K."""
    codes, _ = classify(K, np.atleast_2d(z), t, frames)
    return _NAMES[int(codes[0])]


def sandwich_event(pr, K, params: FloatingParams, n, frames=None) -> dict:
    """Sandwich check for layers 1..n of a peeling.

    shell: every point labelled <= n has s <= v <= T*.
    deep: every point with v >= T* has label > n (checked on points; points
    outside all corner boxes are deep by construction and are not mapped).
    """
    if pr.n_layers < n and np.any(pr.labels == 0):
        raise LayerMissing(f"layer {n} not computed")
    frames = _corner_frames(K) if frames is None else frames
    X = pr.points.coords
    lab = pr.labels
    outer = (lab >= 1) & (lab <= n)
    _, v_outer = classify(K, X[outer], 0.0, frames)
    shell_ok = bool(np.all((v_outer >= params.s - ON_TOL) & (v_outer <= params.T_star + ON_TOL)))
    v_all = corner_v(K, X, frames) / K.volume
    known = ~np.isnan(v_all)
    deep = known & (v_all >= params.T_star)
    deep_ok = bool(np.all((lab[deep] == 0) | (lab[deep] > n)))
    shell_count = int(np.sum(known & (v_all >= params.s) & (v_all <= params.T_star)))
    return {"lambda": params.lam, "n": int(n), "params": params.as_dict(),
            "event": shell_ok and deep_ok, "shell_inclusion": shell_ok,
            "deep_inclusion": deep_ok, "deep_inclusion_checked": True,
            "shell_point_count": shell_count}
