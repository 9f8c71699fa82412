"""Monte Carlo orchestration: replications, summaries, CLT and exponent
diagnostics, and the two-way estimate of the vertex-count limit constant.

Replication r at grid index i draws from stream i * 1_000_000 + r of the
master seed, so every replication is reproducible on its own and results
do not depend on how work is split across processes. Aggregation always
runs over rows sorted by (lambda index, replication).
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
import io
import csv
import logging
import math
import os
import time

import numpy as np

from .errors import InsufficientReplications
from .peeling import peel, planar_stats, layer_stats
from .polytope_model import HPolytope, builtin, from_json
from .sampling import LimitWindow, Seed, sample_limit_process, sample_poisson

log = logging.getLogger(__name__)

STREAM_STRIDE = 1_000_000
INTEGRAL_STREAM = 900_000_000
CSV_COLUMNS = ["lambda", "rep", "n", "k", "N", "V", "total_layers", "sandwich_event", "runtime_ms"]


@dataclass
class ExperimentConfig:
    dim: int = 2
    lambda_grid: list = field(default_factory=lambda: [1000.0])
    n: list = field(default_factory=lambda: [1])
    k: list = field(default_factory=lambda: [0])
    reps: int = 10
    seed: int = 0
    polytope: object = "cube"  # built-in name, or {"dim":..., "halfspaces": [...]}
    polytope_param: float | None = None
    alpha_override: float | None = None
    sandwich: bool = False
    total_layers: bool = True
    timing: bool = False
    window: dict = field(default_factory=lambda: {"radius": 6.0, "h_lo": -6.0, "h_hi": 3.0, "step": 0.25, "floor": 4.0})
    integral_reps: int = 1000
    workers: int | None = None

    def polytope_obj(self) -> HPolytope:
        if isinstance(self.polytope, dict):
            return from_json(self.polytope)
        return builtin(self.polytope, self.dim, self.polytope_param)

    def as_dict(self):
        return asdict(self)


def default_workers():
    env = os.environ.get("PEELLAB_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# ---------------------------------------------------------------- replications

def _faces_from_f0(f0):
    return f0 if f0 >= 3 else (1 if f0 == 2 else 0)


def replicate(cfg: ExperimentConfig, K: HPolytope, lam_idx, lam, rep):
    """Rows (dicts) of one replication."""
    t0 = time.perf_counter()
    ps = sample_poisson(K, lam, Seed(cfg.seed, lam_idx * STREAM_STRIDE + rep))
    nmax = max(cfg.n)
    volK = K.volume
    N, V, missing = {}, {}, {}
    total = None
    if cfg.dim == 2:
        f0, defect, total = planar_stats(ps.coords, nmax, volK, full=cfg.total_layers)
        for n in cfg.n:
            missing[n] = f0[n - 1] == 0
            V[n] = float(defect[n - 1])
            for k in cfg.k:
                N[n, k] = int(f0[n - 1]) if k == 0 else _faces_from_f0(int(f0[n - 1]))
        res = peel(ps, nmax) if cfg.sandwich else None
    else:
        res = peel(ps, None if cfg.total_layers else nmax)
        total = res.n_layers if cfg.total_layers else None
        for n in cfg.n:
            if n <= len(res.layers):
                st = layer_stats(res, K, n)
                missing[n] = False
                V[n] = st.defect_volume
                for k in cfg.k:
                    N[n, k] = int(st.f[k]) if k < len(st.f) else 0
            else:
                missing[n] = True
                V[n] = volK
                for k in cfg.k:
                    N[n, k] = 0
    ev = {}
    if cfg.sandwich:
        from .floating_sandwich import sandwich_event, sandwich_params
        params = sandwich_params(lam, cfg.dim, cfg.alpha_override)
        for n in cfg.n:
            try:
                ev[n] = sandwich_event(res, K, params, n)["event"]
            except Exception as exc:  # regime problems are reported, not fatal
                log.warning("sandwich check failed at lambda=%g rep=%d: %s", lam, rep, exc)
                ev[n] = None
    ms = (time.perf_counter() - t0) * 1e3 if cfg.timing else None
    rows = []
    for n in cfg.n:
        for k in cfg.k:
            rows.append({"lambda": lam, "rep": rep, "n": n, "k": k, "N": N[n, k], "V": V[n],
                         "total_layers": total, "sandwich_event": ev.get(n),
                         "runtime_ms": ms, "missing": bool(missing[n])})
    return rows


def _task(args):
    cfg, lam_idx, lam, reps = args
    K = cfg.polytope_obj()
    out = []
    for rep in reps:
        try:
            out.append((lam_idx, rep, replicate(cfg, K, lam_idx, lam, rep), None))
        except Exception as exc:
            out.append((lam_idx, rep, None, repr(exc)))
    return out


def run_replications(cfg: ExperimentConfig, workers=None):
    """All replication rows, sorted by (lambda index, rep), plus failures."""
    workers = workers or cfg.workers or default_workers()
    chunk = max(1, min(50, cfg.reps // max(1, 4 * workers)))
    tasks = []
    for i, lam in enumerate(cfg.lambda_grid):
        for a in range(0, cfg.reps, chunk):
            tasks.append((cfg, i, float(lam), list(range(a, min(cfg.reps, a + chunk)))))
    results = []
    if workers == 1:
        for t in tasks:
            results.extend(_task(t))
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            for part in ex.map(_task, tasks):
                results.extend(part)
    results.sort(key=lambda r: (r[0], r[1]))
    rows, failures = [], []
    for lam_idx, rep, rr, err in results:
        if err is not None:
            failures.append({"lambda": cfg.lambda_grid[lam_idx], "rep": rep, "error": err})
            log.warning("replication failed: lambda=%g rep=%d: %s", cfg.lambda_grid[lam_idx], rep, err)
        else:
            rows.extend(rr)
    return rows, failures


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


# ---------------------------------------------------------------- summaries

def ks_normal(x):
    """Kolmogorov-Smirnov distance of the standardised sample x from N(0, 1)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    sd = x.std(ddof=1)
    if n < 2 or sd == 0:
        return 1.0
    z = np.sort((x - x.mean()) / sd)
    cdf = 0.5 * (1.0 + np.vectorize(math.erf)(z / math.sqrt(2.0)))
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


def clt_diagnostic(samples, min_reps=200):
    x = np.asarray(samples, dtype=float)
    if len(x) < min_reps:
        raise InsufficientReplications(f"{len(x)} samples, need {min_reps}")
    z = np.sort((x - x.mean()) / x.std(ddof=1)) if x.std() > 0 else np.zeros(len(x))
    return {"ks": ks_normal(x), "n": len(x), "z": z.tolist(),
            "ecdf": (np.arange(1, len(x) + 1) / len(x)).tolist()}


def _moments(x):
    x = np.asarray(x, dtype=float)
    m = len(x)
    mean = float(x.mean()) if m else float("nan")
    var = float(x.var(ddof=1)) if m > 1 else 0.0
    return {"mean": mean, "var": var, "se": math.sqrt(var / m) if m > 1 else float("nan"), "count": m}


def fit_power_law(xs, ys):
    """Least-squares slope of log y against log x."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def summarize(cfg: ExperimentConfig, rows, failures=()):
    d = cfg.dim
    out = {"config": cfg.as_dict(), "failures": list(failures), "stats": []}
    for lam in cfg.lambda_grid:
        lg = math.log(lam) ** (d - 1)
        for n in cfg.n:
            for k in cfg.k:
                sel = [r for r in rows if r["lambda"] == lam and r["n"] == n and r["k"] == k]
                if not sel:
                    continue
                N = [r["N"] for r in sel]
                V = [r["V"] for r in sel]
                st = {"lambda": lam, "n": n, "k": k, "N": _moments(N), "V": _moments(V),
                      "missing": int(sum(r["missing"] for r in sel))}
                st["N"]["ratio"] = st["N"]["mean"] / lg
                st["N"]["var_ratio"] = st["N"]["var"] / lg
                st["V"]["ratio"] = st["V"]["mean"] * lam / lg
                st["V"]["var_ratio"] = st["V"]["var"] * lam * lam / lg
                st["N"]["ks"] = ks_normal(N) if len(N) >= 200 else None
                st["V"]["ks"] = ks_normal(V) if len(V) >= 200 else None
                if cfg.total_layers:
                    st["total_layers"] = _moments([r["total_layers"] for r in sel])
                if cfg.sandwich:
                    ev = [r["sandwich_event"] for r in sel if r["sandwich_event"] is not None]
                    st["sandwich_frequency"] = float(np.mean(ev)) if ev else None
                out["stats"].append(st)
    slopes = {}
    for n in cfg.n:
        for k in cfg.k:
            pts = [(s["lambda"], s["N"]["mean"]) for s in out["stats"] if s["n"] == n and s["k"] == k]
            if len(pts) >= 2:
                L = np.log([p[0] for p in pts]) ** (d - 1)
                slopes[f"N_{n}_{k}_vs_log"] = float(np.polyfit(L, [p[1] for p in pts], 1)[0])
    if cfg.total_layers and len(cfg.lambda_grid) >= 2:
        means = [s["total_layers"]["mean"] for s in out["stats"] if s["n"] == cfg.n[0] and s["k"] == cfg.k[0]]
        slopes["total_layers_exponent"] = fit_power_law(cfg.lambda_grid, means)
    out["slopes"] = slopes
    return out


def run_experiment(cfg: ExperimentConfig, workers=None):
    """Run all replications; returns (rows, summary)."""
    rows, failures = run_replications(cfg, workers)
    return rows, summarize(cfg, rows, failures)


def layer_count_exponent(cfg: ExperimentConfig, workers=None):
    """Fitted exponent of E[total layers] against lambda."""
    if len(cfg.lambda_grid) < 4:
        raise ValueError("need at least 4 lambda values")
    c = ExperimentConfig(**{**cfg.as_dict(), "n": [1], "k": [0], "total_layers": True, "sandwich": False})
    rows, failures = run_replications(c, workers)
    means = []
    for lam in c.lambda_grid:
        means.append(float(np.mean([r["total_layers"] for r in rows if r["lambda"] == lam])))
    return {"exponent": fit_power_law(c.lambda_grid, means), "lambda": list(c.lambda_grid),
            "mean_layers": means, "target": 2.0 / (c.dim + 1)}


# ---------------------------------------------------------------- limit constant

def simplex_plane_volume(d):
    """(d-1)-volume of {x_i <= 1, sum x_i = 0}: a regular simplex of edge d sqrt 2."""
    a = d * math.sqrt(2.0)
    k = d - 1
    return a ** k / math.factorial(k) * math.sqrt(d / 2.0 ** k)


@dataclass
class LimitConstantEstimate:
    n: int
    k: object
    direct_ratio: float
    direct_se: float
    integral_estimate: float | None
    integral_se: float | None
    simplex_volume: float
    prefactor: float
    h_integral: float | None
    h_grid: list = field(default_factory=list)
    integrand: list = field(default_factory=list)

    @property
    def relative_gap(self):
        if self.integral_estimate is None:
            return None
        return abs(self.direct_ratio - self.integral_estimate) / self.integral_estimate


def _score_at_axis(Y, h_grid, n, k):
    from .rescaled_conelike import cone_peel, layer1_vertex_at_axis, score
    if Y.shape[1] == 2 and n == 1 and k == 0:
        return layer1_vertex_at_axis(Y, h_grid).astype(float)
    out = np.zeros(len(h_grid))
    d = Y.shape[1]
    for j, h in enumerate(h_grid):
        w = np.zeros(d)
        w[-1] = h
        res = cone_peel(np.vstack([Y, w]), max_layers=n)
        out[j] = score(res, len(Y), n, k)
    return out


def integral_pipeline(d, n, k, win_cfg, reps, seed):
    """Per-replication h-integrals of E[score((0, h), P)] e^{d h} (trapezoid rule)."""
    step = win_cfg.get("step", 0.25)
    h_lo, h_hi = win_cfg.get("h_lo", -6.0), win_cfg.get("h_hi", 3.0)
    h_grid = np.round(np.arange(h_lo, h_hi + step / 2, step), 12)
    win = LimitWindow(win_cfg.get("radius", 6.0), h_lo - win_cfg.get("floor", 4.0), h_hi, d)
    acc = np.zeros(len(h_grid))
    per_rep = np.zeros(reps)
    wts = np.exp(d * h_grid)
    for r in range(reps):
        Y = sample_limit_process(win, Seed(seed, INTEGRAL_STREAM + r)).coords
        s = _score_at_axis(Y, h_grid, n, k)
        acc += s
        per_rep[r] = np.trapezoid(s * wts, h_grid)
    mean_score = acc / reps
    return h_grid, mean_score * wts, per_rep


def limit_constant_two_ways(n, k, cfg: ExperimentConfig, workers=None) -> LimitConstantEstimate:
    """Direct ratio at the largest lambda against the rescaled-integral formula.

    k may be an integer (vertex/face counts) or "V" for the defect volume,
    for which only the direct ratio is computed.
    """
    d = cfg.dim
    lam = float(cfg.lambda_grid[-1])
    K = cfg.polytope_obj()
    f0 = len(K.vertices)
    vol = k == "V"
    c = ExperimentConfig(**{**cfg.as_dict(), "lambda_grid": [lam], "n": [n], "k": [0 if vol else k],
                            "total_layers": False, "sandwich": False})
    rows, _ = run_replications(c, workers)
    lg = math.log(lam) ** (d - 1)
    vals = np.array([(r["V"] * lam if vol else r["N"]) / lg / f0 for r in rows])
    direct = float(vals.mean())
    direct_se = float(vals.std(ddof=1) / math.sqrt(len(vals)))
    S = simplex_plane_volume(d)
    pref = d ** (-d + 1.5) * S
    if vol:
        return LimitConstantEstimate(n, k, direct, direct_se, None, None, S, pref, None)
    h_grid, integrand, per_rep = integral_pipeline(d, n, k, cfg.window, cfg.integral_reps, cfg.seed)
    hint = float(per_rep.mean())
    return LimitConstantEstimate(n, k, direct, direct_se, pref * hint,
                                 pref * float(per_rep.std(ddof=1) / math.sqrt(len(per_rep))),
                                 S, pref, hint, h_grid.tolist(), integrand.tolist())


def quadrature_normalization(win: LimitWindow, step, reps, seed):
    """Integral of P(the point (0, h) gets some label) sqrt(d) Vol(B) e^{d h} over the
    window heights, to compare with the window's expected count."""
    from .rescaled_conelike import cone_peel
    h_grid = np.linspace(win.h_min, win.h_max, int(round((win.h_max - win.h_min) / step)) + 1)
    acc = np.zeros(len(h_grid))
    for r in range(reps):
        Y = sample_limit_process(win, Seed(seed, r)).coords
        for j, h in enumerate(h_grid):
            w = np.zeros(win.dim)
            w[-1] = h
            res = cone_peel(np.vstack([Y, w]))
            acc[j] += res.labels[-1] >= 1
    p = acc / reps
    integral = math.sqrt(win.dim) * win.base_volume * np.trapezoid(p * np.exp(win.dim * h_grid), h_grid)
    return float(integral), win.expected_count()


# ---------------------------------------------------------------- conjecture probe

def conjecture_cs_probe(lambda_grid, t, cfg: ExperimentConfig):
    """Rows of lam^{-(d-1)/(d+1)} N_{n(lam,t),0,lam} with n = floor(t lam^{2/(d+1)})."""
    d = cfg.dim
    K = cfg.polytope_obj()
    rows = []
    for i, lam in enumerate(lambda_grid):
        n = int(math.floor(t * lam ** (2.0 / (d + 1))))
        if n < 1:
            raise ValueError(f"n(lambda, t) = {n} < 1 at lambda = {lam}")
        for rep in range(cfg.reps):
            ps = sample_poisson(K, lam, Seed(cfg.seed, i * STREAM_STRIDE + rep))
            if d == 2:
                f0, _, _ = planar_stats(ps.coords, n, K.volume, full=False)
                N = int(f0[n - 1])
            else:
                res = peel(ps, n)
                N = layer_stats(res, K, n).f[0] if n <= len(res.layers) else 0
            rows.append({"lambda": lam, "rep": rep, "n": n,
                         "value": lam ** (-(d - 1) / (d + 1)) * N})
    med = {lam: float(np.median([r["value"] for r in rows if r["lambda"] == lam])) for lam in lambda_grid}
    return rows, med
