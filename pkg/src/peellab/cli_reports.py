"""Command-line entry point, config loading, run manifests and SVG plots.

Exit codes: 0 success, 1 usage or config error, 2 runtime error.
"""
from __future__ import annotations

import argparse
from dataclasses import dataclass, field, asdict
import datetime as _dt
from fractions import Fraction
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import PeelLabError, SchemaError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


# ---------------------------------------------------------------- config

_DEFAULT_WINDOW = {"radius": 6.0, "h_lo": -6.0, "h_hi": 3.0, "step": 0.25, "floor": 4.0}
_KEYS = {"dim", "lambda_grid", "n", "k", "reps", "seed", "polytope", "polytope_param", "alpha_override",
         "sandwich", "total_layers", "timing", "window", "integral_reps", "workers"}


def _int(obj, key, lo=None):
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise SchemaError(key, "must be an integer")
    if lo is not None and v < lo:
        raise SchemaError(key, f"must be >= {lo}")
    return v


def _int_list(obj, key, lo):
    v = obj[key]
    vals = v if isinstance(v, list) else [v]
    if not vals:
        raise SchemaError(key, "must not be empty")
    for i, x in enumerate(vals):
        if isinstance(x, bool) or not isinstance(x, int) or x < lo:
            raise SchemaError(f"{key}[{i}]" if isinstance(v, list) else key, f"must be an integer >= {lo}")
    return list(vals)


def validate_config(raw: dict):
    """Validated ExperimentConfig from a parsed JSON object."""
    from .estimators import ExperimentConfig
    if not isinstance(raw, dict):
        raise SchemaError("<root>", "config must be a JSON object")
    for key in raw:
        if key not in _KEYS:
            raise SchemaError(key, "unknown key")
    for key in ("dim", "lambda_grid", "n", "reps"):
        if key not in raw:
            raise SchemaError(key, "missing required key")
    out = {"dim": _int(raw, "dim", 2), "reps": _int(raw, "reps", 2), "n": _int_list(raw, "n", 1)}
    lg = raw["lambda_grid"]
    if not isinstance(lg, list) or not lg:
        raise SchemaError("lambda_grid", "must be a nonempty list")
    for i, x in enumerate(lg):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not x > 0:
            raise SchemaError(f"lambda_grid[{i}]", "must be a positive number")
    if any(b <= a for a, b in zip(lg, lg[1:])):
        raise SchemaError("lambda_grid", "must be increasing")
    out["lambda_grid"] = [float(x) for x in lg]
    out["k"] = _int_list(raw, "k", 0) if "k" in raw else [0]
    if any(k >= out["dim"] for k in out["k"]):
        raise SchemaError("k", "face dimension must be below dim")
    out["seed"] = _int(raw, "seed", 0) if "seed" in raw else 0
    if "polytope" in raw:
        p = raw["polytope"]
        if not isinstance(p, (str, dict)):
            raise SchemaError("polytope", "must be a name or an H-representation object")
        out["polytope"] = p
    if "polytope_param" in raw:
        if not isinstance(raw["polytope_param"], (int, float)):
            raise SchemaError("polytope_param", "must be a number")
        out["polytope_param"] = float(raw["polytope_param"])
    if raw.get("alpha_override") is not None:
        a = raw["alpha_override"]
        if isinstance(a, bool) or not isinstance(a, (int, float)) or not a > 0:
            raise SchemaError("alpha_override", "must be a positive number")
        out["alpha_override"] = float(a)
    for key in ("sandwich", "total_layers", "timing"):
        if key in raw:
            if not isinstance(raw[key], bool):
                raise SchemaError(key, "must be true or false")
            out[key] = raw[key]
    win = dict(_DEFAULT_WINDOW)
    if "window" in raw:
        if not isinstance(raw["window"], dict):
            raise SchemaError("window", "must be an object")
        for key, val in raw["window"].items():
            if key not in _DEFAULT_WINDOW:
                raise SchemaError(f"window.{key}", "unknown key")
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise SchemaError(f"window.{key}", "must be a number")
            win[key] = float(val)
        if win["radius"] <= 0 or win["step"] <= 0 or win["h_lo"] >= win["h_hi"]:
            raise SchemaError("window", "need radius > 0, step > 0, h_lo < h_hi")
    out["window"] = win
    if "integral_reps" in raw:
        out["integral_reps"] = _int(raw, "integral_reps", 2)
    if raw.get("workers") is not None:
        out["workers"] = _int(raw, "workers", 1)
    cfg = ExperimentConfig(**out)
    try:
        cfg.polytope_obj()
    except (ValueError, KeyError, TypeError) as exc:
        raise SchemaError("polytope", str(exc)) from None
    return cfg


def load_config(path):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError("<root>", f"invalid JSON: {exc}") from None
    return validate_config(raw)


def config_hash(cfg) -> str:
    d = cfg.as_dict() if hasattr(cfg, "as_dict") else cfg
    d = {k: v for k, v in d.items() if k != "workers"}
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class RunManifest:
    tool_version: str
    config_hash: str
    seed: int
    start: str
    end: str = ""
    outputs: list = field(default_factory=list)
    config: dict | None = None

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True, default=str)


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------- SVG

def svg_line_plot(series, title="", xlabel="", ylabel="", xlog=True, ylog=False, width=560, height=380):
    """Minimal SVG line/scatter plot. series: {name: (xs, ys)}."""
    pad_l, pad_r, pad_t, pad_b = 70, 140, 36, 50
    tx = (lambda x: math.log10(x)) if xlog else (lambda x: x)
    ty = (lambda y: math.log10(y)) if ylog else (lambda y: y)
    pts = {k: [(tx(x), ty(y)) for x, y in zip(*v) if y is not None and (not ylog or y > 0)]
           for k, v in series.items()}
    allx = [p[0] for v in pts.values() for p in v] or [0, 1]
    ally = [p[1] for v in pts.values() for p in v] or [0, 1]
    x0, x1 = min(allx), max(allx)
    y0, y1 = min(ally), max(ally)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    W, H = width - pad_l - pad_r, height - pad_t - pad_b
    sx = lambda x: pad_l + (x - x0) / (x1 - x0) * W
    sy = lambda y: pad_t + H - (y - y0) / (y1 - y0) * H
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="14">{title}</text>',
           f'<line x1="{pad_l}" y1="{pad_t + H}" x2="{pad_l + W}" y2="{pad_t + H}" stroke="black"/>',
           f'<line x1="{pad_l}" y1="{pad_t}" x2="{pad_l}" y2="{pad_t + H}" stroke="black"/>']
    for i in range(5):
        xv = x0 + (x1 - x0) * i / 4
        yv = y0 + (y1 - y0) * i / 4
        xl = f"1e{xv:.2g}" if xlog else f"{xv:.3g}"
        yl = f"1e{yv:.2g}" if ylog else f"{yv:.3g}"
        out.append(f'<text x="{sx(xv):.1f}" y="{pad_t + H + 16}" text-anchor="middle">{xl}</text>')
        out.append(f'<text x="{pad_l - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yl}</text>')
    out.append(f'<text x="{pad_l + W / 2}" y="{height - 10}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{pad_t + H / 2}" transform="rotate(-90 16 {pad_t + H / 2})" text-anchor="middle">{ylabel}</text>')
    for i, (name, p) in enumerate(pts.items()):
        c = colors[i % len(colors)]
        if len(p) > 1:
            path = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in p)
            out.append(f'<polyline points="{path}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        for x, y in p:
            out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="{c}"/>')
        out.append(f'<text x="{pad_l + W + 10}" y="{pad_t + 14 + 16 * i}" fill="{c}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def report(summary: dict, outdir):
    """Write ratio and KS plots plus a markdown table; returns the files written."""
    os.makedirs(outdir, exist_ok=True)
    stats = summary.get("stats", [])
    ratio, ks = {}, {}
    for st in stats:
        key = f"n={st['n']},k={st['k']}"
        ratio.setdefault(key, ([], []))
        ratio[key][0].append(st["lambda"])
        ratio[key][1].append(st["N"]["ratio"])
        if st["N"].get("ks") is not None:
            ks.setdefault(key, ([], []))
            ks[key][0].append(st["lambda"])
            ks[key][1].append(st["N"]["ks"])
    files = []
    p = os.path.join(outdir, "ratio.svg")
    with open(p, "w") as fh:
        fh.write(svg_line_plot(ratio, "mean N / log^(d-1) lambda", "lambda", "ratio"))
    files.append(p)
    p = os.path.join(outdir, "ks.svg")
    with open(p, "w") as fh:
        fh.write(svg_line_plot(ks, "KS distance to N(0,1)", "lambda", "KS"))
    files.append(p)
    lines = ["| lambda | n | k | mean N | var N | ratio | KS |", "|---|---|---|---|---|---|---|"]
    for st in stats:
        k = st["N"].get("ks")
        lines.append(f"| {st['lambda']:g} | {st['n']} | {st['k']} | {st['N']['mean']:.4g} | "
                     f"{st['N']['var']:.4g} | {st['N']['ratio']:.4g} | {'' if k is None else f'{k:.4f}'} |")
    p = os.path.join(outdir, "report.md")
    with open(p, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    files.append(p)
    return files


# ---------------------------------------------------------------- commands

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _polytope(args):
    from .polytope_model import builtin, from_json
    if args.polytope.endswith(".json"):
        return from_json(args.polytope)
    return builtin(args.polytope, args.dim, args.param)


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_peel(args):
    from .peeling import peel
    from .sampling import Seed, sample_poisson
    K = _polytope(args)
    ps = sample_poisson(K, args.lam, Seed(args.seed, args.stream))
    res = peel(ps, args.max_layers)
    lines = [",".join(["id"] + [f"x{j + 1}" for j in range(ps.dim)] + ["layer"])]
    for i, c, l in zip(ps.ids, ps.coords, res.labels):
        lines.append(",".join([str(int(i))] + [repr(float(t)) for t in c] + [str(int(l))]))
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_sample(args):
    from .sampling import Seed, sample_binomial, sample_poisson, write_csv, save_npz
    K = _polytope(args)
    seed = Seed(args.seed, args.stream)
    ps = sample_binomial(K, args.binomial, seed) if args.binomial is not None else sample_poisson(K, args.lam, seed)
    if args.npz:
        save_npz(ps, args.npz)
    if args.out or not args.npz:
        if args.out in (None, "-"):
            import tempfile
            with tempfile.NamedTemporaryFile("r+", suffix=".csv") as tmp:
                write_csv(ps, tmp.name)
                sys.stdout.write(open(tmp.name).read())
        else:
            write_csv(ps, args.out)
    return EXIT_OK


def cmd_estimate(args):
    from .estimators import rows_to_csv, run_experiment
    cfg = load_config(args.config)
    h = config_hash(cfg)
    man = RunManifest(__version__, h, cfg.seed, _now(), config=cfg.as_dict())
    os.makedirs(args.out, exist_ok=True)
    rows, summary = run_experiment(cfg, args.workers)
    summary["config_hash"] = h
    csv_path = os.path.join(args.out, "results.csv")
    with open(csv_path, "w", newline="") as fh:
        fh.write(rows_to_csv(rows))
    js = os.path.join(args.out, "summary.json")
    with open(js, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=float)
    man.outputs = [csv_path, js]
    man.end = _now()
    man.write(os.path.join(args.out, "manifest.json"))
    return EXIT_OK


def cmd_sandwich(args):
    from .floating_sandwich import sandwich_event, sandwich_params
    from .peeling import peel
    from .polytope_model import cube
    from .sampling import Seed, sample_poisson
    K = cube(args.dim)
    params = sandwich_params(args.lam, args.dim, args.alpha_override)
    ps = sample_poisson(K, args.lam, Seed(args.seed, args.stream))
    res = peel(ps, args.n)
    out = sandwich_event(res, K, params, args.n)
    _write(json.dumps(out, indent=2, default=float) + "\n", args.out)
    return EXIT_OK


def cmd_capcover(args):
    from .macbeath_caps import cap_cover_check, layers_in_mregions, region_rows_csv
    kw = {"d": args.dim, "n_check": args.checks, "seed": args.seed}
    if args.level is not None:
        rep = cap_cover_check(delta=Fraction(args.delta), level=args.level, **kw)
    else:
        rep = cap_cover_check(s=args.s, **kw)
    counts = None
    if args.lam:
        res = layers_in_mregions(args.lam, args.n, args.seed, d=args.dim, T=float(rep.s))
        counts = res["L"][:len(rep.rows)].tolist()
    _write(region_rows_csv(rep, counts), args.out)
    if rep.violations:
        sys.stderr.write(f"{len(rep.violations)} violations: {rep.violations}\n")
    return EXIT_OK


def cmd_rescaled(args):
    from .rescaled_conelike import cone_peel
    from .sampling import LimitWindow, Seed, sample_limit_process
    win = LimitWindow(args.radius, args.h_min, args.h_max, args.dim)
    lines = []
    for r in range(args.reps):
        Y = sample_limit_process(win, Seed(args.seed, r)).coords
        res = cone_peel(Y, max_layers=args.max_layers)
        maxh = []
        for n in range(1, res.n_layers + 1):
            sel = res.labels == n
            maxh.append(float(Y[sel, -1].max()))
        lines.append(json.dumps({"rep": r, "window": {"radius": win.radius, "h_min": win.h_min, "h_max": win.h_max},
                                 "labels": res.labels.tolist(), "face_counts": [list(c) for c in res.face_counts],
                                 "max_heights": maxh}))
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_convexpos(args):
    from .macbeath_caps import convex_position_prob
    from .polytope_model import cube, triangle
    from .sampling import Seed
    L = triangle() if args.body == "triangle" else cube(2)
    res = convex_position_prob(L, args.n, args.reps, Seed(args.seed, 0), args.method)
    _write(json.dumps(res, indent=2, default=float) + "\n", args.out)
    return EXIT_OK


def cmd_report(args):
    with open(args.inp) as fh:
        summary = json.load(fh)
    files = report(summary, args.out)
    cfg = summary.get("config") or {}
    man = RunManifest(__version__, summary.get("config_hash", ""), cfg.get("seed", 0), _now(),
                      end=_now(), outputs=files, config=cfg or None)
    man.write(os.path.join(args.out, "manifest.json"))
    return EXIT_OK


def build_parser():
    p = _Parser(prog="peellab", description="Convex hull peeling of Poisson samples in polytopes.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def poly(sp):
        sp.add_argument("--polytope", default="cube", help="built-in name or a .json H-representation")
        sp.add_argument("--dim", type=int, default=2)
        sp.add_argument("--param", type=float, default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--stream", type=int, default=0)
        sp.add_argument("--out", default=None)

    sp = sub.add_parser("peel", help="sample one configuration and write its layer labels")
    poly(sp)
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--max-layers", type=int, default=None)
    sp.set_defaults(fn=cmd_peel)

    sp = sub.add_parser("sample", help="write a Poisson or binomial sample")
    poly(sp)
    sp.add_argument("--lambda", dest="lam", type=float, default=1000.0)
    sp.add_argument("--binomial", type=int, default=None)
    sp.add_argument("--npz", default=None)
    sp.set_defaults(fn=cmd_sample)

    sp = sub.add_parser("estimate", help="run an experiment from a JSON config")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", default="out")
    sp.add_argument("--workers", type=int, default=None)
    sp.set_defaults(fn=cmd_estimate)

    sp = sub.add_parser("sandwich-check", help="sandwich event for one sample in the unit cube")
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--n", type=int, default=1)
    sp.add_argument("--alpha-override", type=float, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--stream", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_sandwich)

    sp = sub.add_parser("capcover", help="dyadic cap covering checks (unit cube)")
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--s", type=float, default=None)
    sp.add_argument("--delta", default="1/6")
    sp.add_argument("--level", type=int, default=None)
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument("--n", type=int, default=2)
    sp.add_argument("--checks", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_capcover)

    sp = sub.add_parser("rescaled", help="cone-like peeling of the limit process, JSONL output")
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--radius", type=float, default=5.0)
    sp.add_argument("--h-min", type=float, default=-6.0)
    sp.add_argument("--h-max", type=float, default=2.0)
    sp.add_argument("--reps", type=int, default=1)
    sp.add_argument("--max-layers", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_rescaled)

    sp = sub.add_parser("convexpos", help="convex-position probability estimate")
    sp.add_argument("--body", choices=["triangle", "square"], default="triangle")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--reps", type=int, default=10000)
    sp.add_argument("--method", choices=["auto", "mc", "is", "sis"], default="auto")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(fn=cmd_convexpos)

    sp = sub.add_parser("report", help="SVG plots and a markdown table from summary.json")
    sp.add_argument("--in", dest="inp", required=True)
    sp.add_argument("--out", default="report")
    sp.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.fn(args)
    except SchemaError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except (PeelLabError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_RUNTIME


cli_dispatch = main

if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
