"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical or budget
failure, 3 acceptance-suite failure (``verify`` only).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, fields
from fractions import Fraction

import numpy as np

from . import __version__
from . import cascade as cas
from . import cuntz, overlap, sierpinski, transfer
from .core import DEFAULT_EPS, BudgetExceeded, MeasureBound, is_exact_scale, parse_lambda
from .quadratic import QuadNumber

log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_ACCEPTANCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    lam: str = "golden"
    depth: int | None = None
    mode: str | None = None
    tolerance: float = DEFAULT_EPS
    budget: int | None = None
    format: str | None = None
    output: str | None = None
    seed: int = 20240611

    def scale(self):
        exact = None if self.mode is None else self.mode == "exact"
        lam = parse_lambda(self.lam, exact)
        if self.mode == "exact" and not is_exact_scale(lam):
            log.warning("lambda %s is a decimal; running in float mode", self.lam)
        return lam

    def resolved_mode(self, lam) -> str:
        return "exact" if is_exact_scale(lam) else "float"


def threads_from_env() -> int:
    """OVERLAP_IFS_THREADS: validated, but all work currently runs in one thread."""
    raw = os.environ.get("OVERLAP_IFS_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"OVERLAP_IFS_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("OVERLAP_IFS_THREADS must be positive")
    return n


# ---------------------------------------------------------------------------
# serialisation


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, QuadNumber):
        return x.to_json()
    if isinstance(x, MeasureBound):
        return x.to_json()
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def provenance(cfg: RunConfig, lam, depth) -> dict:
    return {
        "lambda": cfg.lam,
        "mode": cfg.resolved_mode(lam),
        "depth": depth,
        "tolerance": cfg.tolerance,
        "tool": "ifs-overlap",
        "version": __version__,
    }


def dump_json(obj: dict) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def dump_csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, QuadNumber):
        return repr(float(v))
    return str(v)


def emit(data: str | bytes, path: str | None) -> None:
    if path is None or path == "-":
        if isinstance(data, bytes):
            sys.stdout.buffer.write(data)
            sys.stdout.buffer.flush()
        else:
            sys.stdout.write(data)
            sys.stdout.flush()
        return
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(path, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": "\n"})) as fh:
        fh.write(data)


def step_svg(xs: np.ndarray, ys_list: list[np.ndarray], labels: list[str], size=(640, 360)) -> str:
    """A minimal line/step plot; enough to eyeball a CDF or a density pair."""
    w, h = size
    m = 30.0
    x0, x1 = float(np.min(xs)), float(np.max(xs))
    ymax = max(float(np.max(y)) for y in ys_list) or 1.0
    ymin = min(0.0, min(float(np.min(y)) for y in ys_list))
    sx = (w - 2 * m) / ((x1 - x0) or 1.0)
    sy = (h - 2 * m) / ((ymax - ymin) or 1.0)
    colors = ["#1f4e79", "#b03a2e", "#2e7d32"]
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
        f'<rect width="{w}" height="{h}" fill="#ffffff"/>',
        f'<line x1="{m}" y1="{h - m}" x2="{w - m}" y2="{h - m}" stroke="#000000"/>',
    ]
    for y, lab, col in zip(ys_list, labels, colors):
        pts = " ".join(f"{m + (x - x0) * sx:.3f},{h - m - (v - ymin) * sy:.3f}" for x, v in zip(xs, y))
        out.append(f'<polyline id="{lab}" fill="none" stroke="{col}" stroke-width="1" points="{pts}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def _ifs1d(cfg: RunConfig) -> cas.IFS1D:
    lam = cfg.scale()
    kw = {"eps": cfg.tolerance}
    if cfg.budget is not None:
        kw["budget"] = cfg.budget
    return cas.IFS1D(lam, **kw)


def _ifs2d(cfg: RunConfig) -> sierpinski.IFS2D:
    lam = cfg.scale()
    kw = {"eps": cfg.tolerance}
    if cfg.budget is not None:
        kw["budget"] = cfg.budget
    return sierpinski.IFS2D(lam, **kw)


def _depth(cfg: RunConfig, default: int) -> int:
    return default if cfg.depth is None else cfg.depth


def cmd_cascade(cfg: RunConfig, args) -> int:
    ifs = _ifs1d(cfg)
    n = _depth(cfg, 10)
    F = cas.cascade_cdf(ifs, n)
    xs = F.float_breakpoints()
    vals = [str(v) for v in F.values[1:]] if F.exact else F.float_values()[1:]
    fmt = cfg.format or "csv"
    if fmt == "csv":
        emit(dump_csv(["x", "F"], zip(xs, vals)), cfg.output)
    elif fmt == "json":
        doc = {"provenance": provenance(cfg, ifs.lam, n), "breakpoints": xs, "values": list(vals),
               "left_value": "0"}
        if F.exact:
            doc["breakpoints_exact"] = [_jsonable(x) for x in F.breakpoints]
        emit(dump_json(doc), cfg.output)
    else:
        raise UsageError(f"cascade does not write {fmt!r}")
    if args.svg:
        fv = F.float_values()
        sx = np.repeat(xs, 2)
        sy = np.concatenate([[v0, v1] for v0, v1 in zip(fv[:-1], fv[1:])])
        emit(step_svg(sx, [sy], ["F"]), args.svg)
    return EXIT_OK


def cmd_nodes(cfg: RunConfig, args) -> int:
    ifs = _ifs1d(cfg)
    n = _depth(cfg, 3)
    ns = cas.node_set(ifs, n)
    fmt = cfg.format or "csv"
    if fmt == "csv":
        vals = ns.float_values()
        rows = [(v, int(c), repr(x) if ns.exact else "") for v, c, x in zip(vals, ns.counts, ns.values)]
        emit(dump_csv(["value", "multiplicity", "exact"], rows), cfg.output)
    elif fmt == "json":
        doc = {"provenance": provenance(cfg, ifs.lam, n), "count": len(ns), "total": ns.total,
               "nodes": [{"value": float(v), "exact": _jsonable(v) if ns.exact else None, "multiplicity": int(c)}
                         for v, c in zip(ns.values, ns.counts)]}
        emit(dump_json(doc), cfg.output)
    else:
        raise UsageError(f"nodes does not write {fmt!r}")
    return EXIT_OK


def cmd_overlap1d(cfg: RunConfig, args) -> int:
    ifs = _ifs1d(cfg)
    n = _depth(cfg, 20)
    rep = overlap.overlap_report(ifs, n)
    doc = {"provenance": provenance(cfg, ifs.lam, n), **rep.to_json()}
    emit(dump_json(doc), cfg.output)
    return EXIT_OK


def cmd_moments(cfg: RunConfig, args) -> int:
    lam = cfg.scale()
    k = args.order
    ms = overlap.moments(lam, k)
    rows = [{"k": i, "M": _jsonable(m), "float": float(m)} for i, m in enumerate(ms)]
    doc = {"provenance": provenance(cfg, lam, None), "moments": rows,
           "closed_form": {"M1": float(overlap.mean_closed_form(lam)),
                           "M2": float(overlap.second_moment_closed_form(lam))}}
    if k >= 3:
        doc["M3_candidate_formula"] = {"value": float(overlap.third_moment_candidate(lam)),
                                       "agrees_with_recursion": overlap.third_moment_candidate(lam) == ms[3],
                                       "flag": "candidate third-moment formula disagrees with the recursion"}
    if args.samples:
        mc = overlap.monte_carlo_moments(float(lam), kmax=k, count=args.samples, seed=cfg.seed)
        doc["monte_carlo"] = {"samples": mc.samples, "depth": mc.depth, "seed": mc.seed,
                              "mean": mc.mean, "stderr": mc.stderr}
    fmt = cfg.format or "json"
    if fmt == "csv":
        emit(dump_csv(["k", "M"], [(r["k"], r["float"]) for r in rows]), cfg.output)
    else:
        emit(dump_json(doc), cfg.output)
    return EXIT_OK


def cmd_charfn(cfg: RunConfig, args) -> int:
    lam = cfg.scale()
    t = np.linspace(0.0, args.tmax, args.samples)
    val, bound = overlap.char_fn(lam, t, terms=args.terms)
    fmt = cfg.format or "csv"
    if fmt == "csv":
        rows = zip(t, np.abs(val), val.real, val.imag, bound)
        emit(dump_csv(["t", "abs", "re", "im", "truncation_bound"], rows), cfg.output)
    else:
        doc = {"provenance": provenance(cfg, lam, args.terms), "t": t, "abs": np.abs(val), "bound": bound}
        if args.wiener:
            doc["wiener"] = overlap.wiener_atom_test(lam, args.tmax, terms=args.terms)
        emit(dump_json(doc), cfg.output)
    return EXIT_OK


def cmd_rnderiv(cfg: RunConfig, args) -> int:
    ifs = _ifs1d(cfg)
    n = _depth(cfg, 18)
    p0, p1 = transfer.rn_pair(ifs, n)
    b = float(ifs.b)
    x = np.linspace(0.0, b, args.samples)
    r0, r1 = p0.evaluate(x), p1.evaluate(x)
    fmt = cfg.format or "csv"
    if fmt == "csv":
        rows = zip(x, r0.values, r1.values, r0.uncertain.astype(int))
        emit(dump_csv(["x", "phi0", "phi1", "uncertain"], rows), cfg.output)
    else:
        doc = {"provenance": provenance(cfg, ifs.lam, n), "x": x, "phi0": r0.values, "phi1": r1.values,
               "uncertain": r0.uncertain}
        emit(dump_json(doc), cfg.output)
    if args.svg:
        emit(step_svg(x, [r0.values, r1.values], ["phi0", "phi1"]), args.svg)
    return EXIT_OK


def cmd_opcheck(cfg: RunConfig, args) -> int:
    ifs = _ifs1d(cfg)
    n = _depth(cfg, 14)
    flt = cas.IFS1D(float(ifs.lam), ifs.eps)
    b = float(ifs.b)
    checks: dict = {}
    if ifs.case == "overlap":
        checks["rn_sum_max_error"] = transfer.rn_sum_check(flt, n, np.linspace(0, b, 4001))
        checks["lebesgue_contrast"] = transfer.lebesgue_contrast(flt, min(n, 14))
    checks["defect_residual"] = transfer.defect_residual(flt, n)
    checks["projection_identity"] = transfer.projection_identity_check(flt, min(n, 12), samples=8, seed=cfg.seed)
    lhs, rhs = transfer.column_isometry_defect(ifs, lambda x: x * x + 1, min(n, 12))
    checks["column_isometry"] = {"lhs": lhs, "rhs": rhs, "equal": lhs == rhs if ifs.exact else abs(lhs - rhs) <= 1e-12}
    rng = np.random.default_rng(cfg.seed)
    checks["cuntz_relations"] = {f"N{N}": cuntz.cuntz_identities(N, min(n, 8), rng=rng) for N in (2, 3)}
    checks["intertwining"] = cuntz.intertwining_check(flt, min(n, 10))
    checks["minimality_residual"] = cuntz.minimality_density_check(flt, min(n, 4))
    emit(dump_json({"provenance": provenance(cfg, ifs.lam, n), "checks": checks}), cfg.output)
    return EXIT_OK


def geometry_report(ifs: sierpinski.IFS2D, n: int) -> dict:
    tag = sierpinski.classify_regime(ifs.lam, ifs.eps)
    dim, in_range = sierpinski.hausdorff_dim(ifs.lam)
    gap = sierpinski.gap_region(ifs)
    rep = {
        "regime": {"code": tag.code, "name": tag.name, "description": tag.description, "ambiguous": tag.ambiguous},
        "geometric_regime": sierpinski.geometric_regime(ifs).code,
        "hausdorff_dim": dim,
        "hausdorff_formula_in_range": in_range,
        "gap_side": float(gap.side),
        "triple_overlap_empty": sierpinski.triple_overlap_check(ifs),
        "overlap_side": float(sierpinski.first_overlaps(ifs)[0].side),
    }
    if n >= 1:
        ov = sierpinski.ov_level(ifs, n)
        rep["ov_triangles"] = len(ov.triangles)
        rep["ov_contacts"] = len(ov.contacts)
        rep["ov_interior_disjoint"] = ov.disjoint
    return rep


def cmd_sierpinski(cfg: RunConfig, args) -> int:
    ifs = _ifs2d(cfg)
    n = _depth(cfg, 2)
    fmt = cfg.format or "svg"
    layers = tuple(s for s in args.layers.split(",") if s)
    if fmt not in ("svg", "pgm"):
        raise UsageError(f"sierpinski writes svg or pgm, not {fmt!r}")
    doc = sierpinski.render(ifs, n, layers, fmt=fmt, size=args.size)
    emit(doc, cfg.output)
    if args.report:
        rep = {"provenance": provenance(cfg, ifs.lam, n), **geometry_report(ifs, n)}
        emit(dump_json(rep), args.report)
    return EXIT_OK


def cmd_classify(cfg: RunConfig, args) -> int:
    ifs = _ifs2d(cfg)
    rep = {"provenance": provenance(cfg, ifs.lam, None), **geometry_report(ifs, 1)}
    emit(dump_json(rep), cfg.output)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    from .acceptance import run_all

    only = [int(s) for s in args.only.split(",")] if args.only else None
    results = run_all(only)
    lines = [r.line() for r in results]
    text = "\n".join(lines) + "\n"
    if cfg.output:
        emit(dump_json({"provenance": {"tool": "ifs-overlap", "version": __version__},
                        "results": [{"criterion": r.number, "title": r.title, "passed": r.passed,
                                     "detail": r.detail} for r in results]}), cfg.output)
    sys.stdout.write(text)
    return EXIT_OK if all(r.passed for r in results) else EXIT_ACCEPTANCE


COMMANDS = {
    "cascade": (cmd_cascade, "emit F_n breakpoints as CSV/JSON, optional SVG plot"),
    "nodes": (cmd_nodes, "node set N_n with multiplicities"),
    "overlap1d": (cmd_overlap1d, "1D overlap measure enclosure report (JSON)"),
    "moments": (cmd_moments, "moment table M_0..M_k"),
    "charfn": (cmd_charfn, "sampled |characteristic function| curve"),
    "rnderiv": (cmd_rnderiv, "sampled Radon-Nikodym derivatives, optional SVG"),
    "opcheck": (cmd_opcheck, "transfer-operator and Cuntz invariant report"),
    "sierpinski": (cmd_sierpinski, "render the 2D construction, optional geometry report"),
    "classify": (cmd_classify, "2D regime and dimension"),
    "verify": (cmd_verify, "run the acceptance suite"),
}


# ---------------------------------------------------------------------------
# argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ifs-overlap", description="Harmonic analysis of iterated function systems with overlap.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_) in COMMANDS.items():
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
        s.add_argument("--lambda", dest="lam", help='"golden", "p/q", "quad:p,q" or a decimal')
        s.add_argument("--depth", "-n", type=int)
        s.add_argument("--mode", choices=("exact", "float"))
        s.add_argument("--tolerance", type=float)
        s.add_argument("--budget", type=int)
        s.add_argument("--format", choices=("json", "csv", "svg", "pgm"))
        s.add_argument("--output", "-o")
        s.add_argument("--seed", type=int)
        if name in ("cascade", "rnderiv"):
            s.add_argument("--svg", help="also write an SVG plot to this path")
        if name == "moments":
            s.add_argument("--order", type=int, default=3)
            s.add_argument("--samples", type=int, default=0, help="Monte Carlo words (0 = skip)")
        if name == "charfn":
            s.add_argument("--tmax", type=float, default=100.0)
            s.add_argument("--samples", type=int, default=1001)
            s.add_argument("--terms", type=int, default=60)
            s.add_argument("--wiener", action="store_true", help="add the Wiener average over [0, tmax] (JSON)")
        if name == "rnderiv":
            s.add_argument("--samples", type=int, default=1001)
        if name == "sierpinski":
            s.add_argument("--layers", default="attractor,overlaps,gaps")
            s.add_argument("--size", type=int, default=512)
            s.add_argument("--report", help="write the geometry report (JSON) to this path")
        if name == "verify":
            s.add_argument("--only", help="comma-separated criterion numbers")
    return p


CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def load_config(args) -> RunConfig:
    data: dict = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {args.config}: {e}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        unknown = set(data) - CONFIG_KEYS
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig(**data)
    for key in CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            setattr(cfg, key, v)
    if cfg.depth is not None and cfg.depth < 0:
        raise UsageError("depth must be non-negative")
    if cfg.lam is not None:
        cfg.lam = str(cfg.lam)
    return cfg


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        threads_from_env()
        args = build_parser().parse_args(argv)
        cfg = load_config(args)
        fn, _ = COMMANDS[args.command]
        return fn(cfg, args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (BudgetExceeded, ArithmeticError, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
