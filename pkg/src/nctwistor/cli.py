"""Command-line front end.

Every subcommand writes one JSON report ``{kind, config, per_point,
aggregates, verdict}``; identical arguments give byte-identical output.
Exit codes: 0 success, 1 input/tool error, 2 verification failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import constructions as cons
from . import holonomy as hol
from . import twistor as tw
from .chart import ChartError, MetricSpec, load_metric_spec, metric_jet, sample_points
from .curvature import Curvature
from .exterior import load_form_field
from .expr import ExprError, parse_expr
from .jet import DomainViolation, JetOrderError

EXIT_OK, EXIT_ERROR, EXIT_FAILED = 0, 1, 2


class InputError(Exception):
    pass


# --- io --------------------------------------------------------------------------------------


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def _metric(path: str) -> MetricSpec:
    try:
        return load_metric_spec(_read_json(path))
    except (ChartError, ExprError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _form(path: str, spec: MetricSpec):
    try:
        return load_form_field(_read_json(path), spec)
    except (ValueError, ExprError) as exc:
        raise InputError(f"{path}: {exc}") from None


def _dump(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if np.isfinite(v) else str(v)
    return x


def _report(kind: str, args, per_point, aggregates, verdict) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "quiet")}
    return {"kind": kind, "config": cfg, "per_point": per_point, "aggregates": aggregates, "verdict": verdict}


def _samples(spec: MetricSpec, args) -> np.ndarray:
    return sample_points(spec, args.samples, args.seed)


def _table(rows: list[tuple[str, object]]) -> str:
    w = max((len(k) for k, _ in rows), default=0)
    return "\n".join(f"{k.ljust(w)}  {v}" for k, v in rows)


# --- subcommands -----------------------------------------------------------------------------


def cmd_construct(args):
    kind = args.construction
    params: dict = {}
    if args.n is not None:
        params["n"] = args.n
    if args.kappa is not None:
        params["kappa"] = args.kappa
    if args.signature:
        params["signature"] = tuple(int(v) for v in args.signature.split(","))
    if args.H:
        params["H"] = args.H
    if args.transverse is not None:
        params["transverse"] = args.transverse
    if args.b is not None:
        params["b"] = args.b
    if args.c is not None:
        params["c"] = args.c
    if args.radius is not None:
        params["radius"] = args.radius
    if args.factor:
        params["factors"] = [_metric(p) for p in args.factor]
    if args.base:
        params["base"] = _metric(args.base)
    if args.k:
        params["k"] = _metric(args.k)
    if args.h:
        params["h"] = _metric(args.h)
    spec = cons.construct(kind, params)
    doc = {"kind": "metric", **spec.to_json()}
    return doc, "constructed", [("label", spec.label), ("dim", spec.n), ("signature", spec.signature)], False


def cmd_curvature(args):
    spec = _metric(args.metric)
    pts = _samples(spec, args)
    cv = Curvature(metric_jet(spec, pts, args.order))
    W = cv.weyl.value
    C = cv.cotton.value if args.order >= 3 else None
    B = cv.bach.value if args.order >= 4 else None
    per = []
    for k, x in enumerate(pts):
        row = {"point": x, "scal": cv.scal.value[k], "weyl": np.linalg.norm(W[k])}
        if C is not None:
            row["cotton"] = np.linalg.norm(C[k])
        if B is not None:
            row["bach"] = np.linalg.norm(B[k])
        per.append(row)
    keys = [k for k in ("scal", "weyl", "cotton", "bach") if k in per[0]]
    agg = {f"max_{k}": max(abs(r[k]) for r in per) for k in keys}
    flat = agg["max_weyl"] < args.tol and agg.get("max_cotton", 0.0) < args.tol
    agg["conformally_flat"] = bool(flat)
    rows = [(f"max |{k}|", f"{agg['max_' + k]:.3e}") for k in keys] + [("conformally flat", flat)]
    return _report("curvature", args, per, agg, "computed"), "computed", rows, False


def _twistor_like(args, kind):
    spec = _metric(args.metric)
    form = _form(args.form, spec)
    pts = _samples(spec, args)
    res = tw.nc_residuals(form, spec, pts)
    per = [{"point": pt, "residuals": row} for pt, row in zip(res.samples, res.per_point)]
    agg = {"max": res.max, "mean": res.mean, "tolerance": args.tol}
    if kind == "twistor-check":
        verdict = res.verdict(args.tol)
        failed = verdict != "normal"
    else:
        verdict = "conformal-killing" if res.max[0] <= args.tol else "not-conformal-killing"
        agg = {"max": res.max[:1], "mean": res.mean[:1], "tolerance": args.tol}
        per = [{"point": pt, "ck": row[0]} for pt, row in zip(res.samples, res.per_point)]
        failed = res.max[0] > args.tol
    rows = [(f"max {name}", f"{v:.3e}") for name, v in zip(("minus", "zero", "mixed", "plus"), np.atleast_1d(agg["max"]))] + [("verdict", verdict)]
    return _report(kind, args, per, agg, verdict), verdict, rows, failed


def cmd_twistor(args):
    return _twistor_like(args, "twistor-check")


def cmd_ck(args):
    return _twistor_like(args, "ck-check")


def cmd_ncfunction(args):
    spec = _metric(args.metric)
    f = parse_expr(args.function, spec.n, spec.names)
    pts = _samples(spec, args)
    per = []
    for pt in pts:
        r1, r2 = tw.ncfunction_residuals(f, spec, pt[None])
        per.append({"point": pt, "hessian": r1, "gradient": r2})
    agg = {"max_hessian": max(r["hessian"] for r in per), "max_gradient": max(r["gradient"] for r in per), "tolerance": args.tol}
    ok = agg["max_hessian"] <= args.tol and agg["max_gradient"] <= args.tol
    verdict = "nc-killing" if ok else "not-nc-killing"
    rows = [("max hessian residual", f"{agg['max_hessian']:.3e}"), ("max gradient residual", f"{agg['max_gradient']:.3e}"), ("verdict", verdict)]
    return _report("ncfunction-check", args, per, agg, verdict), verdict, rows, not ok


def cmd_integrability(args):
    spec = _metric(args.metric)
    form = _form(args.form, spec)
    pts = _samples(spec, args)
    rep = tw.integrability_residuals(form, spec, pts)
    doc = rep.to_json()
    agg = {"max": doc["max"], "tolerance": args.tol}
    ok = all(v <= args.tol for v in doc["max"].values())
    verdict = "satisfied" if ok else "violated"
    rows = [(k, f"{v:.3e}") for k, v in doc["max"].items()] + [("verdict", verdict)]
    return _report("integrability", args, doc["per_point"], agg, verdict), verdict, rows, not ok


def classify(report: hol.HolonomyReport) -> str:
    """Descriptive label of the structure found (string only)."""
    if report.rank == 0:
        return "conformally flat: trivial holonomy"
    labels = []
    for f in report.fixed_vectors:
        labels.append(
            {
                "timelike": "conformally Einstein, scal > 0 (timelike fixed tractor)",
                "spacelike": "conformally Einstein, scal < 0 (spacelike fixed tractor)",
                "null": "conformally Ricci-flat (null fixed tractor)",
            }[f["causal"]]
        )
    for q, entry in sorted(report.fixed_forms.items()):
        for f in entry["forms"]:
            sub = f.get("subspace")
            if sub and sub["type"] == "totally isotropic" and q >= 2:
                labels.append(f"fixed totally lightlike {q}-plane")
    blocks = [s for s in report.invariant_subspaces if s["type"] == "non-degenerate" and s["dim"] > 1 and s["source"] != "trivial span"]
    if blocks:
        labels.append("decomposable: non-degenerate invariant subspaces of dims " + ",".join(str(s["dim"]) for s in blocks))
    return "; ".join(labels) if labels else "no invariant structure found"


def cmd_holonomy(args):
    spec = _metric(args.metric)
    base = np.array([float(v) for v in args.basepoint.split(",")]) if args.basepoint else _samples(spec, args)[0]
    if base.shape != (spec.n,):
        raise InputError(f"base point needs {spec.n} coordinates")
    rep = hol.estimate_holonomy(spec, base, n_loops=args.loops, radius=args.radius, seed=args.seed, steps=args.steps)
    degrees = tuple(int(v) for v in args.degrees.split(",")) if args.degrees else (1, 2)
    hol.invariant_structure(rep, degrees, seed=args.seed)
    doc = rep.to_json()
    label = classify(rep)
    agg = {"rank": rep.rank, "rank_statement": doc["rank_statement"], "skew_defect": rep.skew_defect(), "classification": label}
    out = _report("holonomy", args, [], agg, label)
    out["holonomy"] = doc
    rows = [("rank", doc["rank_statement"]), ("fixed vectors", len(rep.fixed_vectors)), ("classification", label)]
    return out, label, rows, False


def cmd_lift_cone(args):
    spec = _metric(args.metric)
    form = _form(args.form, spec)
    pts = _samples(spec, args)
    b = args.b if args.b is not None else cons.einstein_b(spec, pts)
    lift = cons.lift_to_cone(form, spec, b, pts)
    cn = cons.cone(spec, b)
    cpts = sample_points(cn, args.samples, args.seed)
    res = cons.parallel_residual(lift, cn, cpts)
    per = [{"point": pt, "parallel_residual": r} for pt, r in zip(cpts, res)]
    agg = {"b": b, "max_parallel_residual": float(res.max()), "tolerance": args.tol, "cone": cn.to_json()}
    ok = float(res.max()) <= args.tol
    verdict = "parallel" if ok else "not-parallel"
    rows = [("b", b), ("max |nabla lift|", f"{res.max():.3e}"), ("verdict", verdict)]
    return _report("lift-cone", args, per, agg, verdict), verdict, rows, not ok


def cmd_ambient(args):
    spec = _metric(args.metric)
    pts = _samples(spec, args)
    rep = cons.ambient_compare(spec, pts, with_ranks=args.ranks)
    doc = rep.to_json()
    per = [{"point": pt, "deviation": d} for pt, d in zip(pts, doc["per_point"])]
    agg = {k: v for k, v in doc.items() if k != "per_point"}
    agg["tolerance"] = args.tol
    ok = rep.max_deviation <= args.tol and (not args.ranks or rep.tractor_rank == rep.ambient_rank)
    verdict = "match" if ok else "mismatch"
    rows = [("b", rep.b), ("max deviation", f"{rep.max_deviation:.3e}")]
    if args.ranks:
        rows += [("tractor rank", rep.tractor_rank), ("ambient rank", rep.ambient_rank)]
    rows.append(("verdict", verdict))
    return _report("ambient-compare", args, per, agg, verdict), verdict, rows, not ok


# --- parser ------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nctwistor", description="Conformal curvature, normal tractor connection and nc-Killing forms.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, metric=True, tol=1e-7):
        if metric:
            sp.add_argument("--metric", required=True, help="metric JSON file")
        sp.add_argument("--samples", type=int, default=50, help="number of seeded sample points")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=tol)
        sp.add_argument("--out", help="write the JSON report here (default: stdout)")
        sp.add_argument("--quiet", action="store_true", help="suppress the summary table")

    sp = sub.add_parser("construct", help="build a gallery/structural metric")
    sp.add_argument("construction", choices=cons.KINDS)
    sp.add_argument("--n", type=int)
    sp.add_argument("--kappa", type=float)
    sp.add_argument("--signature", help="r,s")
    sp.add_argument("--H", help="pp-wave profile expression")
    sp.add_argument("--transverse", type=int)
    sp.add_argument("--radius", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--c", type=float)
    sp.add_argument("--factor", action="append", help="factor metric JSON (repeatable)")
    sp.add_argument("--base", help="base metric JSON")
    sp.add_argument("--k", help="warped sine factor metric JSON")
    sp.add_argument("--h", help="warped cosine factor metric JSON")
    sp.add_argument("--out")
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_construct)

    sp = sub.add_parser("curvature", help="Weyl, Cotton and Bach norms at samples")
    common(sp)
    sp.add_argument("--order", type=int, default=4, help="metric jet order (4 gives Bach)")
    sp.set_defaults(func=cmd_curvature)

    for name, fn, hlp in (
        ("twistor-check", cmd_twistor, "residuals of the four normal twistor equations"),
        ("ck-check", cmd_ck, "conformal Killing equation only"),
        ("integrability", cmd_integrability, "curvature integrability conditions"),
    ):
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        sp.add_argument("--form", required=True, help="form JSON file")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("ncfunction-check", help="equations for nc-Killing functions")
    common(sp)
    sp.add_argument("--function", required=True, help="expression in the chart coordinates")
    sp.set_defaults(func=cmd_ncfunction)

    sp = sub.add_parser("holonomy", help="estimate the normal conformal holonomy algebra")
    common(sp)
    sp.add_argument("--loops", type=int, default=50)
    sp.add_argument("--radius", type=float, default=0.01)
    sp.add_argument("--steps", type=int, default=16, help="RK4 steps per loop edge")
    sp.add_argument("--basepoint", help="comma-separated coordinates (default: first sample)")
    sp.add_argument("--degrees", help="comma-separated tractor form degrees to test for fixed forms")
    sp.set_defaults(func=cmd_holonomy)

    sp = sub.add_parser("lift-cone", help="lift a special Killing form to the cone and test parallelism")
    common(sp)
    sp.add_argument("--form", required=True)
    sp.add_argument("--b", type=float, help="cone scaling (default n(n-1)/scal)")
    sp.set_defaults(func=cmd_lift_cone)

    sp = sub.add_parser("ambient-compare", help="compare the normal connection with the ambient Levi-Civita connection")
    common(sp, tol=1e-6)
    sp.add_argument("--ranks", action="store_true", help="also compare curvature-span ranks")
    sp.set_defaults(func=cmd_ambient)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        doc, verdict, rows, failed = args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ChartError, ExprError, JetOrderError, DomainViolation, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    text = _dump(doc)
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            print(f"error: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
            return EXIT_ERROR
        if not args.quiet:
            print(_table(rows))
    else:
        sys.stdout.write(text)
    return EXIT_FAILED if failed else EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
