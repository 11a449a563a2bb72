"""Acceptance criteria 1-10; each test prints one PASS/FAIL line.

Run ``python3 tests/test_acceptance.py`` to print the lines directly, or look
for the "acceptance criteria" section at the end of a pytest run.
"""
from __future__ import annotations

import time

import numpy as np
import pytest

from nctwistor import constructions as cons
from nctwistor import holonomy as ho
from nctwistor.chart import conformal_rescale, metric_at, metric_jet, sample_points
from nctwistor.curvature import Curvature
from nctwistor.exterior import HodgeField, ScaledField, combos, dim_forms, form_field
from nctwistor.expr import parse_expr
from nctwistor.tractor import (
    TractorField,
    TractorForm,
    connection_jet,
    curvature_endo,
    curvature_from_connection,
    hodge_commutator,
    nc_derivative,
    tractor_metric,
)
from nctwistor.twistor import companions, nc_residuals, plucker_residual

from conftest import ACCEPTANCE_LINES

TOL = 1e-7
_GALLERY = None


def gallery():
    global _GALLERY
    if _GALLERY is None:
        _GALLERY = cons.gallery()
    return _GALLERY


def report(k: int, title: str, checks: list[tuple[str, bool]], start: float, budget: float) -> bool:
    elapsed = time.perf_counter() - start
    checks = checks + [(f"time {elapsed:.1f}s <= {budget:g}s", elapsed <= budget)]
    ok = all(c for _, c in checks)
    failed = [name for name, c in checks if not c]
    detail = "; ".join(name for name, _ in checks)
    line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'} - {title} [{detail}]"
    if failed:
        line += f" failing: {', '.join(failed)}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def _rel_max(x, scale):
    return float(np.max(np.abs(x), initial=0.0)) / (1.0 + scale)


# --- 1 -----------------------------------------------------------------------------------------


def criterion_1() -> bool:
    t0 = time.perf_counter()
    G = gallery()
    names = ["flat03", "flat13", "flat22", "sphere3", "sphere4", "hyperbolic3", "s2xh2"]
    checks = []
    for name in names:
        spec = G[name].spec
        pts = sample_points(spec, 50)
        cv = Curvature(metric_jet(spec, pts, 3))
        scale = float(np.max(np.abs(cv.riemann.value)))
        F = curvature_from_connection(connection_jet(cv))
        worst = max(_rel_max(cv.weyl.value, scale), _rel_max(cv.cotton.value, scale), _rel_max(F, scale))
        rank = ho.estimate_holonomy(spec, pts[0]).rank
        checks.append((f"{name}: |W,C,R|={worst:.1e} rank={rank}", worst < TOL and rank == 0))
    return report(1, "conformally flat metrics", checks, t0, 20)


# --- 2 -----------------------------------------------------------------------------------------


def _einstein_tractor_residual(spec, pts, c):
    field = TractorField(0, spec.n, form_field(0, spec, {"": "1"}), None, None, form_field(0, spec, {"": repr(c)}))
    worst = 0.0
    for x in pts:
        cp = metric_at(spec, x, 3)
        S = cp.frame.S
        worst = max(worst, max(nc_derivative(field, S[:, a], cp).norm() for a in range(spec.n)))
    return worst


def criterion_2() -> bool:
    t0 = time.perf_counter()
    spec = cons.sphere_chart(3)
    pts = sample_points(spec, 50)
    scal = float(Curvature(metric_jet(spec, pts[:1], 2)).scal.value[0])
    c = -scal / (2 * spec.n * (spec.n - 1))
    res = _einstein_tractor_residual(spec, pts, c)
    literal = _einstein_tractor_residual(spec, pts[:5], -0.25)
    checks = [
        (f"scal={scal:.6f}", abs(scal - 6.0) < 1e-10),
        (f"(1,0,0,-scal/(2n(n-1)))=(1,0,0,{c:g}): |grad|={res:.1e}", res < 1e-8),
        (f"note: stated constant -1/4 gives |grad|={literal:.2f} (arithmetic slip, ledger)", True),
    ]
    return report(2, "Einstein twistor on the unit 3-sphere", checks, t0, 5)


# --- 3 -----------------------------------------------------------------------------------------


def criterion_3() -> bool:
    t0 = time.perf_counter()
    G = gallery()
    good, bad = G["s2xh2"], G["s2xh2_scal-4"]
    rg = nc_residuals(good.forms[0][1], good.spec, sample_points(good.spec, 50)).max
    rb = nc_residuals(bad.forms[0][1], bad.spec, sample_points(bad.spec, 50)).max
    checks = [
        (f"S2xH2 vol_S2 max residual={np.max(rg):.1e}", np.max(rg) < TOL),
        (f"scal_H=-4: conformal Killing={rb[0]:.1e}", rb[0] < TOL),
        (f"scal_H=-4: max(other three)={np.max(rb[1:]):.2e}", np.max(rb[1:]) > 1e-3),
    ]
    return report(3, "product generation rule", checks, t0, 10)


# --- 4 -----------------------------------------------------------------------------------------


def criterion_4() -> bool:
    t0 = time.perf_counter()
    s2 = cons.sphere_chart(2)
    conf = "(1+(x1^2+x2^2)/4)^2"
    beta = form_field(1, s2, {"1": f"-x2/{conf}", "2": f"x1/{conf}"})
    cn = cons.cone(s2, 1.0)
    pts = sample_points(cn, 50)
    lift = float(np.max(cons.parallel_residual(cons.lift_to_cone(beta, s2, 1.0), cn, pts)))
    riem = float(np.max(np.abs(Curvature(metric_jet(cn, pts, 2)).riemann.value)))
    checks = [(f"|lift grad|={lift:.1e}", lift < TOL), (f"cone |Riemann|={riem:.1e}", riem < TOL)]
    return report(4, "cone lift of an S2 Killing form", checks, t0, 10)


# --- 5 -----------------------------------------------------------------------------------------


def criterion_5() -> bool:
    t0 = time.perf_counter()
    G = gallery()
    checks = []
    s3 = cons.sphere_chart(3)
    dev = cons.ambient_compare(s3, sample_points(s3, 50)).max_deviation
    checks.append((f"S3 coefficient match {dev:.1e}", dev < 1e-6))
    for n in (2, 3, 4):
        base = cons.sphere_chart(n)
        amb = cons.ambient(base, 1.0)
        riem = float(np.max(np.abs(Curvature(metric_jet(amb, sample_points(amb, 20), 2)).riemann.value)))
        checks.append((f"ambient over S{n} |Riemann|={riem:.1e}", riem < TOL))
    s2s2 = G["s2xs2"].spec
    rep = cons.ambient_compare(s2s2, sample_points(s2s2, 10, seed=1), with_ranks=True)
    checks.append((f"S2xS2 ranks tractor={rep.tractor_rank} ambient={rep.ambient_rank}", rep.tractor_rank == rep.ambient_rank))
    return report(5, "ambient metric", checks, t0, 30)


# --- 6 -----------------------------------------------------------------------------------------


def criterion_6() -> bool:
    t0 = time.perf_counter()
    spec = cons.pp_wave("x^3")
    pts = sample_points(spec, 50)
    scal = float(np.max(np.abs(Curvature(metric_jet(spec, pts, 2)).scal.value)))
    # the metric dual of ∂_v is du
    du = form_field(1, spec, {"1": "1"})
    dual = metric_at(spec, pts[0]).g @ np.array([0, 1.0, 0, 0])
    tw = float(np.max(nc_residuals(du, spec, pts).max))
    rep = ho.estimate_holonomy(spec, pts[0])
    ho.invariant_structure(rep, degrees=(2,))
    planes = [f["subspace"] for f in rep.fixed_forms[2]["forms"] if f.get("decomposable")]
    iso = [p for p in planes if p["type"] == "totally isotropic" and p["dim"] == 2]
    worst = min((max(p["invariance_residual"], p["annihilation_residual"]) for p in iso), default=np.inf)
    checks = [
        (f"|scal|={scal:.1e}", scal < 1e-9),
        (f"du is dual of d/dv: {np.allclose(dual, [1, 0, 0, 0])}", bool(np.allclose(dual, [1, 0, 0, 0]))),
        (f"du max residual={tw:.1e}", tw < TOL),
        (f"holonomy rank {rep.rank}, isotropic planes {len(iso)}, residual {worst:.1e}", bool(iso) and worst < 1e-6),
    ]
    return report(6, "pp-wave null plane", checks, t0, 30)


# --- 7 -----------------------------------------------------------------------------------------


def _tractor_of(alpha, spec, x):
    cp = metric_at(spec, x, 3)
    a0, amp, ap = companions(alpha, cp)
    t = TractorForm(alpha.degree, spec.n, alpha.jet(x, 0).value, a0, amp, ap)
    return t.to_big(), tractor_metric(cp.g)


def criterion_7() -> bool:
    t0 = time.perf_counter()
    G = gallery()
    checks = []
    s2s2 = G["s2xs2"].spec
    pts = sample_points(s2s2, 20, seed=1)
    W = float(np.max(np.abs(Curvature(metric_jet(s2s2, pts, 2)).weyl.value)))
    rep = ho.curvature_span(s2s2, pts[:8])
    ho.invariant_structure(rep)
    fixed = rep.fixed_vectors
    norm = np.nan
    if len(fixed) == 1:
        v = np.array(fixed[0]["vector"])
        norm = float((v / v[0]) @ rep.eta @ (v / v[0]))
    checks += [
        (f"S2xS2 |W|={W:.2f}", W > 0.1),
        (f"rank={rep.rank}", rep.rank >= 1),
        (f"fixed vectors={len(fixed)} norm={norm:.8f}", len(fixed) == 1 and abs(norm + 1 / 3) < 1e-6),
    ]
    # S2 x H3: product rule gives scal_l = -q(q-1)/(p(p-1)) scal_h = -6 for p=2, q=3
    s2h3 = G["s2xh3"].spec
    h3 = cons.space_form(-1.0, 3)
    scal_l = float(Curvature(metric_jet(h3, sample_points(h3, 3), 2)).scal.value[0])
    vol = G["s2xh3"].forms[0][1]
    pts5 = sample_points(s2h3, 20)
    verdict = nc_residuals(vol, s2h3, pts5).verdict()
    big, h = _tractor_of(vol, s2h3, pts5[0])
    pl = plucker_residual(big, 3, 7)
    U = ho.form_plane(big, 7, 3, h)
    G3 = U.T @ h @ U
    checks += [
        (f"S2xH3 scal_l={scal_l:.6f}", abs(scal_l + 6) < 1e-9),
        (f"vol_S2 {verdict}, tractor 3-form plucker={pl:.1e}", verdict == "normal" and pl < 1e-8),
        (f"plane dim {U.shape[1]} non-degenerate {abs(np.linalg.det(G3)) > 1e-6}", U.shape[1] == 3 and abs(np.linalg.det(G3)) > 1e-6),
    ]
    # a non-flat instance of the same split: S2 x H2(-3) x H2(-3)
    big6 = G["s2xh2xh2"].spec
    rep6 = ho.curvature_span(big6, sample_points(big6, 6))
    ho.invariant_structure(rep6, degrees=(3,))
    dec = [f for f in rep6.fixed_forms[3]["forms"] if f.get("decomposable")]
    ok6 = False
    if dec:
        U = np.array(dec[0]["subspace"]["basis"]).T
        comp = ho._null_space(U.T @ rep6.eta, 1e-9)
        inv, _ = ho._invariance(rep6.basis, comp)
        ok6 = dec[0]["subspace"]["type"] == "non-degenerate" and U.shape[1] == 3 and comp.shape[1] == 5 and inv < 1e-7
    checks.append((f"S2xH2xH2 rank={rep6.rank}, invariant 3+5 split {ok6}", ok6 and rep6.rank == 10))
    return report(7, "non-conformally-flat Einstein and product blocks", checks, t0, 30)


# --- 8 -----------------------------------------------------------------------------------------


def _random_tractor(p, spec, rng):
    def f(q):
        if q < 0 or dim_forms(spec.n, q) == 0:
            return None
        v = spec.names
        return form_field(
            q,
            spec,
            {
                ",".join(str(i + 1) for i in I): f"{rng.normal():.3f}*{v[0]}*{v[-1]}+{rng.normal():.3f}*sin({v[1]})+{rng.normal():.3f}"
                for I in combos(spec.n, q)
            },
        )

    return TractorField(p, spec.n, f(p), f(p + 1), f(p - 1), f(p))


def criterion_8() -> bool:
    t0 = time.perf_counter()
    worst = dict(bianchi=0.0, cotton_tr=0.0, weyl_tr=0.0, bach_sym=0.0, bach_div=0.0, hodge=0.0, curv=0.0)
    rng = np.random.default_rng(0)
    for name, entry in gallery().items():
        spec = entry.spec
        pts = sample_points(spec, 30)
        cv = Curvature(metric_jet(spec, pts, 5))
        worst["bianchi"] = max(worst["bianchi"], float(np.max(np.abs(cv.bianchi_cotton_residual()))))
        worst["cotton_tr"] = max(worst["cotton_tr"], float(np.max(np.abs(cv.cotton_trace()))))
        worst["weyl_tr"] = max(worst["weyl_tr"], max(float(np.max(np.abs(t))) for t in cv.weyl_traces()))
        B = cv.bach.value
        worst["bach_sym"] = max(worst["bach_sym"], float(np.max(np.abs(B - np.swapaxes(B, -1, -2)))))
        worst["bach_div"] = max(worst["bach_div"], float(np.max(np.abs(cv.bach_divergence()))))
        cv3 = Curvature(cv.g.truncate(3))
        F = curvature_from_connection(connection_jet(cv3))
        for k in range(0, 30, 6):
            cvk = Curvature(metric_jet(spec, pts[k], 3))
            for a in range(spec.n):
                for b in range(a + 1, spec.n):
                    X, Y = np.eye(spec.n)[a], np.eye(spec.n)[b]
                    worst["curv"] = max(worst["curv"], float(np.max(np.abs(F[k, a, b] - curvature_endo(cvk, X, Y)))))
        for p in range(spec.n + 1):
            tf = _random_tractor(p, spec, rng)
            worst["hodge"] = max(worst["hodge"], hodge_commutator(tf, spec, pts[p % 30]))
    limits = dict(bianchi=1e-6, cotton_tr=1e-8, weyl_tr=1e-8, bach_sym=1e-8, bach_div=1e-5, hodge=1e-7, curv=1e-6)
    checks = [(f"{k}={worst[k]:.1e}", worst[k] < limits[k]) for k in limits]
    return report(8, "identity suite over the gallery", checks, t0, 120)


# --- 9 -----------------------------------------------------------------------------------------


def _cases():
    G = gallery()
    out = []
    for name, entry in G.items():
        for label, form, verdict in entry.forms:
            out.append((f"{name}/{label}", entry.spec, form))
    f3 = cons.flat(3)
    out.append(("flat3/rotation", f3, form_field(1, f3, {"1": "-x2", "2": "x1"})))
    out.append(("flat3/|x|^2", f3, form_field(0, f3, {"": "x1^2+x2^2+x3^2"})))
    out.append(("flat3/x1x2dx1", f3, form_field(1, f3, {"1": "x1*x2"})))
    return out


def criterion_9() -> bool:
    t0 = time.perf_counter()
    checks = []
    mismatches, hodge_fail, count, hodge_count = [], [], 0, 0
    for label, spec, form in _cases():
        pts = sample_points(spec, 10)
        before = nc_residuals(form, spec, pts).verdict(TOL)
        phi_text = f"0.3*sin({spec.names[0]})"
        phi = parse_expr(phi_text, spec.n, spec.names)
        new = conformal_rescale(spec, phi)
        weight = parse_expr(f"exp(-{form.degree + 1}*{phi_text})", spec.n, spec.names)
        after = nc_residuals(ScaledField(weight, form), new, pts).verdict(10 * TOL)
        count += 1
        if before != after:
            mismatches.append(f"{label}:{before}->{after}")
        if before == "normal":
            hodge_count += 1
            hv = nc_residuals(HodgeField(form, spec), spec, pts).verdict(10 * TOL)
            if hv != "normal":
                hodge_fail.append(label)
    checks.append((f"{count - len(mismatches)}/{count} verdicts preserved", not mismatches))
    wdev = 0.0
    for name, entry in gallery().items():
        spec = entry.spec
        phi = parse_expr(f"0.3*sin({spec.names[0]})", spec.n, spec.names)
        pts = sample_points(spec, 10)
        a = Curvature(metric_jet(spec, pts, 2)).weyl_endo.value
        b = Curvature(metric_jet(conformal_rescale(spec, phi), pts, 2)).weyl_endo.value
        wdev = max(wdev, float(np.max(np.abs(a - b))))
    checks.append((f"(1,3) Weyl deviation {wdev:.1e}", wdev < 1e-6))
    checks.append((f"{hodge_count - len(hodge_fail)}/{hodge_count} Hodge images pass", not hodge_fail))
    return report(9, "conformal and Hodge covariance", checks, t0, 60)


# --- 10 ----------------------------------------------------------------------------------------


def _fd_error(J, V, h):
    """Jet first derivatives ``J`` at the points against central differences of values ``V``."""
    n = V.shape[1] // 2
    ad = np.stack([J.d(a).value for a in range(n)], axis=-1)
    fd = np.moveaxis((V[:, :n] - V[:, n:]) / (2 * h), 1, -1)
    return float(np.max(np.abs(ad - fd))) / max(1.0, float(np.max(np.abs(ad))))


def criterion_10() -> bool:
    t0 = time.perf_counter()
    h = 1e-4
    worst = {"g": 0.0, "K": 0.0, "C": 0.0}
    for name, entry in gallery().items():
        spec = entry.spec
        n = spec.n
        pts = sample_points(spec, 20)
        shifted = np.concatenate([pts[:, None, :] + h * np.eye(n)[None], pts[:, None, :] - h * np.eye(n)[None]], axis=1)
        cv = Curvature(metric_jet(spec, np.concatenate([pts[:, None, :], shifted], axis=1), 4))
        for key, jet in (("g", cv.g), ("K", cv.schouten), ("C", cv.cotton)):
            worst[key] = max(worst[key], _fd_error(jet[:, 0], jet.value[:, 1:], h))
    checks = [(f"{k} rel={v:.1e}", v < 1e-5) for k, v in worst.items()]
    return report(10, "jets against central differences", checks, t0, 30)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("k", range(1, 11))
def test_criterion(k):
    assert CRITERIA[k - 1]()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    raise SystemExit(0 if all(results) else 1)
