"""Metric gallery and structural constructions.

Builders return :class:`~nctwistor.chart.MetricSpec` objects whose entries
are expression trees, so every derived quantity is differentiated exactly
by the jet machinery.  Kinds: flat, space form (conformal chart), pp-wave,
Riemannian products, sin/cos warped products, cones ``b dt² + t² g`` and
ambient metrics ``b(dt² - ds²) + t² g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import exterior as ex
from .chart import ChartError, MetricSpec, frame_jet, metric_jet, sample_points
from .curvature import Curvature
from .expr import Binary, Const, Expr, Num, Unary, Var, is_zero_literal, num, parse_expr, remap
from .exterior import DerivativeField, Field, FormField, ScaledField, SumField
from .holonomy import ConnectionModel, curvature_span
from .jet import Jet
from .tractor import connection_frame
from .chart import metric_at

MAX_DIM = 8
EINSTEIN_TOL = 1e-6

_ZERO = Num(0.0)


def _sq(e: Expr) -> Expr:
    return Binary("^", e, Num(2.0))


def _mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and a.value == 1.0:
        return b
    if isinstance(b, Num) and b.value == 1.0:
        return a
    return Binary("*", a, b)


def _scale_entry(f: Expr, e: Expr) -> Expr:
    return e if is_zero_literal(e) else _mul(f, e)


def _check_dim(n: int):
    if n > MAX_DIM:
        raise ChartError(f"dimension {n} exceeds the cap of {MAX_DIM}")


def _fresh_names(prefix: tuple[str, ...], names: tuple[str, ...]) -> tuple[str, ...]:
    cand = prefix + names
    if len(set(cand)) == len(cand):
        return cand
    return tuple(f"x{i + 1}" for i in range(len(cand)))


# --- elementary metrics ---------------------------------------------------------------------


def flat(n: int, signature: tuple[int, int] | None = None) -> MetricSpec:
    """``-dx_1² - … - dx_r² + dx_{r+1}² + …`` on ``R^n``."""
    r, s = signature or (0, n)
    if r + s != n:
        raise ChartError("signature does not match the dimension")
    _check_dim(n)
    g = tuple(tuple((Num(1.0) if i >= r else num(-1.0)) if i == j else _ZERO for j in range(n)) for i in range(n))
    return MetricSpec(n, (r, s), tuple(f"x{i + 1}" for i in range(n)), g, (), f"flat R^({r},{s})")


def space_form(kappa: float, n: int) -> MetricSpec:
    """``(1 + κ|x|²/4)^{-2} δ``: constant sectional curvature ``κ``."""
    _check_dim(n)
    names = tuple(f"x{i + 1}" for i in range(n))
    r2: Expr = _sq(Var(0))
    for i in range(1, n):
        r2 = Binary("+", r2, _sq(Var(i)))
    conf = Binary("+", Num(1.0), _mul(num(kappa / 4.0), r2))
    f = Binary("^", conf, num(-2.0))
    g = tuple(tuple(f if i == j else _ZERO for j in range(n)) for i in range(n))
    guard = (conf,) if kappa < 0 else ()
    half = 1.0 if kappa >= 0 else min(1.0, math.sqrt(2.0 / (n * abs(kappa))))
    box = tuple((-half, half) for _ in range(n))
    label = "sphere" if kappa > 0 else ("hyperbolic" if kappa < 0 else "flat")
    return MetricSpec(n, (0, n), names, g, guard, f"{label} chart kappa={kappa:g} n={n}", box)


def sphere_chart(n: int, radius: float = 1.0) -> MetricSpec:
    return space_form(1.0 / radius**2, n)


def pp_wave(H: str = "x^3", transverse: int = 2) -> MetricSpec:
    """Brinkmann metric ``2 du dv + H du² + Σ dx_i²`` with coordinates ``(u, v, x, y, …)``."""
    n = 2 + transverse
    _check_dim(n)
    tnames = ("x", "y", "z", "w", "q", "r")[:transverse]
    names = ("u", "v") + tnames
    h = parse_expr(H, n, names)
    rows = [[_ZERO] * n for _ in range(n)]
    rows[0][0] = h
    rows[0][1] = rows[1][0] = Num(1.0)
    for i in range(2, n):
        rows[i][i] = Num(1.0)
    return MetricSpec(n, (1, n - 1), names, tuple(map(tuple, rows)), (), f"pp-wave H={H}")


def product(*factors: MetricSpec) -> MetricSpec:
    """Block-diagonal product over concatenated coordinates."""
    n = sum(f.n for f in factors)
    _check_dim(n)
    rows = [[_ZERO] * n for _ in range(n)]
    guard = []
    names: tuple[str, ...] = ()
    box = []
    off = 0
    for f in factors:
        mp = {i: off + i for i in range(f.n)}
        for i in range(f.n):
            for j in range(f.n):
                rows[off + i][off + j] = remap(f.g[i][j], mp)
        guard += [remap(gd, mp) for gd in f.guard]
        names += f.names
        box += list(f.box or tuple((-1.0, 1.0) for _ in range(f.n)))
        off += f.n
    if len(set(names)) != n:
        names = tuple(f"x{i + 1}" for i in range(n))
    sig = (sum(f.signature[0] for f in factors), sum(f.signature[1] for f in factors))
    label = " x ".join(f.label or "?" for f in factors)
    return MetricSpec(n, sig, names, tuple(map(tuple, rows)), tuple(guard), label, tuple(box))


def scaled(spec: MetricSpec, c: float) -> MetricSpec:
    """Constant multiple ``c·g`` (``c > 0``)."""
    if c <= 0:
        raise ChartError("scaling factor must be positive")
    g = tuple(tuple(_scale_entry(Num(float(c)), e) for e in row) for row in spec.g)
    return replace(spec, g=g, label=f"{c:g}*({spec.label})")


def _shifted(spec: MetricSpec, k: int) -> tuple[tuple[Expr, ...], ...]:
    mp = {i: i + k for i in range(spec.n)}
    return tuple(tuple(remap(e, mp) for e in row) for row in spec.g)


def warped(k: MetricSpec, h: MetricSpec) -> MetricSpec:
    """``dt² + sin²(t) k + cos²(t) h`` on ``(0.1, π/2 - 0.1) × K × H``."""
    p, q = k.n, h.n
    n = 1 + p + q
    _check_dim(n)
    rows = [[_ZERO] * n for _ in range(n)]
    rows[0][0] = Num(1.0)
    t = Var(0)
    s2 = _sq(Unary("sin", t))
    c2 = _sq(Unary("cos", t))
    kg = _shifted(k, 1)
    hg = _shifted(h, 1 + p)
    for i in range(p):
        for j in range(p):
            rows[1 + i][1 + j] = _scale_entry(s2, kg[i][j])
    for i in range(q):
        for j in range(q):
            rows[1 + p + i][1 + p + j] = _scale_entry(c2, hg[i][j])
    lo, hi = 0.1, math.pi / 2 - 0.1
    guard = (Binary("-", t, Num(lo)), Binary("-", Binary("-", Binary("/", Const("pi"), Num(2.0)), Num(0.1)), t))
    guard += tuple(remap(gd, {i: i + 1 for i in range(p)}) for gd in k.guard)
    guard += tuple(remap(gd, {i: i + 1 + p for i in range(q)}) for gd in h.guard)
    names = _fresh_names(("t",), k.names + h.names)
    sig = (k.signature[0] + h.signature[0], 1 + k.signature[1] + h.signature[1])
    box = ((lo + 0.05, hi - 0.05),) + (k.box or tuple((-1.0, 1.0) for _ in range(p))) + (h.box or tuple((-1.0, 1.0) for _ in range(q)))
    return MetricSpec(n, sig, names, tuple(map(tuple, rows)), guard, f"warped({k.label}; {h.label})", box)


def cone(base: MetricSpec, b: float) -> MetricSpec:
    """``b dt² + t² g`` with the guard ``t > 0``."""
    if b == 0:
        raise ChartError("cone scaling b must be non-zero")
    n = base.n + 1
    _check_dim(n)
    rows = [[_ZERO] * n for _ in range(n)]
    rows[0][0] = num(b)
    t2 = _sq(Var(0))
    g = _shifted(base, 1)
    for i in range(base.n):
        for j in range(base.n):
            rows[1 + i][1 + j] = _scale_entry(t2, g[i][j])
    r, s = base.signature
    sig = (r + 1, s) if b < 0 else (r, s + 1)
    guard = (Var(0),) + tuple(remap(gd, {i: i + 1 for i in range(base.n)}) for gd in base.guard)
    box = ((0.5, 1.5),) + (base.box or tuple((-1.0, 1.0) for _ in range(base.n)))
    return MetricSpec(n, sig, _fresh_names(("t",), base.names), tuple(map(tuple, rows)), guard, f"cone b={b:g} over {base.label}", box)


def ambient(base: MetricSpec, b: float) -> MetricSpec:
    """``b(dt² - ds²) + t² g`` on ``R_+² × M`` (coordinates ``t, s`` first)."""
    if b == 0:
        raise ChartError("ambient scaling b must be non-zero")
    n = base.n + 2
    _check_dim(n)
    rows = [[_ZERO] * n for _ in range(n)]
    rows[0][0] = num(b)
    rows[1][1] = num(-b)
    t2 = _sq(Var(0))
    g = _shifted(base, 2)
    for i in range(base.n):
        for j in range(base.n):
            rows[2 + i][2 + j] = _scale_entry(t2, g[i][j])
    r, s = base.signature
    guard = (Var(0), Var(1)) + tuple(remap(gd, {i: i + 2 for i in range(base.n)}) for gd in base.guard)
    box = ((0.5, 1.5), (0.5, 1.5)) + (base.box or tuple((-1.0, 1.0) for _ in range(base.n)))
    return MetricSpec(n, (r + 1, s + 1), _fresh_names(("t", "s"), base.names), tuple(map(tuple, rows)), guard, f"ambient b={b:g} over {base.label}", box)


KINDS = ("flat", "space_form", "sphere", "pp_wave", "product", "warped", "cone", "ambient", "scaled")


def construct(kind: str, params: dict) -> MetricSpec:
    """Dispatch by kind; ``params`` holds numbers and (for composite kinds) MetricSpecs."""
    try:
        if kind == "flat":
            n = int(params["n"])
            return flat(n, tuple(params.get("signature", (0, n))))
        if kind == "space_form":
            return space_form(float(params["kappa"]), int(params["n"]))
        if kind == "sphere":
            return sphere_chart(int(params["n"]), float(params.get("radius", 1.0)))
        if kind == "pp_wave":
            return pp_wave(str(params.get("H", "x^3")), int(params.get("transverse", 2)))
        if kind == "product":
            return product(*params["factors"])
        if kind == "warped":
            return warped(params["k"], params["h"])
        if kind == "cone":
            return cone(params["base"], float(params["b"]))
        if kind == "ambient":
            return ambient(params["base"], float(params["b"]))
        if kind == "scaled":
            return scaled(params["base"], float(params["c"]))
    except KeyError as exc:
        raise ChartError(f"missing parameter {exc} for {kind}") from None
    raise ChartError(f"unknown construction kind {kind!r}; expected one of {', '.join(KINDS)}")


# --- Einstein data ---------------------------------------------------------------------------


@dataclass
class EinsteinCheck:
    einstein: bool
    scal: float
    deviation: float  # max |Ric - scal/n g| and scal spread


def einstein_check(spec: MetricSpec, samples, tol: float = EINSTEIN_TOL) -> EinsteinCheck:
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    cv = Curvature(metric_jet(spec, samples, 2))
    scal = cv.scal.value
    ric = cv.ricci.value
    g = cv.g.value
    dev = float(np.max(np.abs(ric - scal[..., None, None] / spec.n * g)))
    spread = float(np.max(scal) - np.min(scal))
    s0 = float(np.mean(scal))
    dev = max(dev, spread)
    return EinsteinCheck(dev <= tol * max(1.0, abs(s0)), s0, dev)


def einstein_b(spec: MetricSpec, samples) -> float:
    """``b = n(n-1)/scal`` for an Einstein metric with non-zero scalar curvature."""
    chk = einstein_check(spec, samples)
    if not chk.einstein:
        raise ValueError(f"metric is not Einstein on the samples (deviation {chk.deviation:.2e})")
    if abs(chk.scal) < 1e-9:
        raise ValueError("scalar curvature vanishes; no cone/ambient scaling")
    return spec.n * (spec.n - 1) / chk.scal


# --- forms on constructions ------------------------------------------------------------------


def pullback_form(form: FormField, offset: int, n: int) -> FormField:
    """A form on a factor, viewed on a product/cone whose coordinates are shifted by ``offset``."""
    mp = {i: i + offset for i in range(form.dim)}
    coeffs = {tuple(i + offset for i in I): remap(e, mp) for I, e in form.coefficients.items()}
    return FormField(form.degree, n, coeffs)


def volume_form(spec: MetricSpec, offset: int = 0, n: int | None = None, factor: Expr | None = None) -> Field:
    """Metric volume form ``sqrt|det g| dx^1∧…`` of ``spec``, optionally pulled back and scaled."""
    from .exterior import HodgeField

    one = FormField(0, spec.n, {(): Num(1.0)})
    vol = HodgeField(one, spec)
    if n is None and offset == 0 and factor is None:
        return vol
    return _ShiftedField(vol, offset, n or spec.n, factor)


@dataclass(frozen=True)
class _ShiftedField:
    """Field of a factor pulled back to a larger chart (coordinates shifted by ``offset``)."""

    inner: Field
    offset: int
    total: int
    factor: Expr | None = None

    @property
    def degree(self) -> int:
        return self.inner.degree

    @property
    def dim(self) -> int:
        return self.total

    def jet(self, points, order: int) -> Jet:
        points = np.asarray(points, dtype=float)
        m = self.inner.dim
        sub = points[..., self.offset:self.offset + m]
        j = self.inner.jet(sub, order)
        out = Jet.zeros(points.shape[:-1] + (ex.dim_forms(self.total, self.degree),), self.total, order)
        src = ex.combos(m, self.degree)
        idx = ex.combo_index(self.total, self.degree)
        emb = _embed_table(m, self.total, self.offset, order)
        for k, I in enumerate(src):
            out.c[..., idx[tuple(i + self.offset for i in I)], :] = j.c[..., k, :] @ emb
        if self.factor is not None:
            from .expr import eval_jet
            from .jet import jeinsum

            out = jeinsum("...,...I->...I", eval_jet(self.factor, points, order), out)
        return out


def _embed_table(m: int, total: int, offset: int, order: int) -> np.ndarray:
    """Linear map of jet coefficients from ``m`` variables into ``total`` variables."""
    from .jet import multi_indices

    small = multi_indices(m, order)
    big = {tuple(int(v) for v in mi): k for k, mi in enumerate(multi_indices(total, order))}
    E = np.zeros((len(small), len(big)))
    for k, mi in enumerate(small):
        full = (0,) * offset + tuple(int(v) for v in mi) + (0,) * (total - offset - m)
        E[k, big[full]] = 1.0
    return E


def lift_to_cone(beta: Field, base: MetricSpec, b: float, samples=None) -> Field:
    """``t^p dt∧β + sign(b) t^{p+1}/(p+1) dβ`` on the cone ``b dt² + t² g``.

    ``base`` must be Einstein with ``n(n-1)/scal = b`` on the samples.
    """
    if samples is None:
        samples = sample_points(base, 10, seed=0)
    b_expected = einstein_b(base, samples)
    if abs(b_expected - b) > 1e-6 * max(1.0, abs(b)):
        raise ValueError(f"cone scaling b={b:g} does not match n(n-1)/scal = {b_expected:g}")
    n = base.n + 1
    p = beta.degree
    t = Var(0)
    bt = _ShiftedField(beta, 1, n)
    dt_beta = _WedgeDt(bt)
    first = ScaledField(Binary("^", t, Num(float(p))), dt_beta) if p else dt_beta
    second = ScaledField(Binary("*", num(math.copysign(1.0, b) / (p + 1)), Binary("^", t, Num(float(p + 1)))), DerivativeField(bt))
    return SumField(first, second)


@dataclass(frozen=True)
class _WedgeDt:
    """``dx^0 ∧ α`` for a field without ``dx^0`` components."""

    inner: Field

    @property
    def degree(self) -> int:
        return self.inner.degree + 1

    @property
    def dim(self) -> int:
        return self.inner.dim

    def jet(self, points, order: int) -> Jet:
        a = self.inner.jet(points, order)
        W = ex.wedge_basis(self.dim, self.inner.degree)[0]
        return a.map_linear("JI,...I->...J", W)


def parallel_residual(field: Field, spec: MetricSpec, samples) -> np.ndarray:
    """``|∇α|`` (frame components) at each sample."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    cv = Curvature(metric_jet(spec, samples, 2))
    nab = ex.covd(field.jet(samples, 1), field.degree, cv.gamma).value
    out = []
    for b, g in enumerate(cv.g.value):
        from .chart import frame_from_matrix

        S = frame_from_matrix(g).S
        out.append(float(np.linalg.norm(S.T @ nab[b] @ ex.compound(S, field.degree))))
    return np.array(out)


def special_killing_residuals(beta: Field, spec: MetricSpec, samples) -> np.ndarray:
    """Per-sample norms of ``∇_Xβ - X⨼dβ/(p+1)`` and ``∇_X dβ + (p+1)scal/(n(n-1)) X^b∧β``."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n, p = spec.n, beta.degree
    cv = Curvature(metric_jet(spec, samples, 3))
    bj = beta.jet(samples, 2)
    db = ex.ext_d(bj, p)
    nb = ex.covd(bj, p, cv.gamma).value
    ndb = ex.covd(db, p + 1, cv.gamma).value if ex.dim_forms(n, p + 1) else np.zeros(samples.shape[:1] + (n, 0))
    I1 = ex.interior_basis(n, p + 1)
    W0 = ex.wedge_basis(n, p)
    scal = cv.scal.value
    g = cv.g.value
    out = []
    for k in range(samples.shape[0]):
        from .chart import frame_from_matrix

        S = frame_from_matrix(g[k]).S
        r1 = nb[k] - np.einsum("aJI,I->aJ", I1, db.value[k]) / (p + 1) if ex.dim_forms(n, p + 1) else nb[k]
        c = (p + 1) * scal[k] / (n * (n - 1))
        r2 = ndb[k] + c * np.einsum("ac,cJI,I->aJ", g[k], W0, bj.value[k]) if ex.dim_forms(n, p + 1) else np.zeros((n, 0))
        n1 = np.linalg.norm(S.T @ r1 @ ex.compound(S, p))
        n2 = np.linalg.norm(S.T @ r2 @ ex.compound(S, p + 1)) if r2.size else 0.0
        out.append((n1, n2))
    return np.array(out)


# --- ambient comparison ------------------------------------------------------------------------


@dataclass
class AmbientReport:
    b: float
    scal: float
    deviations: np.ndarray
    tractor_rank: int | None = None
    ambient_rank: int | None = None

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviations)) if self.deviations.size else 0.0

    def to_json(self) -> dict:
        return {
            "b": self.b,
            "scal": self.scal,
            "per_point": [float(d) for d in self.deviations],
            "max_deviation": self.max_deviation,
            "tractor_rank": self.tractor_rank,
            "ambient_rank": self.ambient_rank,
        }


def ambient_frame_map(n: int, b: float) -> np.ndarray:
    """Matrix of the isometry from tractor frame coordinates ``(e_-, s_i, e_+)`` to ``(E_t, E_s, s_i)``.

    With ``σ = sign(b)``, ``E_t = ∂_t/√|b|`` and ``E_s = ∂_s/√|b|``:
    ``e_- ↦ (σE_t + E_s)/(2√|b|)`` and ``e_+ ↦ √|b|(E_t - σE_s)``, so the
    Einstein tractor ``e_- - e_+/(2b)`` goes to the parallel field ``E_s/√|b|``.
    """
    rb = math.sqrt(abs(b))
    sg = math.copysign(1.0, b)
    Phi = np.zeros((n + 2, n + 2))
    Phi[0, 0] = sg / (2 * rb)
    Phi[1, 0] = 1.0 / (2 * rb)
    Phi[0, n + 1] = rb
    Phi[1, n + 1] = -sg * rb
    Phi[2:, 1:n + 1] = np.eye(n)
    return Phi


def ambient_compare(base: MetricSpec, samples, with_ranks: bool = False) -> AmbientReport:
    """Compare mapped normal-connection coefficients with Levi-Civita ones of ``ḡ_b`` at ``t = s = 1``."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    b = einstein_b(base, samples)
    chk = einstein_check(base, samples)
    amb = ambient(base, b)
    n = base.n
    Phi = ambient_frame_map(n, b)
    Phinv = np.linalg.inv(Phi)
    rb = math.sqrt(abs(b))
    devs = []
    for x in samples:
        cp = metric_at(base, x, 3)
        A_tr, _ = connection_frame(cp)  # [a, i, j] in (e_-, s, e_+)
        y = np.concatenate([[1.0, 1.0], x])
        G = ConnectionModel(amb, "levi-civita").coefficients(y)  # [a, l, j] ambient coords
        S, _ = frame_jet(metric_jet(base, x, 1))
        Sb = np.zeros((n + 2, n + 2))
        Sb[0, 0] = Sb[1, 1] = 1.0 / rb
        Sb[2:, 2:] = S.value
        dev = 0.0
        for a in range(n):
            dS = np.zeros((n + 2, n + 2))
            dS[2:, 2:] = S.d(a).value
            lc = np.linalg.solve(Sb, dS + G[2 + a] @ Sb)
            mapped = Phi @ A_tr[a] @ Phinv
            dev = max(dev, float(np.max(np.abs(mapped - lc))))
        devs.append(dev)
    rep = AmbientReport(float(b), chk.scal, np.array(devs))
    if with_ranks:
        rep.tractor_rank = curvature_span(base, samples).rank
        lifted = np.hstack([np.ones((samples.shape[0], 2)), samples])
        rep.ambient_rank = curvature_span(amb, lifted, kind="levi-civita").rank
    return rep


# --- gallery ---------------------------------------------------------------------------------


@dataclass
class GalleryEntry:
    """A metric with declared facts; the test suite re-verifies every fact."""

    name: str
    spec: MetricSpec
    einstein: bool | None = None
    scal: float | None = None
    conformally_flat: bool | None = None
    forms: list = field(default_factory=list)  # (label, Field, expected verdict)


def _form(spec: MetricSpec, degree: int, coeffs: dict) -> FormField:
    return ex.form_field(degree, spec, coeffs)


def gallery() -> dict[str, GalleryEntry]:
    out: dict[str, GalleryEntry] = {}

    def add(entry: GalleryEntry):
        out[entry.name] = entry

    for sig in ((0, 3), (1, 3), (2, 2)):
        s = flat(sum(sig), sig)
        add(GalleryEntry(f"flat{sig[0]}{sig[1]}", s, True, 0.0, True))
    s3 = sphere_chart(3)
    add(GalleryEntry("sphere3", s3, True, 6.0, True, [("one", _form(s3, 0, {"": "1"}), "normal")]))
    add(GalleryEntry("sphere4", sphere_chart(4), True, 12.0, True))
    add(GalleryEntry("hyperbolic3", space_form(-1.0, 3), True, -6.0, True))
    s2 = sphere_chart(2)
    h2 = space_form(-1.0, 2)
    s2h2 = product(s2, h2)
    vol_s2 = volume_form(s2, 0, 4)
    add(GalleryEntry("s2xh2", s2h2, False, 0.0, True, [("vol_s2", vol_s2, "normal")]))
    s2h2b = product(s2, space_form(-2.0, 2))
    add(GalleryEntry("s2xh2_scal-4", s2h2b, False, -2.0, False, [("vol_s2", vol_s2, "conformal-only")]))
    s2s2 = product(s2, s2)
    add(GalleryEntry("s2xs2", s2s2, True, 4.0, False, [("one", _form(s2s2, 0, {"": "1"}), "normal")]))
    pp = pp_wave("x^3")
    add(GalleryEntry("ppwave", pp, False, 0.0, False, [("du", _form(pp, 1, {"1": "1"}), "normal")]))
    s2h3 = product(s2, space_form(-1.0, 3))
    add(GalleryEntry("s2xh3", s2h3, False, -4.0, True, [("vol_s2", volume_form(s2, 0, 5), "normal")]))
    h2m3 = space_form(-3.0, 2)
    s2h2h2 = product(s2, h2m3, h2m3)
    add(GalleryEntry("s2xh2xh2", s2h2h2, False, -10.0, False, [("vol_s2", volume_form(s2, 0, 6), "normal")]))
    generic = MetricSpec(
        4,
        (1, 3),
        ("x1", "x2", "x3", "x4"),
        tuple(
            tuple(parse_expr(t, 4) for t in row)
            for row in [
                ["1+x1^2*x2", "0.3*sin(x3)", "0.1*x1*x4", "0"],
                ["0.3*sin(x3)", "2+cos(x1*x2)", "0", "0.2*x3"],
                ["0.1*x1*x4", "0", "exp(0.3*x4)", "0.1*x1"],
                ["0", "0.2*x3", "0.1*x1", "-1-0.2*x2^2"],
            ]
        ),
        (),
        "generic Lorentzian",
        tuple((-0.5, 0.5) for _ in range(4)),
    )
    add(GalleryEntry("generic4", generic, False, None, False))
    add(GalleryEntry("cone_s2", cone(s2, 1.0), True, 0.0, True))
    add(GalleryEntry("ambient_s3", ambient(s3, 1.0), True, 0.0, True))
    add(GalleryEntry("warped_s2s2", warped(s2, s2), True, 20.0, True))
    return out
