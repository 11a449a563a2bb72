"""Coordinate charts carrying a pseudo-Riemannian metric.

Everything downstream works in coordinate components; frames only enter
where signature signs matter (Hodge star, tractor splitting, norms).
The signature ``(r, s)`` counts ``r`` negative and ``s`` positive directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Sequence

import numpy as np

from .expr import DEFAULT_ORDER, Expr, Num, Unary, Binary, eval_jet, evaluate, parse_expr, to_text
from .jet import Jet, jet_size

NULL_TOL = 1e-10


class ChartError(ValueError):
    pass


class GuardViolation(ChartError):
    pass


class SingularMetric(ChartError):
    pass


class FrameBreakdown(ChartError):
    pass


@dataclass(frozen=True)
class MetricSpec:
    """Metric ``g_ij`` given by expressions in the chart coordinates.

    ``guard`` is a tuple of expressions that must all be positive at an
    admissible point; ``box`` is an optional per-coordinate sampling range.
    Two-dimensional specs are accepted as factors of products and warped
    products; conformal quantities require ``n >= 3`` and refuse otherwise.
    """

    n: int
    signature: tuple[int, int]
    names: tuple[str, ...]
    g: tuple[tuple[Expr, ...], ...]
    guard: tuple[Expr, ...] = ()
    label: str = ""
    box: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ChartError(f"dimension must be at least 2, got {self.n}")
        r, s = self.signature
        if r < 0 or s < 0 or r + s != self.n:
            raise ChartError(f"signature {self.signature} incompatible with dimension {self.n}")
        if len(self.names) != self.n or len(set(self.names)) != self.n:
            raise ChartError("coordinate names must be n distinct strings")
        if len(self.g) != self.n or any(len(row) != self.n for row in self.g):
            raise ChartError("metric matrix must be n x n")
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if self.g[i][j] != self.g[j][i]:
                    raise ChartError(f"metric is not symmetric: g{i + 1}{j + 1} != g{j + 1}{i + 1}")
        if self.box is not None and len(self.box) != self.n:
            raise ChartError("sampling box must give one interval per coordinate")

    def admissible(self, point) -> bool:
        point = np.asarray(point, dtype=float)
        try:
            return all(float(evaluate(gd, point)) > 0 for gd in self.guard)
        except ValueError:
            return False

    def to_json(self) -> dict:
        doc = {
            "label": self.label,
            "dim": self.n,
            "signature": list(self.signature),
            "coords": list(self.names),
            "g": [[to_text(e, self.names) for e in row] for row in self.g],
        }
        if self.guard:
            doc["guard"] = [to_text(e, self.names) for e in self.guard]
        if self.box is not None:
            doc["box"] = [list(b) for b in self.box]
        return doc


def load_metric_spec(document: dict) -> MetricSpec:
    """Build a :class:`MetricSpec` from the metric JSON document."""
    try:
        n = int(document["dim"])
        sig = tuple(int(v) for v in document["signature"])
        names = tuple(document.get("coords") or [f"x{i + 1}" for i in range(n)])
        rows = document["g"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ChartError(f"malformed metric document: {exc}") from None
    if len(sig) != 2:
        raise ChartError("signature must be [r, s]")
    if len(rows) != n or any(len(row) != n for row in rows):
        raise ChartError("metric matrix must be dim x dim")
    g = tuple(tuple(parse_expr(str(t), n, names) for t in row) for row in rows)
    guard_doc = document.get("guard") or []
    if isinstance(guard_doc, str):
        guard_doc = [guard_doc]
    guard = tuple(parse_expr(str(t), n, names) for t in guard_doc)
    box = document.get("box")
    if box is not None:
        box = tuple((float(a), float(b)) for a, b in box)
    return MetricSpec(n, sig, names, g, guard, str(document.get("label", "")), box)


def metric_jet(spec: MetricSpec, points, order: int) -> Jet:
    """Jet of the metric matrix at (possibly batched) points, shape ``(..., n, n)``."""
    points = np.asarray(points, dtype=float)
    n = spec.n
    out = Jet.zeros(points.shape[:-1] + (n, n), n, order)
    for i in range(n):
        for j in range(i, n):
            e = spec.g[i][j]
            if isinstance(e, Num) and e.value == 0.0:
                continue
            c = eval_jet(e, points, order).c
            out.c[..., i, j, :] = c
            out.c[..., j, i, :] = c
    return out


@dataclass
class ChartPoint:
    """Metric data at one admissible point of a chart."""

    spec: MetricSpec
    coords: np.ndarray
    order: int
    gjet: Jet

    @property
    def n(self) -> int:
        return self.spec.n

    @cached_property
    def g(self) -> np.ndarray:
        return self.gjet.value

    @cached_property
    def ginv(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    @cached_property
    def frame(self) -> "Frame":
        return orthonormal_coframe(self)


def metric_at(spec: MetricSpec, point, order: int = DEFAULT_ORDER) -> ChartPoint:
    point = np.asarray(point, dtype=float)
    if point.shape != (spec.n,):
        raise ChartError(f"point must have {spec.n} coordinates")
    if not spec.admissible(point):
        raise GuardViolation(f"point {point.tolist()} violates the chart guard")
    gj = metric_jet(spec, point, order)
    g = gj.value
    det = np.linalg.det(g)
    if not np.isfinite(det) or abs(det) <= 1e-12:
        raise SingularMetric(f"metric is singular at {point.tolist()} (det={det:.3e})")
    neg = int(np.sum(np.linalg.eigvalsh(g) < 0))
    if neg != spec.signature[0]:
        raise SingularMetric(f"metric at {point.tolist()} has {neg} negative directions, expected {spec.signature[0]}")
    return ChartPoint(spec, point, order, gj)


@dataclass(frozen=True)
class Frame:
    """Pseudo-orthonormal frame: columns of ``S`` are ``s_1..s_n``."""

    S: np.ndarray
    eps: np.ndarray

    @property
    def r(self) -> int:
        return int(np.sum(self.eps < 0))

    def coframe(self, g: np.ndarray) -> np.ndarray:
        """Rows are the 1-forms ``s_i^b`` in coordinate components."""
        return self.S.T @ g


def frame_jet(G: Jet, tol: float = NULL_TOL) -> tuple[Jet, np.ndarray]:
    """Pivoted Gram–Schmidt on a jet of a symmetric non-degenerate matrix.

    Pivot decisions are taken on the base-point values, so the result is a
    smooth local frame whose derivatives are available from the jet.  At
    every step the remaining candidate with the largest ``|g(v,v)|`` is
    normalized.  If every candidate is null, pairwise sums and differences
    are tried and the first summand is retired.  Timelike vectors are
    ordered first and the last vector is flipped to match the coordinate
    orientation.  Returns ``(S, eps)`` with the frame vectors as columns.
    """
    from .jet import jeinsum, power

    n = G.shape[-1]
    g0 = G.value
    scale = max(float(np.max(np.abs(g0))), 1e-300)
    cands = [Jet.constant(np.eye(n)[i], G.n, G.order) for i in range(n)]
    vecs: list[Jet] = []
    signs: list[float] = []

    def ip(a: Jet, b: Jet) -> Jet:
        return jeinsum("i,i->", a, jeinsum("ij,j->i", G, b))

    def project(v: Jet) -> Jet:
        for s, e in zip(vecs, signs):
            v = v - jeinsum(",i->i", ip(s, v), s) * e
        return v

    while cands:
        proj = [project(v) for v in cands]
        q = [ip(p, p) for p in proj]
        k = int(np.argmax([abs(float(x.value)) for x in q]))
        if abs(float(q[k].value)) > tol * scale:
            v, qk = proj[k], q[k]
            cands.pop(k)
        else:
            best = None
            for a in range(len(proj)):
                for b in range(a + 1, len(proj)):
                    for sgn in (1.0, -1.0):
                        w = proj[a] + proj[b] * sgn
                        qw = ip(w, w)
                        if best is None or abs(float(qw.value)) > abs(float(best[0].value)):
                            best = (qw, w, a)
            if best is None or abs(float(best[0].value)) <= tol * scale:
                raise FrameBreakdown("all remaining candidate vectors are null; try a different point")
            qk, v, a = best
            cands.pop(a)
        sign = 1.0 if float(qk.value) > 0 else -1.0
        vecs.append(jeinsum(",i->i", power(qk * sign, -0.5), v))
        signs.append(sign)
    order = sorted(range(n), key=lambda i: (signs[i] > 0, i))
    S = Jet(np.stack([vecs[i].c for i in order], axis=1), G.n, min(v.order for v in vecs))
    eps = np.array([signs[i] for i in order])
    if np.linalg.det(S.value) < 0:
        S.c[:, -1, :] *= -1
    return S, eps


def frame_from_matrix(g: np.ndarray, tol: float = NULL_TOL) -> Frame:
    """Pointwise frame of a symmetric non-degenerate matrix (see :func:`frame_jet`)."""
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ChartError("frame_from_matrix expects a square matrix")
    S, eps = frame_jet(Jet.constant(g, 1, 0), tol)
    return Frame(S.value.copy(), eps)


def orthonormal_coframe(cp: ChartPoint) -> Frame:
    return frame_from_matrix(cp.g)


def conformal_rescale(spec: MetricSpec, phi: Expr) -> MetricSpec:
    """Metric ``exp(-2 phi) g`` on the same chart."""
    if isinstance(phi, Num) and phi.value == 0.0:
        return spec
    factor = Unary("exp", Unary("neg", Binary("*", Num(2.0), phi)))
    g = tuple(
        tuple(e if (isinstance(e, Num) and e.value == 0.0) else Binary("*", factor, e) for e in row)
        for row in spec.g
    )
    return replace(spec, g=g, label=f"{spec.label} rescaled" if spec.label else "rescaled")


def sample_points(spec: MetricSpec, count: int, seed: int = 0, box=None, max_tries: int = 100000) -> np.ndarray:
    """Seeded admissible points drawn uniformly from the sampling box."""
    rng = np.random.default_rng(seed)
    box = box or spec.box or tuple((-1.0, 1.0) for _ in range(spec.n))
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    pts = []
    tries = 0
    while len(pts) < count:
        tries += 1
        if tries > max_tries:
            raise ChartError("could not find enough admissible sample points")
        p = lo + (hi - lo) * rng.random(spec.n)
        if not spec.admissible(p):
            continue
        g = metric_jet(spec, p, 0).value
        det = np.linalg.det(g)
        if not np.isfinite(det) or abs(det) <= 1e-8:
            continue
        if int(np.sum(np.linalg.eigvalsh(g) < 0)) != spec.signature[0]:
            continue
        pts.append(p)
    return np.array(pts)


def spec_from_strings(rows: Sequence[Sequence[str]], signature, names=None, guard=(), label="", box=None) -> MetricSpec:
    """Convenience constructor from expression strings."""
    n = len(rows)
    names = tuple(names or [f"x{i + 1}" for i in range(n)])
    g = tuple(tuple(parse_expr(t, n, names) for t in row) for row in rows)
    gd = tuple(parse_expr(t, n, names) for t in guard)
    return MetricSpec(n, tuple(signature), names, g, gd, label, tuple(map(tuple, box)) if box else None)
