"""Numerical holonomy algebras of the tractor and Levi-Civita connections.

Elements are collected at a base point in a pseudo-orthonormal basis:
curvature values transported back along straight segments, and logarithms
of small loop transports divided by the enclosed coordinate area.  The
span is a *lower bound* for the holonomy algebra ("rank >= k").
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import exterior as ex
from .chart import ChartError, MetricSpec, frame_from_matrix, metric_jet, sample_points
from .curvature import Curvature
from .expr import eval_jet
from .jet import Jet
from .tractor import connection_jet, tractor_metric

RANK_REL_TOL = 1e-8
RANK_ABS_TOL = 1e-7
FIXED_TOL = 1e-7
RENORM_EVERY = 16


# --- connections -------------------------------------------------------------------------------


@dataclass(frozen=True)
class ConnectionModel:
    """A linear connection ``d + A`` on a bundle trivialised over a chart.

    ``kind`` is ``"tractor"`` (normal conformal connection on the standard
    tractor bundle, coordinate-adapted basis) or ``"levi-civita"`` (tangent
    bundle, coordinate basis).
    """

    spec: MetricSpec
    kind: str = "tractor"

    def __post_init__(self):
        if self.kind not in ("tractor", "levi-civita"):
            raise ValueError(f"unknown connection kind {self.kind!r}")

    @property
    def rank(self) -> int:
        return self.spec.n + 2 if self.kind == "tractor" else self.spec.n

    def coefficient_jet(self, points, order: int = 0) -> Jet:
        """``A[..., a, i, j]``: ``∇_{∂_a} e_j = A[a, i, j] e_i``."""
        gj = metric_jet(self.spec, points, order + 2)
        cv = Curvature(gj)
        if self.kind == "tractor":
            return connection_jet(cv)
        G = cv.gamma  # [l, a, j]
        return Jet(np.einsum("...lajZ->...aljZ", G.c), G.n, G.order)

    def coefficients(self, points) -> np.ndarray:
        return self.coefficient_jet(points, 0).value

    def metric(self, points) -> np.ndarray:
        g = metric_jet(self.spec, points, 0).value
        if self.kind == "levi-civita":
            return g
        n = self.spec.n
        h = np.zeros(g.shape[:-2] + (n + 2, n + 2))
        h[..., 0, n + 1] = h[..., n + 1, 0] = 1.0
        h[..., 1:n + 1, 1:n + 1] = g
        return h

    def curvature(self, points) -> np.ndarray:
        """``F[..., a, b, i, j] = ∂_a A_b - ∂_b A_a + [A_a, A_b]``."""
        A = self.coefficient_jet(points, 1)
        n = self.spec.n
        dA = np.stack([A.d(a).value for a in range(n)], axis=-4)
        A0 = A.value
        comm = np.einsum("...aik,...bkj->...abij", A0, A0) - np.einsum("...bik,...akj->...abij", A0, A0)
        return dA - np.swapaxes(dA, -3, -4) + comm

    def frame_change(self, point) -> tuple[np.ndarray, np.ndarray]:
        """``B`` whose columns are the pseudo-orthonormal basis at ``point``, and ``η = B^T h B``."""
        g = metric_jet(self.spec, point, 0).value
        fr = frame_from_matrix(g)
        if self.kind == "levi-civita":
            B = fr.S
        else:
            n = self.spec.n
            B = np.eye(n + 2)
            B[1:n + 1, 1:n + 1] = fr.S
        eta = B.T @ self.metric(point) @ B
        return B, np.round(eta, 12)


def _check_domain(spec: MetricSpec, pts: np.ndarray):
    flat = pts.reshape(-1, spec.n)
    for gd in spec.guard:
        v = eval_jet(gd, flat, 0).value
        if np.any(~(v > 0)):
            raise ChartError("path leaves the chart domain")


# --- transport ---------------------------------------------------------------------------------


def transport_polylines(model: ConnectionModel, verts, steps: int = 32) -> np.ndarray:
    """Parallel transport along batched polylines ``verts[L, V, n]``.

    Returns ``P[L]`` mapping the fibre at ``verts[:, 0]`` to the fibre at
    ``verts[:, -1]``.  Classical RK4 on ``P' = -A(γ')P`` per segment, with a
    polar correction against the bundle metric every ``RENORM_EVERY`` steps.
    """
    verts = np.asarray(verts, dtype=float)
    if verts.ndim == 2:
        verts = verts[None]
    L, V, n = verts.shape
    N = model.rank
    P = np.broadcast_to(np.eye(N), (L, N, N)).copy()
    h0 = model.metric(verts[:, 0])
    count = 0
    for k in range(V - 1):
        x0, x1 = verts[:, k], verts[:, k + 1]
        vel = x1 - x0
        if not np.any(vel):
            continue
        ts = np.linspace(0.0, 1.0, 2 * steps + 1)
        path = x0[:, None, :] + ts[None, :, None] * vel[:, None, :]
        _check_domain(model.spec, path)
        A = model.coefficients(path)  # [L, 2s+1, a, i, j]
        M = -np.einsum("la,ltaij->ltij", vel, A)
        dt = 1.0 / steps
        for s in range(steps):
            m0, mh, m1 = M[:, 2 * s], M[:, 2 * s + 1], M[:, 2 * s + 2]
            k1 = m0 @ P
            k2 = mh @ (P + 0.5 * dt * k1)
            k3 = mh @ (P + 0.5 * dt * k2)
            k4 = m1 @ (P + dt * k3)
            P = P + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            count += 1
            if count % RENORM_EVERY == 0:
                P = _renormalize(P, model.metric(path[:, 2 * s + 2]), h0)
    return _renormalize(P, model.metric(verts[:, -1]), h0)


def _renormalize(P: np.ndarray, h1: np.ndarray, h0: np.ndarray) -> np.ndarray:
    """Polar correction so that ``P^T h1 P = h0``."""
    out = np.empty_like(P)
    for i in range(P.shape[0]):
        Q = np.linalg.solve(h0[i], P[i].T @ h1[i] @ P[i])
        out[i] = P[i] @ np.real(scipy.linalg.fractional_matrix_power(Q, -0.5))
    return out


def loop_transport(spec: MetricSpec, loop, steps: int = 32, kind: str = "tractor") -> np.ndarray:
    """Transport matrix around a closed polyline (coordinate-adapted basis)."""
    loop = np.asarray(loop, dtype=float)
    if not np.allclose(loop[0], loop[-1]):
        raise ValueError("loop must start and end at the same point")
    return transport_polylines(ConnectionModel(spec, kind), loop[None], steps)[0]


def rectangle(point, i: int, j: int, side: float) -> np.ndarray:
    """Closed axis-aligned square in the ``(x_i, x_j)`` plane starting at ``point``."""
    point = np.asarray(point, dtype=float)
    ei = np.eye(point.size)[i] * side
    ej = np.eye(point.size)[j] * side
    return np.array([point, point + ei, point + ei + ej, point + ej, point])


def lasso(point, offset, i: int, j: int, side: float) -> np.ndarray:
    """Go out along ``offset``, run a square in the ``(x_i, x_j)`` plane, come back."""
    point = np.asarray(point, dtype=float)
    c = point + np.asarray(offset, dtype=float)
    return np.concatenate([[point], rectangle(c, i, j, side), [point]])


def _log(P: np.ndarray) -> np.ndarray:
    return np.real(scipy.linalg.logm(P))


# --- reports -----------------------------------------------------------------------------------


def causal_label(norm: float, tol: float = 1e-9) -> str:
    if abs(norm) <= tol:
        return "null"
    return "timelike" if norm < 0 else "spacelike"


@dataclass
class HolonomyReport:
    """Spanned subalgebra at a base point, in a basis with constant metric ``eta``."""

    kind: str
    basepoint: np.ndarray
    eta: np.ndarray
    basis: list
    singular_values: np.ndarray
    provenance: dict = field(default_factory=dict)
    fixed_vectors: list = field(default_factory=list)
    fixed_forms: dict = field(default_factory=dict)
    invariant_subspaces: list = field(default_factory=list)

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def dim(self) -> int:
        return self.eta.shape[0]

    def skew_defect(self) -> float:
        return max((float(np.max(np.abs(self.eta @ A + A.T @ self.eta))) for A in self.basis), default=0.0)

    def to_json(self) -> dict:
        return {
            "connection": self.kind,
            "basepoint": [float(x) for x in self.basepoint],
            "rank": self.rank,
            "rank_statement": f"rank >= {self.rank}",
            "eta": self.eta.tolist(),
            "singular_values": [float(s) for s in self.singular_values],
            "basis": [A.tolist() for A in self.basis],
            "fixed_vectors": self.fixed_vectors,
            "fixed_forms": {str(k): v for k, v in sorted(self.fixed_forms.items())},
            "invariant_subspaces": self.invariant_subspaces,
            "provenance": self.provenance,
        }


def span_report(elements, eta, kind, basepoint, provenance=None) -> HolonomyReport:
    """Orthonormalised span of matrices (rank via relative and absolute singular-value cut)."""
    N = eta.shape[0]
    if len(elements) == 0:
        return HolonomyReport(kind, np.asarray(basepoint), eta, [], np.zeros(0), dict(provenance or {}))
    M = np.array([np.asarray(E).reshape(-1) for E in elements])
    _, s, Vt = np.linalg.svd(M, full_matrices=False)
    cut = max(RANK_REL_TOL * (s[0] if s.size else 0.0), RANK_ABS_TOL)
    r = int(np.sum(s > cut))
    basis = [Vt[k].reshape(N, N) for k in range(r)]
    # project onto the η-skew part to remove round-off
    basis = [0.5 * (A - np.linalg.solve(eta, A.T @ eta)) for A in basis]
    return HolonomyReport(kind, np.asarray(basepoint, dtype=float), eta, basis, s, dict(provenance or {}))


def _to_base_frame(model: ConnectionModel, basepoint, samples, mats, steps: int):
    """Transport endomorphisms ``mats[k]`` at ``samples[k]`` back to the base frame."""
    B, eta = model.frame_change(basepoint)
    Binv = np.linalg.inv(B)
    segs = np.stack([np.broadcast_to(basepoint, samples.shape), samples], axis=1)
    P = transport_polylines(model, segs, steps)
    out = []
    for Pk, Ek in zip(P, mats):
        Pinv = np.linalg.inv(Pk)
        out.extend(Binv @ Pinv @ E @ Pk @ B for E in Ek)
    return out, eta


def curvature_elements(model: ConnectionModel, basepoint, samples, steps: int = 32):
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    F = model.curvature(samples)  # [k, a, b, i, j]
    n = model.spec.n
    mats = [[F[k, a, b] for a in range(n) for b in range(a + 1, n)] for k in range(samples.shape[0])]
    return _to_base_frame(model, np.asarray(basepoint, dtype=float), samples, mats, steps)


def curvature_span(spec: MetricSpec, samples, basepoint=None, kind: str = "tractor", steps: int = 32) -> HolonomyReport:
    """Span of curvature values ``F(∂_a, ∂_b)`` at the samples, transported to the base point."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    base = samples[0] if basepoint is None else np.asarray(basepoint, dtype=float)
    model = ConnectionModel(spec, kind)
    els, eta = curvature_elements(model, base, samples, steps)
    return span_report(els, eta, kind, base, {"source": "curvature-span", "samples": int(samples.shape[0]), "steps": steps})


def estimate_holonomy(
    spec: MetricSpec,
    basepoint,
    n_loops: int = 50,
    radius: float = 0.01,
    seed: int = 0,
    steps: int = 16,
    kind: str = "tractor",
    tether: float = 0.2,
) -> HolonomyReport:
    """Loop logarithms (scaled by area) merged with transported curvature.

    Loops alternate between squares at the base point and lassos whose
    centres are drawn uniformly within ``tether`` of the base point; loop
    ``k`` depends only on ``(seed, k)``, so the rank is monotone in ``n_loops``.
    """
    if not 1e-3 <= radius <= 1e-1:
        raise ValueError("loop radius must lie in [1e-3, 1e-1]")
    base = np.asarray(basepoint, dtype=float)
    n = spec.n
    if not spec.admissible(base):
        raise ChartError("base point violates the chart guard")
    model = ConnectionModel(spec, kind)
    B, eta = model.frame_change(base)
    Binv = np.linalg.inv(B)
    squares, centres = [], [base]
    for k in range(n_loops):
        rng = np.random.default_rng([seed, k])
        i, j = sorted(rng.choice(n, size=2, replace=False))
        if k % 2 == 0:
            squares.append((base, i, j))
        else:
            off = tether * (2 * rng.random(n) - 1)
            squares.append((base + off, i, j))
            centres.append(base + off)
    els = []
    if squares:
        # a lasso is the square at its centre conjugated by the tether transport;
        # inverting the leg exactly keeps its RK4 error out of the 1/r² scaling
        P = transport_polylines(model, np.array([rectangle(c, i, j, radius) for c, i, j in squares]), steps)
        legs = transport_polylines(model, np.array([[base, c] for c, _, _ in squares]), steps)
        els = [Binv @ _log(np.linalg.solve(Lk, Pk @ Lk)) @ B / radius**2 for Pk, Lk in zip(P, legs)]
    cel, _ = curvature_elements(model, base, np.array(centres), steps)
    prov = {
        "source": "loop-transport+curvature-span",
        "loops": int(n_loops),
        "radius": float(radius),
        "seed": int(seed),
        "steps": int(steps),
        "curvature_points": len(centres),
    }
    return span_report(els + cel, eta, kind, base, prov)


# --- invariant structure -----------------------------------------------------------------------


def _null_space(M: np.ndarray, tol: float) -> np.ndarray:
    if M.size == 0:
        return np.eye(M.shape[1])
    _, s, Vt = np.linalg.svd(M)
    scale = max(1.0, s[0] if s.size else 0.0)
    r = int(np.sum(s > tol * scale))
    return Vt[r:].T


def _subspace_type(U: np.ndarray, eta: np.ndarray, tol: float = 1e-8) -> str:
    G = U.T @ eta @ U
    if np.max(np.abs(G), initial=0.0) <= tol:
        return "totally isotropic"
    s = np.linalg.svd(G, compute_uv=False)
    return "degenerate" if np.sum(s > tol * max(1.0, s[0])) < U.shape[1] else "non-degenerate"


def _invariance(basis, U: np.ndarray) -> tuple[float, float]:
    """``max |(1-Π) A Π|`` and ``max |tr(A|_U)|`` for an orthonormal basis ``U``."""
    Pi = U @ U.T
    inv = max((float(np.linalg.norm((np.eye(len(Pi)) - Pi) @ A @ U)) for A in basis), default=0.0)
    tr = max((abs(float(np.trace(U.T @ A @ U))) for A in basis), default=0.0)
    return inv, tr


def form_plane(omega: np.ndarray, m: int, q: int, eta: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Vectors ``θ^♯`` for the covectors with ``θ∧ω = 0`` (orthonormal columns)."""
    if q == m:
        return np.eye(m)
    Wm = np.einsum("cJI,I->Jc", ex.wedge_basis(m, q), omega)
    cov = _null_space(Wm, tol)
    vecs = np.linalg.solve(eta, cov)
    Q, _ = np.linalg.qr(vecs)
    return Q


def invariant_structure(report: HolonomyReport, degrees=(1,), seed: int = 0) -> HolonomyReport:
    """Fixed vectors, fixed forms of the requested degrees and invariant subspaces."""
    eta = report.eta
    N = report.dim
    basis = report.basis
    # fixed vectors
    K = _null_space(np.vstack(basis) if basis else np.zeros((0, N)), FIXED_TOL)
    fixed = []
    for v in K.T:
        nv = float(v @ eta @ v)
        fixed.append({"vector": v.tolist(), "norm": nv, "causal": causal_label(nv)})
    report.fixed_vectors = fixed
    # fixed forms
    report.fixed_forms = {}
    for q in degrees:
        if not 1 <= q <= N:
            raise ValueError(f"form degree {q} outside 1..{N}")
        D = np.vstack([ex.derivation_matrix(A, q) for A in basis]) if basis else np.zeros((0, ex.dim_forms(N, q)))
        Z = _null_space(D, FIXED_TOL)
        found = []
        if basis:
            for w in Z.T:
                from .twistor import plucker_residual

                pl = plucker_residual(w, q, N)
                entry = {"coefficients": w.tolist(), "plucker": pl, "decomposable": pl < 1e-8}
                if entry["decomposable"]:
                    U = form_plane(w, N, q, eta)
                    inv, tr = _invariance(basis, U)
                    entry["subspace"] = {
                        "dim": int(U.shape[1]),
                        "type": _subspace_type(U, eta),
                        "basis": U.T.tolist(),
                        "invariance_residual": inv,
                        "annihilation_residual": max(float(np.linalg.norm(ex.derivation_matrix(A, q) @ w)) for A in basis),
                    }
                found.append(entry)
        report.fixed_forms[q] = {"dimension": int(Z.shape[1]), "forms": found}
    report.invariant_subspaces = _block_analysis(report, seed)
    return report


def _block_analysis(report: HolonomyReport, seed: int) -> list:
    """Invariant subspaces from the metric-self-adjoint commutant of the span."""
    basis, eta, N = report.basis, report.eta, report.dim
    out = []
    if not basis:
        out.append({"dim": N, "type": "non-degenerate", "dilated": False, "source": "trivial span", "basis": np.eye(N).tolist()})
        return out
    I = np.eye(N)
    rows = np.vstack([np.kron(A, I) - np.kron(I, A.T) for A in basis])  # vec(AX - XA), row-major
    C = _null_space(rows, 1e-9)
    sa = []
    for c in C.T:
        X = c.reshape(N, N)
        sa.append(0.5 * (X + np.linalg.solve(eta, X.T @ eta)))
    rng = np.random.default_rng(seed)
    X = sum(rng.standard_normal() * Y for Y in sa)
    w, V = np.linalg.eig(X)
    used = np.zeros(N, dtype=bool)
    for k in range(N):
        if used[k]:
            continue
        grp = np.abs(w - w[k]) < 1e-6 * max(1.0, np.max(np.abs(w)))
        grp |= np.abs(w - np.conj(w[k])) < 1e-6 * max(1.0, np.max(np.abs(w)))
        used |= grp
        cols = V[:, grp]
        rk = np.linalg.matrix_rank(np.hstack([cols.real, cols.imag]), tol=1e-8)
        U = scipy.linalg.orth(np.hstack([cols.real, cols.imag]), rcond=1e-8)[:, :rk]
        if U.shape[1] == N:
            continue
        inv, tr = _invariance(basis, U)
        out.append(
            {
                "dim": int(U.shape[1]),
                "type": _subspace_type(U, eta),
                "dilated": bool(tr > 1e-7),
                "source": "commutant eigenspace",
                "invariance_residual": inv,
                "basis": U.T.tolist(),
            }
        )
    return out


def annihilates(report: HolonomyReport, v) -> float:
    """``max_A |A v|`` over the span basis."""
    v = np.asarray(v, dtype=float)
    return max((float(np.linalg.norm(A @ v)) for A in report.basis), default=0.0)


def default_samples(spec: MetricSpec, count: int = 20, seed: int = 0) -> np.ndarray:
    return sample_points(spec, count, seed)
