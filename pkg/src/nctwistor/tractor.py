"""Tractor forms and the normal conformal connection in a metric splitting.

The tractor fibre is ``R^{n+2}`` with basis ``(e_-, e_1..e_n, e_+)`` and
metric ``<e_-, e_+> = 1``.  Two bases are used:

* the *coordinate-adapted* basis ``(e_-, ∂_1..∂_n, e_+)``, where the metric
  is ``[[0,0,1],[0,g,0],[1,0,0]]`` and the connection coefficients are
  rational in ``g``, ``Γ`` and ``K`` — used for differentiation and transport;
* the *frame* basis ``(e_-, s_1..s_n, e_+)`` with the constant metric
  ``η``, in which connection values are skew matrices.

A tractor ``(p+1)``-form ``α = e_-^b∧α_- + α_0 + e_-^b∧e_+^b∧α_∓ + e_+^b∧α_+``
is stored by its four components (coordinate components on ``M``) or,
equivalently, as a ``(p+1)``-form on ``R^{n+2}``.  Since ``e_-^b = E^{n+1}``
and ``e_+^b = E^0`` for the dual basis ``E^0..E^{n+1}``, the two are related
by a fixed signed permutation (:func:`split_matrix`).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import exterior as ex
from .chart import ChartPoint, MetricSpec, frame_jet, metric_jet
from .curvature import Curvature
from .exterior import FormValue, dim_forms
from .jet import Jet, jeinsum, matrix_inverse

# --- algebra -------------------------------------------------------------------------------


def tractor_metric(g: np.ndarray) -> np.ndarray:
    """Tractor metric in the coordinate-adapted basis."""
    n = g.shape[-1]
    h = np.zeros(g.shape[:-2] + (n + 2, n + 2))
    h[..., 0, n + 1] = h[..., n + 1, 0] = 1.0
    h[..., 1:n + 1, 1:n + 1] = g
    return h


def tractor_metric_frame(eps: np.ndarray) -> np.ndarray:
    """Constant tractor metric ``η`` in the frame basis."""
    return tractor_metric(np.diag(np.asarray(eps, dtype=float)))


def comp_sizes(n: int, p: int) -> tuple[int, int, int, int]:
    return dim_forms(n, p), dim_forms(n, p + 1), dim_forms(n, p - 1), dim_forms(n, p)


@lru_cache(maxsize=None)
def split_matrix(n: int, p: int) -> np.ndarray:
    """Matrix from concatenated components ``(α_-, α_0, α_∓, α_+)`` to ``Λ^{p+1} R^{n+2}``."""
    m = n + 2
    sizes = comp_sizes(n, p)
    P = np.zeros((dim_forms(m, p + 1), sum(sizes)))
    idx = ex.combo_index(m, p + 1)
    col = 0
    prefixes = [(n + 1,), (), (n + 1, 0), (0,)]
    degrees = [p, p + 1, p - 1, p]
    for pre, q in zip(prefixes, degrees):
        for I in ex.combos(n, q):
            seq = pre + tuple(i + 1 for i in I)
            s = ex.perm_sign(seq)
            P[idx[tuple(sorted(seq))], col] = s
            col += 1
    return P


@dataclass(frozen=True)
class TractorForm:
    """Pointwise tractor ``(p+1)``-form by its four components (coordinate basis)."""

    p: int
    n: int
    minus: np.ndarray
    zero: np.ndarray
    mixed: np.ndarray
    plus: np.ndarray

    def __post_init__(self):
        for name, size in zip(("minus", "zero", "mixed", "plus"), comp_sizes(self.n, self.p)):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(size))

    @classmethod
    def from_values(cls, am: FormValue, a0: FormValue, amp: FormValue, ap: FormValue) -> "TractorForm":
        return cls(am.degree, am.dim, am.coeffs, a0.coeffs, amp.coeffs, ap.coeffs)

    @classmethod
    def from_vector(cls, v: np.ndarray, n: int, p: int) -> "TractorForm":
        sizes = np.cumsum((0,) + comp_sizes(n, p))
        return cls(p, n, *(v[sizes[i]:sizes[i + 1]] for i in range(4)))

    @classmethod
    def zero_form(cls, n: int, p: int) -> "TractorForm":
        return cls.from_vector(np.zeros(sum(comp_sizes(n, p))), n, p)

    def vector(self) -> np.ndarray:
        return np.concatenate([self.minus, self.zero, self.mixed, self.plus])

    def components(self) -> tuple[FormValue, FormValue, FormValue, FormValue]:
        return (
            FormValue(self.p, self.n, self.minus),
            FormValue(self.p + 1, self.n, self.zero),
            FormValue(self.p - 1, self.n, self.mixed),
            FormValue(self.p, self.n, self.plus),
        )

    def to_big(self) -> np.ndarray:
        return split_matrix(self.n, self.p) @ self.vector()

    @classmethod
    def from_big(cls, beta: np.ndarray, n: int, p: int) -> "TractorForm":
        return cls.from_vector(split_matrix(n, p).T @ beta, n, p)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector()))

    def __sub__(self, other: "TractorForm") -> "TractorForm":
        return TractorForm.from_vector(self.vector() - other.vector(), self.n, self.p)


def algebra_action(A: np.ndarray, tf: TractorForm) -> TractorForm:
    """Natural action of an endomorphism of ``R^{n+2}`` on a tractor form (same basis)."""
    A = np.asarray(A, dtype=float)
    if A.shape != (tf.n + 2, tf.n + 2):
        raise ValueError("endomorphism size does not match the tractor form")
    beta = ex.derivation_matrix(A, tf.p + 1) @ tf.to_big()
    return TractorForm.from_big(beta, tf.n, tf.p)


def iota(omega: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Endomorphism ``z ↦ (z ⨼ ω)^♯`` of a 2-form given as an antisymmetric matrix."""
    return np.linalg.solve(h, -omega)


def two_form(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a ∧ b`` of two covectors as an antisymmetric matrix."""
    return np.outer(a, b) - np.outer(b, a)


def is_skew(A: np.ndarray, h: np.ndarray, tol: float = 1e-10) -> bool:
    M = h @ A
    return bool(np.max(np.abs(M + M.T)) <= tol * max(1.0, np.max(np.abs(A))))


# --- connection ---------------------------------------------------------------------------------


def connection_jet(cv: Curvature) -> Jet:
    """Connection coefficients ``A[..., a, :, :]`` in the coordinate-adapted basis.

    For a tractor ``(a_-, v, a_+)``::

        ∇_X = (X a_- - g(X,v),  ∇_X v + a_+ X - a_- K(X)^♯,  X a_+ + K(X, v))
    """
    n = cv.n
    G = cv.gamma
    K = cv.schouten
    Ke = cv.schouten_endo
    g = cv.g
    k = K.order
    lead = G.shape[:-3]
    A = Jet.zeros(lead + (n, n + 2, n + 2), cv.n, k)
    c = A.c
    c[..., :, 1:n + 1, 1:n + 1, :] = np.einsum("...lajZ->...aljZ", G.c[..., : c.shape[-1]])
    for a in range(n):
        c[..., a, 1 + a, n + 1, 0] = 1.0
    c[..., :, 0, 1:n + 1, :] = -g.c[..., :, :, : c.shape[-1]]
    c[..., :, 1:n + 1, 0, :] = -Ke.c
    c[..., :, n + 1, 1:n + 1, :] = K.c
    return A


def frame_change_jet(gjet: Jet) -> tuple[Jet, np.ndarray]:
    """``B = blockdiag(1, S, 1)`` (columns: frame tractor basis) and the signs ``ε``."""
    S, eps = frame_jet(gjet)
    n = S.shape[-1]
    B = Jet.zeros((n + 2, n + 2), S.n, S.order)
    B.c[0, 0, 0] = 1.0
    B.c[n + 1, n + 1, 0] = 1.0
    B.c[1:n + 1, 1:n + 1, :] = S.c
    return B, eps


def connection_frame(cp: ChartPoint) -> tuple[np.ndarray, np.ndarray]:
    """Values ``A_frame[a] = B^{-1}(∂_a B + A_a B)`` at the point, and ``ε``."""
    if cp.order < 2:
        raise ValueError("the tractor connection needs metric jets of order >= 2")
    cv = Curvature(cp.gjet.truncate(2))
    A = connection_jet(cv).value
    B, eps = frame_change_jet(cp.gjet.truncate(1))
    B0 = B.value
    dB = np.stack([B.d(a).value for a in range(cp.n)])
    Binv = np.linalg.inv(B0)
    return np.einsum("ij,ajk->aik", Binv, dB + A @ B0), eps


def nc_connection_matrix(cp: ChartPoint, X) -> np.ndarray:
    """Skew endomorphism ``ω_NC(X)`` in the frame basis ``(e_-, s_1..s_n, e_+)``."""
    A, _ = connection_frame(cp)
    return np.einsum("a,aij->ij", np.asarray(X, dtype=float), A)


def nc_connection_matrix_coord(cp: ChartPoint, X) -> np.ndarray:
    """``A(X)`` in the coordinate-adapted basis."""
    A = connection_jet(Curvature(cp.gjet.truncate(2))).value
    return np.einsum("a,aij->ij", np.asarray(X, dtype=float), A)


# --- tractor fields ------------------------------------------------------------------------------


@dataclass(frozen=True)
class TractorField:
    """Four form fields ``(α_-, α_0, α_∓, α_+)`` of degrees ``p, p+1, p-1, p``."""

    p: int
    n: int
    minus: ex.Field | None = None
    zero: ex.Field | None = None
    mixed: ex.Field | None = None
    plus: ex.Field | None = None

    def component_jets(self, points, order: int) -> list[Jet]:
        points = np.asarray(points, dtype=float)
        out = []
        for f, q in zip((self.minus, self.zero, self.mixed, self.plus), (self.p, self.p + 1, self.p - 1, self.p)):
            if f is None or dim_forms(self.n, q) == 0:
                out.append(Jet.zeros(points.shape[:-1] + (dim_forms(self.n, q),), self.n, order))
            else:
                if f.degree != q:
                    raise ValueError(f"component degree {f.degree} does not match expected {q}")
                out.append(f.jet(points, order))
        return out

    def big_jet(self, points, order: int) -> Jet:
        comps = self.component_jets(points, order)
        cat = Jet(np.concatenate([c.c for c in comps], axis=-2), self.n, order)
        return cat.map_linear("BC,...C->...B", split_matrix(self.n, self.p))

    def at(self, point) -> TractorForm:
        comps = self.component_jets(point, 0)
        return TractorForm(self.p, self.n, *(c.value for c in comps))


def _kx(cv: Curvature, X: np.ndarray):
    K = cv.schouten.value
    Kflat = X @ K
    Kvec = cp_sharp(Kflat, cv.ginv.value)
    return Kflat, Kvec


def cp_sharp(theta: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    return ginv @ theta


def nc_derivative(tf: TractorField, X, cp: ChartPoint) -> TractorForm:
    """``∇^NC_X`` of a tractor field by the component block formula."""
    X = np.asarray(X, dtype=float)
    n, p = tf.n, tf.p
    cv = Curvature(cp.gjet.truncate(2))
    jets = tf.component_jets(cp.coords, 1)
    degs = (p, p + 1, p - 1, p)
    nab = []
    for j, q in zip(jets, degs):
        if dim_forms(n, q) == 0:
            nab.append(FormValue.zero(q, n))
        else:
            nab.append(FormValue(q, n, X @ ex.covd(j, q, cv.gamma.truncate(0)).value))
    am, a0, amp, ap = (FormValue(q, n, j.value) for j, q in zip(jets, degs))
    g = cp.g
    Kflat, Kvec = _kx(cv, X)
    Kf = FormValue(1, n, Kflat)
    Xf = ex.flat(X, g)
    r_minus = nab[0] - ex.interior(X, a0) + ex.wedge(Xf, amp)
    r_zero = ex.wedge(Kf, am) * -1.0 + nab[1] + ex.wedge(Xf, ap)
    r_mixed = ex.interior(Kvec, am) + nab[2] + ex.interior(X, ap)
    r_plus = ex.interior(Kvec, a0) + ex.wedge(Kf, amp) + nab[3]
    return TractorForm.from_values(r_minus, r_zero, r_mixed, r_plus)


def big_covariant_derivative(beta: Jet, q: int, A: Jet) -> Jet:
    """``∇_a β = ∂_a β + A_a ∘ β`` for a jet of ``q``-forms on ``R^{n+2}``.

    The derivative index is inserted before the coefficient axis.
    """
    n = beta.n
    m = A.shape[-1]
    grads = Jet(np.stack([beta.d(a).c for a in range(n)], axis=-3), n, beta.order - 1)
    T = ex.derivation_basis(m, q)
    DA = A.map_linear("klIJ,...alk->...aIJ", -T)
    return grads + jeinsum("...aIJ,...J->...aI", DA, beta)


def nc_derivative_ambient(tf: TractorField, X, cp: ChartPoint) -> TractorForm:
    """``∇^NC_X`` computed on ``Λ^{p+1} R^{n+2}`` with the connection matrix."""
    X = np.asarray(X, dtype=float)
    A = connection_jet(Curvature(cp.gjet.truncate(2)))
    beta = tf.big_jet(cp.coords, 1)
    nab = big_covariant_derivative(beta, tf.p + 1, A).value
    return TractorForm.from_big(X @ nab, tf.n, tf.p)


# --- curvature --------------------------------------------------------------------------------------


def curvature_endo(cv: Curvature, X, Y) -> np.ndarray:
    """``Ω(X,Y)`` in the coordinate-adapted basis from Weyl and Cotton.

    Middle block ``W(X,Y)``; ``e_- ↦ -C(X,Y)``; ``v ↦ g(v, C(X,Y)) e_+``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = cv.n
    We = cv.weyl_endo.value
    C = cv.cotton.value
    ginv = cv.ginv.value
    Cflat = np.einsum("zxy,x,y->z", C, X, Y)
    Om = np.zeros((n + 2, n + 2))
    Om[1:n + 1, 1:n + 1] = np.einsum("xyzl,x,y->lz", We, X, Y)
    Om[1:n + 1, 0] = -ginv @ Cflat
    Om[n + 1, 1:n + 1] = Cflat
    return Om


def curvature_from_connection(A: Jet) -> np.ndarray:
    """``F_ab = ∂_a A_b - ∂_b A_a + [A_a, A_b]`` (values) for a connection jet of order ≥ 1."""
    n = A.n
    dA = np.stack([A.d(a).value for a in range(n)], axis=-4)  # [..., a, b, i, j] = ∂_a A_b
    A0 = A.value
    comm = np.einsum("...aik,...bkj->...abij", A0, A0) - np.einsum("...bik,...akj->...abij", A0, A0)
    return dA - np.swapaxes(dA, -3, -4) + comm


def tractor_curvature(cp: ChartPoint, X, Y, tf: TractorForm) -> TractorForm:
    """Curvature action on a pointwise tractor form by the component block matrix.

    ``(W∘α_-, W∘α_0 - C^b∧α_-, W∘α_∓ + C⨼α_-, W∘α_+ + C⨼α_0 + C^b∧α_∓)``
    with ``W = W(X,Y)`` and ``C = C(X,Y)``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n, p = tf.n, tf.p
    cv = Curvature(cp.gjet.truncate(3))
    WXY = np.einsum("xyzl,x,y->lz", cv.weyl_endo.value, X, Y)
    Cflat = np.einsum("zxy,x,y->z", cv.cotton.value, X, Y)
    Cvec = cp.ginv @ Cflat
    Cf = FormValue(1, n, Cflat)
    am, a0, amp, ap = tf.components()

    def w(a: FormValue) -> FormValue:
        if dim_forms(n, a.degree) == 0:
            return a
        return FormValue(a.degree, n, ex.derivation_matrix(WXY, a.degree) @ a.coeffs)

    return TractorForm.from_values(
        w(am),
        w(a0) - ex.wedge(Cf, am),
        w(amp) + ex.interior(Cvec, am),
        w(ap) + ex.interior(Cvec, a0) + ex.wedge(Cf, amp),
    )


def tractor_curvature_ambient(cp: ChartPoint, X, Y, tf: TractorForm) -> TractorForm:
    """Same action computed as the derivation of ``Ω(X,Y)`` on ``Λ R^{n+2}``."""
    cv = Curvature(cp.gjet.truncate(3))
    return algebra_action(curvature_endo(cv, X, Y), tf)


# --- Hodge ---------------------------------------------------------------------------------------------


def tractor_hodge(tf: TractorForm, cp: ChartPoint) -> TractorForm:
    """``*_M`` by components: ``((-1)^p *α_-, *α_∓, -*α_0, (-1)^{p+1} *α_+)``."""
    fr = cp.frame
    am, a0, amp, ap = tf.components()
    p, n = tf.p, tf.n

    def h(a: FormValue) -> FormValue:
        if dim_forms(n, a.degree) == 0:
            return FormValue.zero(n - a.degree, n)
        return ex.hodge(a, fr)

    return TractorForm.from_values(h(am) * (-1) ** p, h(amp), h(a0) * -1.0, h(ap) * (-1) ** (p + 1))


def tractor_volume_jet(gjet: Jet) -> Jet:
    """Coefficient of ``dM_M = -e_-^b∧e_+^b∧dM`` on ``E^0∧…∧E^{n+1}``."""
    return ex.sqrt_abs_det(gjet) * float((-1) ** gjet.shape[-1])


def tractor_metric_inverse_jet(ginv: Jet) -> Jet:
    n = ginv.shape[-1]
    H = Jet.zeros(ginv.shape[:-2] + (n + 2, n + 2), ginv.n, ginv.order)
    H.c[..., 0, n + 1, 0] = H.c[..., n + 1, 0, 0] = 1.0
    H.c[..., 1:n + 1, 1:n + 1, :] = ginv.c
    return H


def tractor_hodge_ambient(beta: Jet, q: int, gjet: Jet) -> Jet:
    """Hodge star of a jet of ``q``-forms on ``R^{n+2}`` for the tractor metric and ``dM_M``."""
    ginv = matrix_inverse(gjet)
    return ex.hodge_jet(beta, q, tractor_metric_inverse_jet(ginv), tractor_volume_jet(gjet))


def hodge_commutator(tf: TractorField, spec: MetricSpec, point) -> float:
    """``max_a |∇_a(*β) - *(∇_a β)|`` for the tractor field ``β`` at ``point``."""
    point = np.asarray(point, dtype=float)
    g = metric_jet(spec, point, 3)
    cv = Curvature(g)
    A = connection_jet(cv)  # order 1
    beta = tf.big_jet(point, 1)
    q = tf.p + 1
    m = tf.n + 2
    star = tractor_hodge_ambient(beta, q, g.truncate(1))
    lhs = big_covariant_derivative(star, m - q, A).value
    rhs = tractor_hodge_ambient(big_covariant_derivative(beta, q, A), q, g.truncate(0)).value
    return float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0


def einstein_twistor(cv: Curvature, n: int) -> TractorForm:
    """Tractor ``(1, 0, 0, -scal/(2n(n-1)))`` of degree one."""
    c = -float(cv.scal.value) / (2 * n * (n - 1))
    return TractorForm(0, n, [1.0], np.zeros(n), [], [c])
