"""Exterior algebra on a coordinate chart (and on the tractor fibre).

A ``p``-form on an ``m``-dimensional space is stored by its components on
the sorted multi-indices ``i1 < ... < ip``, i.e. ``α = Σ_I α_I dx^I``.  Degrees
outside ``0..m`` are zero-dimensional arrays, so operators never need to
special-case them.

Pointwise values use :class:`FormValue`; fields are turned into jets with
the coefficient axis as the last tensor axis, and the field-level operators
(``d``, ``∇``, ``d*``, Bochner Laplacian, Hodge star) act on those jets.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Protocol

import numpy as np

from .chart import ChartPoint, Frame, MetricSpec
from .expr import Expr, eval_jet, parse_expr
from .jet import Jet, jeinsum, jet_size

# --- basis tables -----------------------------------------------------------------


@lru_cache(maxsize=None)
def combos(m: int, p: int) -> tuple[tuple[int, ...], ...]:
    if p < 0 or p > m:
        return ()
    return tuple(itertools.combinations(range(m), p))


@lru_cache(maxsize=None)
def combo_index(m: int, p: int) -> dict:
    return {c: k for k, c in enumerate(combos(m, p))}


def dim_forms(m: int, p: int) -> int:
    return math.comb(m, p) if 0 <= p <= m else 0


def perm_sign(seq) -> int:
    seq = list(seq)
    s = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                s = -s
            elif seq[i] == seq[j]:
                return 0
    return s


@lru_cache(maxsize=None)
def wedge_basis(m: int, p: int) -> np.ndarray:
    """``W[k]``: matrix of ``θ ↦ e^k ∧ θ`` from degree ``p`` to ``p+1``."""
    out = np.zeros((m, dim_forms(m, p + 1), dim_forms(m, p)))
    idx = combo_index(m, p + 1)
    for a, I in enumerate(combos(m, p)):
        for k in range(m):
            if k in I:
                continue
            J = tuple(sorted(I + (k,)))
            out[k, idx[J], a] = (-1) ** sum(1 for i in I if i < k)
    return out


@lru_cache(maxsize=None)
def interior_basis(m: int, p: int) -> np.ndarray:
    """``I[l]``: matrix of ``θ ↦ e_l ⨼ θ`` from degree ``p`` to ``p-1``."""
    out = np.zeros((m, dim_forms(m, p - 1), dim_forms(m, p)))
    idx = combo_index(m, p - 1)
    for a, I in enumerate(combos(m, p)):
        for pos, l in enumerate(I):
            J = I[:pos] + I[pos + 1:]
            out[l, idx[J], a] = (-1) ** pos
    return out


@lru_cache(maxsize=None)
def derivation_basis(m: int, p: int) -> np.ndarray:
    """``T[k, l] = W_k I_l`` on degree ``p``; an endomorphism ``A`` acts by ``-A^l_k T[k,l]``."""
    W = wedge_basis(m, p - 1)
    I = interior_basis(m, p)
    N = dim_forms(m, p)
    if N == 0:
        return np.zeros((m, m, 0, 0))
    if W.shape[1] == 0 or I.shape[1] == 0:
        return np.zeros((m, m, N, N))
    return np.einsum("kIJ,lJL->klIL", W, I)


@lru_cache(maxsize=None)
def wedge_tensor(m: int, p: int, q: int) -> np.ndarray:
    """``E[I, J, K]`` with ``dx^I ∧ dx^J = Σ_K E[I,J,K] dx^K``."""
    out = np.zeros((dim_forms(m, p), dim_forms(m, q), dim_forms(m, p + q)))
    idx = combo_index(m, p + q)
    for a, I in enumerate(combos(m, p)):
        for b, J in enumerate(combos(m, q)):
            s = perm_sign(I + J)
            if s:
                out[a, b, idx[tuple(sorted(I + J))]] = s
    return out


@lru_cache(maxsize=None)
def complement_sign(m: int, p: int) -> np.ndarray:
    """``E[I, J] = sign(I, J)`` when ``J`` is the complement of ``I``, else 0."""
    out = np.zeros((dim_forms(m, p), dim_forms(m, m - p)))
    idx = combo_index(m, m - p)
    for a, I in enumerate(combos(m, p)):
        J = tuple(i for i in range(m) if i not in I)
        out[a, idx[J]] = perm_sign(I + J)
    return out


@lru_cache(maxsize=None)
def _perms(p: int):
    return [(perm, perm_sign(perm)) for perm in itertools.permutations(range(p))]


def compound(S: np.ndarray, p: int) -> np.ndarray:
    """``p``-th compound matrix: ``C[I, J] = det S[I, J]`` over sorted multi-indices."""
    S = np.asarray(S, dtype=float)
    m = S.shape[-1]
    if p == 0:
        return np.ones(S.shape[:-2] + (1, 1))
    if not 0 < p <= m:
        return np.zeros(S.shape[:-2] + (0, 0))
    cs = np.array(combos(m, p), dtype=int).reshape(-1, p)
    N = len(cs)
    out = np.zeros(S.shape[:-2] + (N, N))
    for perm, sgn in _perms(p):
        term = np.ones(S.shape[:-2] + (N, N))
        for k in range(p):
            term = term * S[..., cs[:, k][:, None], cs[:, perm[k]][None, :]]
        out = out + sgn * term
    return out


def compound_jet(G: Jet, p: int) -> Jet:
    """Compound matrix of a jet of square matrices (last two tensor axes)."""
    m = G.shape[-1]
    lead = G.shape[:-2]
    if p == 0:
        return Jet.constant(np.ones(lead + (1, 1)), G.n, G.order)
    if not 0 < p <= m:
        return Jet.zeros(lead + (0, 0), G.n, G.order)
    cs = np.array(combos(m, p), dtype=int).reshape(-1, p)
    out = None
    for perm, sgn in _perms(p):
        term = None
        for k in range(p):
            f = Jet(G.c[..., cs[:, k][:, None], cs[:, perm[k]][None, :], :], G.n, G.order)
            term = f if term is None else jeinsum("...IJ,...IJ->...IJ", term, f)
        term = term * float(sgn)
        out = term if out is None else out + term
    return out


def sqrt_abs_det(G: Jet) -> Jet:
    """``sqrt|det G|`` as a jet, via ``det(G0) exp(tr log(1 + G0^{-1} H))``."""
    from . import jet as J

    g0 = G.value
    inv0 = np.linalg.inv(g0)
    H = Jet(np.einsum("...ij,...jkZ->...ikZ", inv0, G.c), G.n, G.order)
    H.c[..., 0] = 0.0
    logm = None
    power = None
    for k in range(1, G.order + 1):
        power = H if power is None else jeinsum("...ij,...jk->...ik", power, H)
        term = power * ((-1) ** (k + 1) / k)
        logm = term if logm is None else logm + term
    d0 = np.sqrt(np.abs(np.linalg.det(g0)))
    if logm is None:
        return Jet.constant(d0, G.n, G.order)
    tr = Jet(np.einsum("...iiZ->...Z", logm.c), G.n, G.order)
    return J.exp(tr * 0.5) * d0


# --- pointwise values ---------------------------------------------------------------


@dataclass(frozen=True)
class FormValue:
    """A ``p``-form at a point: coefficients on sorted coordinate multi-indices."""

    degree: int
    dim: int
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.asarray(self.coeffs, dtype=float).reshape(dim_forms(self.dim, self.degree)))

    @classmethod
    def zero(cls, degree: int, dim: int) -> "FormValue":
        return cls(degree, dim, np.zeros(dim_forms(dim, degree)))

    @classmethod
    def basis(cls, idx, dim: int, coef: float = 1.0) -> "FormValue":
        """``coef · dx^{i1}∧…∧dx^{ip}`` for 0-based (not necessarily sorted) indices."""
        idx = tuple(idx)
        c = np.zeros(dim_forms(dim, len(idx)))
        s = perm_sign(idx)
        if s:
            c[combo_index(dim, len(idx))[tuple(sorted(idx))]] = s * coef
        return cls(len(idx), dim, c)

    def __add__(self, other: "FormValue") -> "FormValue":
        _check(self, other)
        if self.degree != other.degree:
            raise ValueError("cannot add forms of different degree")
        return FormValue(self.degree, self.dim, self.coeffs + other.coeffs)

    def __sub__(self, other: "FormValue") -> "FormValue":
        return self + other * -1.0

    def __mul__(self, s: float) -> "FormValue":
        return FormValue(self.degree, self.dim, self.coeffs * s)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def component(self, idx) -> float:
        idx = tuple(idx)
        s = perm_sign(idx)
        if not s:
            return 0.0
        return s * float(self.coeffs[combo_index(self.dim, len(idx))[tuple(sorted(idx))]])


def _check(a: FormValue, b: FormValue):
    if a.dim != b.dim:
        raise ValueError(f"forms live on different dimensions ({a.dim} vs {b.dim})")


def wedge(a: FormValue, b: FormValue) -> FormValue:
    _check(a, b)
    p, q, m = a.degree, b.degree, a.dim
    if p + q > m:
        return FormValue.zero(p + q, m)
    return FormValue(p + q, m, np.einsum("I,J,IJK->K", a.coeffs, b.coeffs, wedge_tensor(m, p, q)))


def interior(v, a: FormValue) -> FormValue:
    """``v ⨼ a`` for a coordinate vector ``v``."""
    v = np.asarray(v, dtype=float)
    if v.shape != (a.dim,):
        raise ValueError("vector dimension does not match the form")
    if a.degree == 0:
        return FormValue.zero(-1, a.dim)
    return FormValue(a.degree - 1, a.dim, np.einsum("l,lJI,I->J", v, interior_basis(a.dim, a.degree), a.coeffs))


def flat(v, g: np.ndarray) -> FormValue:
    v = np.asarray(v, dtype=float)
    return FormValue(1, len(v), g @ v)


def sharp(theta: FormValue, g: np.ndarray) -> np.ndarray:
    if theta.degree != 1:
        raise ValueError("sharp expects a 1-form")
    return np.linalg.solve(g, theta.coeffs)


def musical(x, g: np.ndarray):
    """``♭`` for a vector (array), ``♯`` for a 1-form (:class:`FormValue`)."""
    if isinstance(x, FormValue):
        return sharp(x, g)
    return flat(x, g)


def frame_components(a: FormValue, frame: Frame) -> np.ndarray:
    """Components ``a(s_{i1}, …, s_{ip})`` on the frame."""
    return compound(frame.S, a.degree).T @ a.coeffs


def from_frame_components(c: np.ndarray, degree: int, frame: Frame) -> FormValue:
    Sinv = np.linalg.inv(frame.S)
    return FormValue(degree, frame.S.shape[0], compound(Sinv, degree).T @ c)


def hodge(a: FormValue, frame: Frame) -> FormValue:
    """Hodge star with ``a ∧ *a = g(a,a) dM``; ``dM = s^1∧…∧s^n`` of the frame."""
    m, p = a.dim, a.degree
    fc = frame_components(a, frame)
    eps_I = np.array([np.prod(frame.eps[list(I)]) for I in combos(m, p)])
    out = (eps_I * fc) @ complement_sign(m, p)
    return from_frame_components(out, m - p, frame)


def inner(a: FormValue, b: FormValue, g: np.ndarray) -> float:
    """Induced metric on ``p``-forms (``g(dx^I, dx^J) = det g^{-1}[I,J]``)."""
    _check(a, b)
    return float(a.coeffs @ compound(np.linalg.inv(g), a.degree) @ b.coeffs)


def derivation_matrix(A: np.ndarray, p: int) -> np.ndarray:
    """Matrix of the natural action of an endomorphism ``A`` on ``p``-forms."""
    m = A.shape[-1]
    return -np.einsum("...lk,klIJ->...IJ", A, derivation_basis(m, p))


# --- jet-level operators -------------------------------------------------------------


def ext_d(aj: Jet, p: int) -> Jet:
    """Exterior derivative of a ``p``-form jet (coefficient axis last)."""
    n = aj.n
    grads = Jet(np.stack([aj.d(k).c for k in range(n)], axis=-3), n, aj.order - 1)
    W = wedge_basis(n, p)
    return grads.map_linear("kJI,...kI->...J", W)


def covd(aj: Jet, p: int, gamma: Jet) -> Jet:
    """``(∇_k α)`` with the derivative index as a new axis before the coefficient axis."""
    n = aj.n
    grads = Jet(np.stack([aj.d(k).c for k in range(n)], axis=-3), n, aj.order - 1)
    if dim_forms(n, p) == 0 or p == 0:
        return grads
    T = derivation_basis(n, p)
    # -Γ^l_{km} T[m, l] α
    G = Jet(np.einsum("mlIJ,...lkmZ->...kIJZ", T, gamma.c), n, gamma.order)
    return grads - jeinsum("...kIJ,...J->...kI", G, aj)


def covd_tensor(t: Jet, p: int, gamma: Jet, extra: int = 1) -> Jet:
    """Covariant derivative of a form-valued tensor with ``extra`` covector axes.

    ``t`` has shape ``(..., a1..a_extra, N_p)``; the result has the new
    derivative axis in front of the covector axes.
    """
    n = t.n
    nb = len(t.shape) - extra - 1
    out = Jet(np.stack([t.d(k).c for k in range(n)], axis=nb), n, t.order - 1)
    letters = "abcdefgh"[:extra]
    for s in range(extra):
        rep = letters[:s] + "q" + letters[s + 1:]
        out = out - jeinsum(f"...qk{letters[s]},...{rep}I->...k{letters}I", gamma, t)
    if p > 0 and dim_forms(n, p) > 0:
        T = derivation_basis(n, p)
        G = Jet(np.einsum("mlIJ,...lkmZ->...kIJZ", T, gamma.c), n, gamma.order)
        out = out - jeinsum(f"...kIJ,...{letters}J->...k{letters}I", G, t)
    return out


def codiff(aj: Jet, p: int, gamma: Jet, ginv: Jet) -> Jet:
    """``d*α = -g^{ab} e_a ⨼ ∇_b α``."""
    n = aj.n
    if p == 0:
        return Jet.zeros(aj.shape[:-1] + (0,), n, aj.order - 1)
    nab = covd(aj, p, gamma)
    t = jeinsum("...ab,...bI->...aI", ginv, nab)
    return t.map_linear("aJI,...aI->...J", -interior_basis(n, p))


def bochner(aj: Jet, p: int, gamma: Jet, ginv: Jet) -> Jet:
    """Bochner Laplacian ``∇*∇α = -g^{ab} (∇²α)_{ab}``."""
    nab = covd(aj, p, gamma)
    nn = covd_tensor(nab, p, gamma, extra=1)
    return -jeinsum("...ab,...abI->...I", ginv, nn)


def hodge_jet(aj: Jet, p: int, ginv: Jet, volume: Jet) -> Jet:
    """``(*α)_J = vol · Σ_I α^I sign(I, J)`` for a metric with inverse ``ginv``.

    ``volume`` is the coefficient of the volume form on ``dx^1∧…∧dx^m``
    (``sqrt|g|`` for the coordinate orientation).
    """
    m = ginv.shape[-1]
    up = jeinsum("...IA,...A->...I", compound_jet(ginv, p), aj)
    st = up.map_linear("IJ,...I->...J", complement_sign(m, p))
    return jeinsum("...,...J->...J", volume, st)


# --- fields ----------------------------------------------------------------------------


class Field(Protocol):
    degree: int
    dim: int

    def jet(self, points, order: int) -> Jet: ...


@dataclass(frozen=True)
class FormField:
    """A ``p``-form field given by coefficient expressions on sorted multi-indices."""

    degree: int
    dim: int
    coefficients: Mapping[tuple[int, ...], Expr]

    def jet(self, points, order: int) -> Jet:
        points = np.asarray(points, dtype=float)
        N = dim_forms(self.dim, self.degree)
        out = Jet.zeros(points.shape[:-1] + (N,), self.dim, order)
        idx = combo_index(self.dim, self.degree)
        for I, e in self.coefficients.items():
            out.c[..., idx[I], :] += eval_jet(e, points, order).c
        return out

    def at(self, point) -> FormValue:
        return FormValue(self.degree, self.dim, self.jet(point, 0).value)

    def to_json(self, names=None) -> dict:
        from .expr import to_text

        return {
            "degree": self.degree,
            "coefficients": {",".join(str(i + 1) for i in I): to_text(e, names) for I, e in sorted(self.coefficients.items())},
        }


def load_form_field(document: dict, spec: MetricSpec) -> FormField:
    """Form JSON ``{degree, coefficients: {"i1,i2": "expr"}}`` with 1-based indices."""
    try:
        p = int(document["degree"])
        coeffs = document["coefficients"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed form document: {exc}") from None
    if not 0 <= p <= spec.n:
        raise ValueError(f"form degree {p} outside 0..{spec.n}")
    out: dict[tuple[int, ...], Expr] = {}
    for key, text in coeffs.items():
        idx = tuple(int(t) - 1 for t in str(key).split(",")) if str(key).strip() else ()
        if len(idx) != p:
            raise ValueError(f"multi-index {key!r} does not have {p} entries")
        if any(not 0 <= i < spec.n for i in idx):
            raise ValueError(f"multi-index {key!r} out of range")
        s = perm_sign(idx)
        if s == 0:
            raise ValueError(f"multi-index {key!r} repeats an index")
        e = parse_expr(str(text), spec.n, spec.names)
        if s < 0:
            from .expr import Unary

            e = Unary("neg", e)
        I = tuple(sorted(idx))
        if I in out:
            from .expr import Binary

            e = Binary("+", out[I], e)
        out[I] = e
    return FormField(p, spec.n, out)


def form_field(degree: int, spec: MetricSpec, coefficients: Mapping[str, str]) -> FormField:
    """Build a field from ``{"1,2": "expr"}`` strings."""
    return load_form_field({"degree": degree, "coefficients": dict(coefficients)}, spec)


@dataclass(frozen=True)
class HodgeField:
    """``*α`` of a field with respect to a metric spec (coordinate orientation)."""

    inner: Field
    spec: MetricSpec

    @property
    def degree(self) -> int:
        return self.spec.n - self.inner.degree

    @property
    def dim(self) -> int:
        return self.spec.n

    def jet(self, points, order: int) -> Jet:
        from .chart import metric_jet
        from .jet import matrix_inverse

        g = metric_jet(self.spec, points, order)
        return hodge_jet(self.inner.jet(points, order), self.inner.degree, matrix_inverse(g), sqrt_abs_det(g))


@dataclass(frozen=True)
class DerivativeField:
    """``dα`` of a field."""

    inner: Field

    @property
    def degree(self) -> int:
        return self.inner.degree + 1

    @property
    def dim(self) -> int:
        return self.inner.dim

    def jet(self, points, order: int) -> Jet:
        return ext_d(self.inner.jet(points, order + 1), self.inner.degree)


@dataclass(frozen=True)
class ScaledField:
    """``f · α`` for a scalar expression ``f``."""

    factor: Expr
    inner: Field

    @property
    def degree(self) -> int:
        return self.inner.degree

    @property
    def dim(self) -> int:
        return self.inner.dim

    def jet(self, points, order: int) -> Jet:
        f = eval_jet(self.factor, points, order)
        return jeinsum("...,...I->...I", f, self.inner.jet(points, order))


@dataclass(frozen=True)
class SumField:
    a: Field
    b: Field

    @property
    def degree(self) -> int:
        return self.a.degree

    @property
    def dim(self) -> int:
        return self.a.dim

    def jet(self, points, order: int) -> Jet:
        return self.a.jet(points, order) + self.b.jet(points, order)


# --- pointwise wrappers on chart points ----------------------------------------------------


def _field_jet(a: Field, cp: ChartPoint, depth: int) -> Jet:
    if cp.order < depth:
        from .jet import JetOrderError

        raise JetOrderError(f"operator needs metric jets of order >= {depth}")
    return a.jet(cp.coords, depth)


def d_field(a: Field, cp: ChartPoint) -> FormValue:
    aj = _field_jet(a, cp, 1)
    return FormValue(a.degree + 1, a.dim, ext_d(aj, a.degree).value)


def covderiv_field(a: Field, X, cp: ChartPoint) -> FormValue:
    from .curvature import Curvature

    aj = _field_jet(a, cp, 1)
    nab = covd(aj, a.degree, Curvature(cp.gjet.truncate(1)).gamma).value
    return FormValue(a.degree, a.dim, np.asarray(X, dtype=float) @ nab)


def codiff_field(a: Field, cp: ChartPoint) -> FormValue:
    from .curvature import Curvature

    aj = _field_jet(a, cp, 1)
    cv = Curvature(cp.gjet.truncate(1))
    return FormValue(a.degree - 1, a.dim, codiff(aj, a.degree, cv.gamma, cv.ginv).value)


def d_field_frame(a: Field, cp: ChartPoint) -> FormValue:
    """``d = Σ ε_i s_i^b ∧ ∇_{s_i}`` evaluated with the point's frame."""
    fr = cp.frame
    out = FormValue.zero(a.degree + 1, a.dim)
    for i in range(a.dim):
        s = fr.S[:, i]
        out = out + wedge(flat(s, cp.g), covderiv_field(a, s, cp)) * fr.eps[i]
    return out
