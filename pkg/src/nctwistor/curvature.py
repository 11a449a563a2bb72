"""Curvature hierarchy of a metric jet.

Conventions (coordinate components, ``R(X,Y) = [∇_X, ∇_Y] - ∇_[X,Y]``)::

    Gamma[l,i,j]  = Γ^l_ij
    Rend[l,i,j,k] = R^l_ijk     with  R(∂_i,∂_j)∂_k = R^l_ijk ∂_l
    Rm[i,j,k,v]   = g(R(∂_i,∂_j)∂_k, ∂_v)
    Ric[x,y]      = g^ab Rm[x,a,b,y]             (positive on spheres)
    K             = (scal/(2(n-1)) g - Ric)/(n-2)  (minus the usual Schouten tensor)
    W             = Rm - g⋆K
    C[x,y,z]      = ∇_y K_zx - ∇_z K_yx          (C(X,Y,Z) = g(C(Y,Z), X))
    B[x,y]        = g^ab ∇_a C[x,y,b] - g^ab K_a^c W[c,x,y,b]

Tensors are :class:`~nctwistor.jet.Jet` objects whose tensor axes follow any
leading batch axes.  A metric jet of order ``k`` yields Γ at ``k-1``,
curvature and K at ``k-2``, Cotton at ``k-3`` and Bach at ``k-4``.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from .chart import ChartPoint
from .jet import Jet, JetOrderError, jeinsum, matrix_inverse

_LETTERS = "abcdefghijklmnopqrstuvwxy"


def permute(T: Jet, spec: str) -> Jet:
    """Permute tensor axes (batch axes and jet axis untouched): ``'ijk->kij'``."""
    a, b = spec.split("->")
    return Jet(np.einsum(f"...{a}Z->...{b}Z", T.c), T.n, T.order)


def grad(T: Jet, nb: int) -> Jet:
    """Coordinate partials as a new first tensor axis (after ``nb`` batch axes)."""
    if T.order < 1:
        raise JetOrderError("insufficient jet order for a derivative")
    return Jet(np.stack([T.d(i).c for i in range(T.n)], axis=nb), T.n, T.order - 1)


def covariant_derivative(T: Jet, gamma: Jet, rank: int, nb: int, upper: int = 0) -> Jet:
    """Levi-Civita derivative of a tensor with ``rank`` tensor axes.

    The first ``upper`` axes are contravariant, the rest covariant.  The
    derivative index becomes the first tensor axis.
    """
    out = grad(T, nb)
    idx = _LETTERS[:rank]
    for s in range(rank):
        rep = idx[:s] + "p" + idx[s + 1:]
        if s < upper:
            out = out + jeinsum(f"...{idx[s]}zp,...{rep}->...z{idx}", gamma, T)
        else:
            out = out - jeinsum(f"...pz{idx[s]},...{rep}->...z{idx}", gamma, T)
    return out


def kulkarni_nomizu(h: Jet, k: Jet) -> Jet:
    """``(h⋆k)[x,y,z,v] = h_xz k_yv - h_xv k_yz - h_yz k_xv + h_yv k_xz``."""
    t = jeinsum("...xz,...yv->...xyzv", h, k)
    return t - permute(t, "xyvz->xyzv") - permute(t, "yxzv->xyzv") + permute(t, "yxvz->xyzv")


class Curvature:
    """Lazily evaluated curvature tensors of a (batched) metric jet ``g[..., i, j]``."""

    def __init__(self, gjet: Jet):
        self.g = gjet
        self.n = gjet.n
        self.nb = len(gjet.shape) - 2

    @classmethod
    def at(cls, cp: ChartPoint) -> "Curvature":
        return cls(cp.gjet)

    @cached_property
    def ginv(self) -> Jet:
        return matrix_inverse(self.g)

    @cached_property
    def dg(self) -> Jet:
        return grad(self.g, self.nb)

    @cached_property
    def gamma(self) -> Jet:
        dg = self.dg
        low = (permute(dg, "imj->mij") + permute(dg, "jmi->mij") - dg) * 0.5
        return jeinsum("...lm,...mij->...lij", self.ginv, low)

    @cached_property
    def riemann_endo(self) -> Jet:
        G = self.gamma
        dG = grad(G, self.nb)
        qq = jeinsum("...lim,...mjk->...lijk", G, G)
        return permute(dG, "iljk->lijk") - permute(dG, "jlik->lijk") + qq - permute(qq, "ljik->lijk")

    @cached_property
    def riemann(self) -> Jet:
        return jeinsum("...lv,...lijk->...ijkv", self.g, self.riemann_endo)

    @cached_property
    def ricci(self) -> Jet:
        return jeinsum("...ab,...xaby->...xy", self.ginv, self.riemann)

    @cached_property
    def scal(self) -> Jet:
        return jeinsum("...xy,...xy->...", self.ginv, self.ricci)

    @cached_property
    def schouten(self) -> Jet:
        n = self.n
        if n < 3:
            raise ValueError("the Schouten-type tensor needs n >= 3")
        s = self.scal
        sg = jeinsum("...,...ij->...ij", s, self.g)
        return (sg * (1.0 / (2 * (n - 1))) - self.ricci) * (1.0 / (n - 2))

    @cached_property
    def schouten_endo(self) -> Jet:
        """``K_a^c = K_ad g^dc`` (index ``a`` first)."""
        return jeinsum("...ad,...dc->...ac", self.schouten, self.ginv)

    @cached_property
    def weyl(self) -> Jet:
        return self.riemann - kulkarni_nomizu(self.g, self.schouten)

    @cached_property
    def weyl_endo(self) -> Jet:
        """``W^v_xyz = g^vw W_xyzw`` stored as ``[x,y,z,v]``."""
        return jeinsum("...xyzw,...wv->...xyzv", self.weyl, self.ginv)

    @cached_property
    def nabla_schouten(self) -> Jet:
        return covariant_derivative(self.schouten, self.gamma, 2, self.nb)

    @cached_property
    def cotton(self) -> Jet:
        nk = self.nabla_schouten
        return permute(nk, "yzx->xyz") - permute(nk, "zyx->xyz")

    @cached_property
    def nabla_cotton(self) -> Jet:
        return covariant_derivative(self.cotton, self.gamma, 3, self.nb)

    @cached_property
    def bach(self) -> Jet:
        t1 = jeinsum("...ab,...axyb->...xy", self.ginv, self.nabla_cotton)
        kw = jeinsum("...ac,...cxyb->...axyb", self.schouten_endo, self.weyl)
        t2 = jeinsum("...ab,...axyb->...xy", self.ginv, kw)
        return t1 - t2

    # identity residuals -------------------------------------------------------
    def bianchi_cotton_residual(self) -> np.ndarray:
        """``g^ab ∇_a W[x,y,z,b] - (3-n) C[z,x,y]`` (order-0 values)."""
        nw = covariant_derivative(self.weyl, self.gamma, 4, self.nb)
        lhs = jeinsum("...ab,...axyzb->...xyz", self.ginv, nw)
        rhs = permute(self.cotton, "zxy->xyz") * (3 - self.n)
        return (lhs - rhs).value

    def cotton_trace(self) -> np.ndarray:
        return jeinsum("...ab,...abx->...x", self.ginv, self.cotton).value

    def weyl_traces(self) -> list[np.ndarray]:
        W = self.weyl
        gi = self.ginv
        return [
            jeinsum("...ab,...abzv->...zv", gi, W).value,
            jeinsum("...ab,...azbv->...zv", gi, W).value,
            jeinsum("...ab,...azvb->...zv", gi, W).value,
            jeinsum("...ab,...zabv->...zv", gi, W).value,
            jeinsum("...ab,...zavb->...zv", gi, W).value,
            jeinsum("...ab,...zvab->...zv", gi, W).value,
        ]

    def bach_divergence(self) -> np.ndarray:
        nb_ = covariant_derivative(self.bach, self.gamma, 2, self.nb)
        return jeinsum("...ab,...abx->...x", self.ginv, nb_).value

    def metric_compatibility(self) -> np.ndarray:
        return covariant_derivative(self.g, self.gamma, 2, self.nb).value


def riemannian_data(cp: ChartPoint):
    """``(Γ, R, Ric, scal)`` values at a chart point; ``R`` is the (0,4) tensor."""
    if cp.order < 2:
        raise JetOrderError("curvature needs metric jets of order >= 2")
    cv = Curvature.at(cp)
    return cv.gamma.value, cv.riemann.value, cv.ricci.value, float(cv.scal.value)


def schouten(cp: ChartPoint) -> np.ndarray:
    if cp.order < 2:
        raise JetOrderError("the Schouten-type tensor needs metric jets of order >= 2")
    return Curvature.at(cp).schouten.value


def weyl(cp: ChartPoint) -> np.ndarray:
    if cp.order < 2:
        raise JetOrderError("the Weyl tensor needs metric jets of order >= 2")
    return Curvature.at(cp).weyl.value


def cotton(cp: ChartPoint) -> np.ndarray:
    if cp.order < 3:
        raise JetOrderError("the Cotton tensor needs metric jets of order >= 3")
    return Curvature.at(cp).cotton.value


def bach(cp: ChartPoint) -> np.ndarray:
    if cp.order < 4:
        raise JetOrderError("the Bach tensor needs metric jets of order >= 4")
    return Curvature.at(cp).bach.value


def two_form_operator(T: np.ndarray, omega: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """Action of a curvature-type (0,4) tensor on a 2-form (antisymmetric matrix).

    ``(Tω)_zv = ½ ω^xy T_xyzv`` so that ``X^b∧Y^b ↦ T(X,Y,·,·)``.
    """
    up = ginv @ omega @ ginv.T
    return 0.5 * np.einsum("xy,xyzv->zv", up, T)


def kn_action(g: np.ndarray, K: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """``(g⋆K)(θ∧η) = θ∧K̂η - η∧K̂θ`` on a 2-form given as an antisymmetric matrix.

    ``K̂θ = K(θ^♯)^b``.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 2 or not np.allclose(omega, -omega.T):
        raise ValueError("kn_action expects a 2-form (antisymmetric matrix)")
    ginv = np.linalg.inv(g)
    # ω = ½ ω_ab dx^a∧dx^b, image = ω_ab dx^a ∧ K̂dx^b with (K̂dx^b)_v = K_vc g^cb
    m = omega @ ginv @ K
    return m - m.T
