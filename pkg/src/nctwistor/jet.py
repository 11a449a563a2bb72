"""Truncated multivariate Taylor jets.

A jet stores, for every multi-index ``m`` with ``|m| <= order``, the partial
derivative ``d^m f`` at the base point.  Coefficients are derivative values,
not Taylor coefficients, so ``x**2`` has coefficient 2 at ``m = (2,)``.

Multi-indices are sorted by total degree, which makes truncation to a lower
order a prefix slice of the coefficient axis.  Jets may carry arbitrary
leading tensor/batch axes; the coefficient axis is always last.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

MAX_ORDER = 6


class JetOrderError(ValueError):
    """Raised when a derivative beyond the stored order is requested."""


def jet_size(n: int, order: int) -> int:
    return math.comb(n + order, order)


@lru_cache(maxsize=None)
def multi_indices(n: int, order: int) -> np.ndarray:
    rows = []
    for deg in range(order + 1):
        for combo in itertools.combinations_with_replacement(range(n), deg):
            m = [0] * n
            for i in combo:
                m[i] += 1
            rows.append(m)
    return np.array(rows, dtype=np.int64).reshape(-1, n)


@lru_cache(maxsize=None)
def _index_lookup(n: int, order: int) -> dict:
    return {tuple(m): k for k, m in enumerate(multi_indices(n, order))}


@dataclass(frozen=True)
class _ProductTable:
    ia: np.ndarray
    ib: np.ndarray
    weight: np.ndarray
    scatter: sp.csr_matrix  # (pairs, N) with multinomial weights


@lru_cache(maxsize=None)
def _product_table(n: int, order: int) -> _ProductTable:
    mi = multi_indices(n, order)
    lookup = _index_lookup(n, order)
    deg = mi.sum(axis=1)
    ia, ib, ik, w = [], [], [], []
    fact = [math.factorial(k) for k in range(order + 1)]
    for a in range(len(mi)):
        for b in range(len(mi)):
            if deg[a] + deg[b] > order:
                continue
            m = mi[a] + mi[b]
            coef = 1
            for i in range(n):
                coef *= fact[m[i]] // (fact[mi[a, i]] * fact[mi[b, i]])
            ia.append(a)
            ib.append(b)
            ik.append(lookup[tuple(m)])
            w.append(float(coef))
    ia = np.array(ia)
    ib = np.array(ib)
    w = np.array(w)
    scatter = sp.csr_matrix((w, (np.arange(len(ia)), np.array(ik))), shape=(len(ia), len(mi)))
    return _ProductTable(ia, ib, w, scatter)


@lru_cache(maxsize=None)
def _shift_table(n: int, order: int, i: int) -> np.ndarray:
    """Index of ``m + e_i`` in the order-``order`` table, for ``|m| <= order-1``."""
    lookup = _index_lookup(n, order)
    out = []
    for m in multi_indices(n, order - 1):
        m2 = m.copy()
        m2[i] += 1
        out.append(lookup[tuple(m2)])
    return np.array(out, dtype=np.int64)


class Jet:
    """Tensor-valued truncated jet.  ``c`` has shape ``(*shape, N)``."""

    __slots__ = ("c", "n", "order")
    __array_priority__ = 100

    def __init__(self, c, n: int, order: int):
        c = np.asarray(c, dtype=float)
        if c.shape[-1] != jet_size(n, order):
            raise ValueError(f"coefficient axis {c.shape[-1]} != jet size {jet_size(n, order)}")
        self.c = c
        self.n = n
        self.order = order

    # construction -------------------------------------------------------
    @classmethod
    def constant(cls, value, n: int, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (jet_size(n, order),))
        c[..., 0] = value
        return cls(c, n, order)

    @classmethod
    def variable(cls, point, i: int, order: int) -> "Jet":
        """Jet of the coordinate function ``x_i`` at ``point`` (leading axes batch)."""
        point = np.asarray(point, dtype=float)
        n = point.shape[-1]
        c = np.zeros(point.shape[:-1] + (jet_size(n, order),))
        c[..., 0] = point[..., i]
        if order >= 1:
            c[..., 1 + i] = 1.0
        return cls(c, n, order)

    @classmethod
    def zeros(cls, shape, n: int, order: int) -> "Jet":
        return cls(np.zeros(tuple(shape) + (jet_size(n, order),)), n, order)

    # inspection ---------------------------------------------------------
    @property
    def shape(self) -> tuple:
        return self.c.shape[:-1]

    @property
    def value(self) -> np.ndarray:
        return self.c[..., 0]

    def partial(self, index) -> np.ndarray:
        """Derivative value for a sequence of (0-based) variable positions.

        ``partial((0, 0))`` is the second derivative in the first variable;
        permutations of ``index`` address the same coefficient.
        """
        index = tuple(index)
        if len(index) > self.order:
            raise JetOrderError(f"derivative of order {len(index)} requested from order-{self.order} jet")
        m = [0] * self.n
        for i in index:
            if not 0 <= i < self.n:
                raise IndexError(f"variable position {i} out of range for {self.n} variables")
            m[i] += 1
        return self.c[..., _index_lookup(self.n, self.order)[tuple(m)]]

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise JetOrderError(f"cannot raise jet order {self.order} to {order}")
        return Jet(self.c[..., : jet_size(self.n, order)], self.n, order)

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, n={self.n}, order={self.order})"

    # structure ------------------------------------------------------------
    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx):
            return Jet(self.c[idx + (slice(None),)], self.n, self.order)
        return Jet(self.c[idx], self.n, self.order)

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], tuple):
            shape = shape[0]
        return Jet(self.c.reshape(tuple(shape) + (self.c.shape[-1],)), self.n, self.order)

    def transpose(self, *axes) -> "Jet":
        k = self.c.ndim - 1
        return Jet(self.c.transpose(tuple(axes) + (k,)), self.n, self.order)

    def map_linear(self, subscripts: str, const) -> "Jet":
        """Apply a constant tensor: ``einsum(subscripts, const, tensor_part)``."""
        a, rest = subscripts.split(",")
        b, out = rest.split("->")
        c = np.einsum(f"{a},{b}Z->{out}Z", np.asarray(const), self.c)
        return Jet(c, self.n, self.order)

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.n != self.n:
                raise ValueError("jets over different variable counts")
            k = min(self.order, other.order)
            return self.truncate(k), other.truncate(k)
        return None

    def __add__(self, other):
        pair = self._coerce(other)
        if pair is None:
            c = self.c.copy()
            c[..., 0] = c[..., 0] + np.asarray(other, dtype=float)
            return Jet(c, self.n, self.order)
        a, b = pair
        return Jet(a.c + b.c, a.n, a.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.n, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            return jeinsum("...,...->...", self, other)
        other = np.asarray(other, dtype=float)
        return Jet(self.c * other[..., None], self.n, self.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        other = np.asarray(other, dtype=float)
        return Jet(self.c / other[..., None], self.n, self.order)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    # differentiation --------------------------------------------------------
    def d(self, i: int) -> "Jet":
        if self.order < 1:
            raise JetOrderError("cannot differentiate an order-0 jet")
        idx = _shift_table(self.n, self.order, i)
        return Jet(self.c[..., idx], self.n, self.order - 1)

    def grad(self) -> "Jet":
        """Stack of first partials on a new *leading* axis: shape ``(n, *shape)``."""
        if self.order < 1:
            raise JetOrderError("cannot differentiate an order-0 jet")
        return Jet(np.stack([self.d(i).c for i in range(self.n)]), self.n, self.order - 1)


def stack(jets, axis: int = 0) -> Jet:
    k = min(j.order for j in jets)
    n = jets[0].n
    arrs = [j.truncate(k).c for j in jets]
    if axis < 0:
        axis = arrs[0].ndim - 1 + axis
    return Jet(np.stack(arrs, axis=axis), n, k)


def jeinsum(subscripts: str, a: Jet, b: Jet) -> Jet:
    """Contraction of two jets over tensor axes with the Leibniz rule on the jet axis.

    ``subscripts`` uses numpy einsum syntax for the tensor axes only.
    """
    if a.n != b.n:
        raise ValueError("jets over different variable counts")
    n = a.n
    k = min(a.order, b.order)
    size = jet_size(n, k)
    tab = _product_table(n, k)
    A = a.c[..., :size][..., tab.ia]
    B = b.c[..., :size][..., tab.ib]
    inputs, out = subscripts.split("->")
    sa, sb = inputs.split(",")
    prod = np.einsum(f"{sa}Z,{sb}Z->{out}Z", A, B, optimize=True)
    lead = prod.shape[:-1]
    flat = prod.reshape(-1, prod.shape[-1])
    res = np.asarray((tab.scatter.T @ flat.T).T)
    return Jet(res.reshape(lead + (size,)), n, k)


# univariate composition ------------------------------------------------------

class DomainViolation(ArithmeticError):
    """Jet evaluation left the real domain of an elementary function."""


def compose(u: Jet, derivs: np.ndarray) -> Jet:
    """``f(u)`` given ``derivs[..., j] = f^{(j)}(u0)`` for ``j <= u.order``."""
    k = u.order
    h = Jet(u.c.copy(), u.n, k)
    h.c[..., 0] = 0.0
    out = Jet.constant(derivs[..., 0], u.n, k)
    power = None
    for j in range(1, k + 1):
        power = h if power is None else power * h
        out = out + power * (derivs[..., j] / math.factorial(j))
    return out


def _falling(a: float, j: int) -> float:
    r = 1.0
    for i in range(j):
        r *= a - i
    return r


def exp(u: Jet) -> Jet:
    e = np.exp(u.value)
    return compose(u, np.repeat(e[..., None], u.order + 1, axis=-1))


def _cyclic(vals, u: Jet) -> Jet:
    k = u.order
    d = np.stack([vals[j % len(vals)] for j in range(k + 1)], axis=-1)
    return compose(u, d)


def sin(u: Jet) -> Jet:
    s, c = np.sin(u.value), np.cos(u.value)
    return _cyclic([s, c, -s, -c], u)


def cos(u: Jet) -> Jet:
    s, c = np.sin(u.value), np.cos(u.value)
    return _cyclic([c, -s, -c, s], u)


def sinh(u: Jet) -> Jet:
    return _cyclic([np.sinh(u.value), np.cosh(u.value)], u)


def cosh(u: Jet) -> Jet:
    return _cyclic([np.cosh(u.value), np.sinh(u.value)], u)


def log(u: Jet) -> Jet:
    x = u.value
    if np.any(x <= 0):
        raise DomainViolation("logarithm of a non-positive value")
    k = u.order
    d = [np.log(x)]
    for j in range(1, k + 1):
        d.append((-1) ** (j - 1) * math.factorial(j - 1) / x**j)
    return compose(u, np.stack(d, axis=-1))


def power(u: Jet, a: float) -> Jet:
    """``u**a`` for a constant exponent.  Integer ``a`` allows any sign of ``u``."""
    x = u.value
    k = u.order
    is_int = float(a).is_integer()
    if is_int:
        ai = int(a)
        if ai == 0:
            return Jet.constant(np.ones(u.shape), u.n, k)
        if ai < 0 and np.any(x == 0):
            raise DomainViolation("negative power of zero")
        d = []
        for j in range(k + 1):
            if ai >= 0 and j > ai:
                d.append(np.zeros_like(x))
            else:
                d.append(_falling(ai, j) * x ** (ai - j) if ai - j >= 0 else _falling(ai, j) / x ** (j - ai))
        return compose(u, np.stack(d, axis=-1))
    return exp(log(u) * a)


def sqrt(u: Jet) -> Jet:
    if np.any(u.value <= 0):
        raise DomainViolation("square root of a non-positive value")
    return power(u, 0.5)


def reciprocal(u: Jet) -> Jet:
    if np.any(u.value == 0):
        raise DomainViolation("division by zero")
    return power(u, -1)


def tan(u: Jet) -> Jet:
    c = cos(u)
    if np.any(np.abs(c.value) < 1e-300):
        raise DomainViolation("tangent at a pole")
    return sin(u) / c


def tanh(u: Jet) -> Jet:
    return sinh(u) / cosh(u)


def absolute(u: Jet) -> Jet:
    x = u.value
    if u.order > 0 and np.any(x == 0):
        raise DomainViolation("absolute value is not differentiable at zero")
    return u * np.sign(x)


def matrix_inverse(m: Jet) -> Jet:
    """Inverse of a jet of square matrices (last two tensor axes)."""
    m0 = m.value
    inv0 = np.linalg.inv(m0)
    h = Jet(m.c.copy(), m.n, m.order)
    h.c[..., 0] = 0.0
    # (M0 + H)^-1 = sum_j (-M0^-1 H)^j M0^-1 ; H is nilpotent to order+1
    step = Jet(-np.einsum("...ij,...jkZ->...ikZ", inv0, h.c), m.n, m.order)
    term = Jet.constant(inv0, m.n, m.order)
    out = term
    for _ in range(m.order):
        term = jeinsum("...ij,...jk->...ik", step, term)
        out = out + term
    return out
