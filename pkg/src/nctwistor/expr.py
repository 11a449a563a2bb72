"""Scalar expressions in chart coordinates.

Grammar (``^`` binds tightest and is right associative)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?
    atom   := number | 'pi' | name | func '(' expr ')' | '(' expr ')'

Names are either the chart's coordinate names or the generic ``x1..xn``.
Evaluation produces :class:`~nctwistor.jet.Jet` objects, so any
expression can be differentiated exactly up to the requested order.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import jet as J
from .jet import Jet

DEFAULT_ORDER = 4
MAX_ORDER = J.MAX_ORDER

UNARY_FUNCS = ("sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "ln", "sqrt", "abs")


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class UnknownIdentifier(ExprError):
    pass


class VariableOutOfRange(ExprError):
    pass


class DomainError(ExprError):
    def __init__(self, message: str, subexpr: "Expr"):
        super().__init__(f"{message} in subexpression '{to_text(subexpr)}'")
        self.subexpr = subexpr


# --- tree -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 0-based


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # 'neg' or a function name
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Var, Const, Unary, Binary]

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return 3
    return 5


def _fmt_num(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def to_text(e: Expr, names: Sequence[str] | None = None) -> str:
    """Render ``e`` so that re-parsing reproduces the same tree."""
    if isinstance(e, Num):
        return _fmt_num(e.value)
    if isinstance(e, Var):
        return names[e.index] if names is not None else f"x{e.index + 1}"
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Unary):
        inner = to_text(e.arg, names)
        if e.op == "neg":
            return f"-({inner})" if _prec(e.arg) < 3 else f"-{inner}"
        return f"{e.op}({inner})"
    p = _PREC[e.op]
    lt, rt = to_text(e.left, names), to_text(e.right, names)
    if e.op == "^":
        if _prec(e.left) <= 4:
            lt = f"({lt})"
        if _prec(e.right) < 4:
            rt = f"({rt})"
        return f"{lt}^{rt}"
    if _prec(e.left) < p:
        lt = f"({lt})"
    if _prec(e.right) <= p:
        rt = f"({rt})"
    return f"{lt} {e.op} {rt}"


# --- parser -----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str, n_vars: int, names: Sequence[str] | None):
        self.text = text
        self.n = n_vars
        self.names = {nm: i for i, nm in enumerate(names)} if names else {}
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
                raise ExprSyntaxError(f"unexpected character {text[start]!r}", self._bytes(start))
            kind = m.lastgroup
            self.toks.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.toks.append(("end", "", len(text)))
        self.i = 0

    def _bytes(self, pos: int) -> int:
        return len(self.text[:pos].encode("utf-8"))

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, val: str):
        kind, v, pos = self.take()
        if v != val or kind != "op":
            raise ExprSyntaxError(f"expected {val!r}, found {v or 'end of input'!r}", self._bytes(pos))

    def parse(self) -> Expr:
        e = self.expr()
        kind, v, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {v!r}", self._bytes(pos))
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = Binary(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = Binary(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        kind, v, _ = self.peek()
        if kind == "op" and v == "-":
            self.take()
            return Unary("neg", self.unary())
        if kind == "op" and v == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, v, _ = self.peek()
        if kind == "op" and v == "^":
            self.take()
            return Binary("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, v, pos = self.take()
        if kind == "num":
            return Num(float(v))
        if kind == "op" and v == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            if v in self.names:
                return Var(self.names[v])
            if v in UNARY_FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(v, arg)
            if v == "pi":
                return Const("pi")
            m = re.fullmatch(r"x(\d+)", v)
            if m:
                k = int(m.group(1))
                if not 1 <= k <= self.n:
                    raise VariableOutOfRange(f"variable {v} out of range for {self.n} coordinates")
                return Var(k - 1)
            raise UnknownIdentifier(f"unknown identifier {v!r} at byte offset {self._bytes(pos)}")
        raise ExprSyntaxError(f"unexpected token {v or 'end of input'!r}", self._bytes(pos))


def parse_expr(text: str, n_vars: int, names: Sequence[str] | None = None) -> Expr:
    """Parse ``text`` over ``n_vars`` coordinates (optionally with custom names)."""
    return _Parser(text, n_vars, names).parse()


# --- tree utilities ----------------------------------------------------------

def variables(e: Expr) -> set[int]:
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, Unary):
        return variables(e.arg)
    if isinstance(e, Binary):
        return variables(e.left) | variables(e.right)
    return set()


def remap(e: Expr, mapping) -> Expr:
    """Replace each ``Var(i)`` by ``Var(mapping[i])``."""
    if isinstance(e, Var):
        return Var(mapping[e.index])
    if isinstance(e, Unary):
        return Unary(e.op, remap(e.arg, mapping))
    if isinstance(e, Binary):
        return Binary(e.op, remap(e.left, mapping), remap(e.right, mapping))
    return e


def num(v: float) -> Expr:
    return Num(float(v)) if v >= 0 else Unary("neg", Num(float(-v)))


def mul(a: Expr, b: Expr) -> Expr:
    return Binary("*", a, b)


def add(a: Expr, b: Expr) -> Expr:
    return Binary("+", a, b)


def is_zero_literal(e: Expr) -> bool:
    return isinstance(e, Num) and e.value == 0.0


# --- evaluation ---------------------------------------------------------------

_FUNCS = {
    "sin": J.sin,
    "cos": J.cos,
    "tan": J.tan,
    "sinh": J.sinh,
    "cosh": J.cosh,
    "tanh": J.tanh,
    "exp": J.exp,
    "ln": J.log,
    "sqrt": J.sqrt,
    "abs": J.absolute,
}


def _constant_value(e: Expr) -> float | None:
    if variables(e):
        return None
    return float(eval_jet(e, np.zeros(1), 0).value)


def _eval(e: Expr, point: np.ndarray, order: int) -> Jet:
    if isinstance(e, Num):
        return Jet.constant(np.full(point.shape[:-1], e.value), point.shape[-1], order)
    if isinstance(e, Const):
        return Jet.constant(np.full(point.shape[:-1], math.pi), point.shape[-1], order)
    if isinstance(e, Var):
        if e.index >= point.shape[-1]:
            raise VariableOutOfRange(f"variable x{e.index + 1} out of range for {point.shape[-1]} coordinates")
        return Jet.variable(point, e.index, order)
    if isinstance(e, Unary):
        a = _eval(e.arg, point, order)
        if e.op == "neg":
            return -a
        try:
            with np.errstate(all="raise"):
                return _FUNCS[e.op](a)
        except (J.DomainViolation, FloatingPointError) as exc:
            raise DomainError(str(exc), e) from None
    a = _eval(e.left, point, order)
    if e.op == "^":
        c = _constant_value(e.right)
        try:
            with np.errstate(all="raise"):
                if c is not None:
                    if not float(c).is_integer() and np.any(a.value <= 0):
                        raise J.DomainViolation("non-integer power of a non-positive base")
                    return J.power(a, c)
                b = _eval(e.right, point, order)
                return J.exp(J.log(a) * b)
        except (J.DomainViolation, FloatingPointError) as exc:
            raise DomainError(str(exc), e) from None
    b = _eval(e.right, point, order)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if np.any(b.value == 0):
        raise DomainError("division by zero", e)
    return a / b


def eval_jet(e: Expr, point, order: int = DEFAULT_ORDER) -> Jet:
    """Jet of ``e`` at ``point`` through total order ``order``.

    ``point`` may carry leading batch axes; the last axis is the coordinate.
    """
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"jet order must be in 0..{MAX_ORDER}")
    point = np.asarray(point, dtype=float)
    return _eval(e, point, order)


def evaluate(e: Expr, point) -> np.ndarray:
    """Plain numerical value of ``e`` (batched like :func:`eval_jet`)."""
    return eval_jet(e, point, 0).value


def partial(j: Jet, multi_index) -> float:
    """Stored derivative of ``j`` for a list of (0-based) variable positions."""
    return j.partial(multi_index)
