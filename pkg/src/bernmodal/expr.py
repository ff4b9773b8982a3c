"""A small expression language for problem data.

Grammar (whitespace is ignored between tokens)::

    expr    := term   (("+" | "-") term)*
    term    := unary  (("*" | "/") unary)*
    unary   := "-" unary | power
    power   := atom ("^" unary)?          # right associative
    atom    := NUMBER | "x" | "t" | "pi"
             | FUNC "(" expr ")" | "(" expr ")"
    FUNC    := "sin" | "cos" | "tan" | "exp" | "log" | "sqrt" | "abs"
    NUMBER  := digits ["." digits] [("e" | "E") ["+" | "-"] digits]

So ``-x^2`` is ``-(x^2)`` and ``2^3^2`` is ``2^(3^2)``.  Expressions are
immutable trees; calling one evaluates it on scalars or numpy arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import ExprEvaluationError, ExprSyntaxError

__all__ = [
    "Expr",
    "Num",
    "Var",
    "Const",
    "Neg",
    "BinOp",
    "Call",
    "parse",
    "evaluate",
    "to_string",
    "diff",
    "FUNCTIONS",
]

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}
VARIABLES = ("x", "t")
CONSTANTS = {"pi": math.pi}


class Expr:
    """Base node.  ``expr(x, t)`` evaluates, ``str(expr)`` prints."""

    def __call__(self, x=0.0, t=0.0):
        return evaluate(self, x, t)

    def __str__(self) -> str:
        return to_string(self)

    @cached_property
    def free_variables(self) -> frozenset:
        return frozenset(_free(self))

    # operator sugar used by diff()
    def __add__(self, other):
        return _add(self, _wrap(other))

    def __radd__(self, other):
        return _add(_wrap(other), self)

    def __sub__(self, other):
        return _sub(self, _wrap(other))

    def __rsub__(self, other):
        return _sub(_wrap(other), self)

    def __mul__(self, other):
        return _mul(self, _wrap(other))

    def __rmul__(self, other):
        return _mul(_wrap(other), self)

    def __truediv__(self, other):
        return _div(self, _wrap(other))

    def __neg__(self):
        return _neg(self)

    def __pow__(self, other):
        return _pow(self, _wrap(other))


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: float


@dataclass(frozen=True, eq=True)
class Var(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class Const(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True, eq=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Call(Expr):
    func: str
    arg: Expr


def _free(e: Expr):
    if isinstance(e, Var):
        yield e.name
    elif isinstance(e, Neg):
        yield from _free(e.operand)
    elif isinstance(e, BinOp):
        yield from _free(e.left)
        yield from _free(e.right)
    elif isinstance(e, Call):
        yield from _free(e.arg)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # num | name | op | end
    text: str
    offset: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos == len(text):
            toks.append(_Tok("end", "", pos))
            return toks
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()


_ATOM_START = {"number", "x", "t", "pi", "(", "-", *FUNCTIONS}


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, expected) -> ExprSyntaxError:
        tok = self.cur
        what = "end of input" if tok.kind == "end" else repr(tok.text)
        return ExprSyntaxError(f"unexpected {what}", tok.offset, expected)

    def expect(self, text: str) -> None:
        if self.cur.kind == "op" and self.cur.text == text:
            self.take()
        else:
            raise self.error({text})

    def parse(self) -> Expr:
        e = self.expr()
        if self.cur.kind != "end":
            raise self.error({"+", "-", "*", "/", "^", "end of input"})
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.cur.kind == "op" and self.cur.text in "+-":
            op = self.take().text
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.cur.kind == "op" and self.cur.text in "*/":
            op = self.take().text
            e = BinOp(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.cur.kind == "op" and self.cur.text == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.cur.kind == "op" and self.cur.text == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        tok = self.cur
        if tok.kind == "num":
            self.take()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.take()
            if tok.text in VARIABLES:
                return Var(tok.text)
            if tok.text in CONSTANTS:
                return Const(tok.text)
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg)
            raise ExprSyntaxError(f"unknown name {tok.text!r}", tok.offset, _ATOM_START)
        if tok.kind == "op" and tok.text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        raise self.error(_ATOM_START)


def parse(text: str) -> Expr:
    """Parse ``text``; raises :class:`ExprSyntaxError` with the byte offset."""
    try:
        return _Parser(text).parse()
    except ExprSyntaxError as exc:
        byte_offset = len(text[: exc.offset].encode("utf-8"))
        if byte_offset == exc.offset:
            raise
        raise ExprSyntaxError(exc.message, byte_offset, exc.expected) from None


# ---------------------------------------------------------------- printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _fmt(e: Expr) -> tuple[str, int]:
    """String and binding strength (5 = atom)."""
    if isinstance(e, Num):
        s = repr(float(e.value))
        return (s, 5) if e.value >= 0 and "inf" not in s and "nan" not in s else (f"({s})", 5)
    if isinstance(e, (Var, Const)):
        return e.name, 5
    if isinstance(e, Call):
        return f"{e.func}({_fmt(e.arg)[0]})", 5
    if isinstance(e, Neg):
        s, p = _fmt(e.operand)
        return ("-" + (s if p >= 3 else f"({s})")), 3
    if isinstance(e, BinOp):
        prec = _PREC[e.op]
        ls, lp = _fmt(e.left)
        rs, rp = _fmt(e.right)
        if e.op == "^":
            # base must be an atom; exponent may be a unary or another power
            ls = ls if lp == 5 else f"({ls})"
            rs = rs if rp >= 3 else f"({rs})"
        else:
            ls = ls if lp >= prec else f"({ls})"
            rs = rs if rp > prec else f"({rs})"
        return f"{ls} {e.op} {rs}" if prec == 1 else f"{ls}{e.op}{rs}", prec
    raise TypeError(f"not an expression node: {e!r}")


def to_string(e: Expr) -> str:
    """Print with the minimum parentheses that re-parse to the same tree."""
    return _fmt(e)[0]


# -------------------------------------------------------------- evaluation


def evaluate(e: Expr, x=0.0, t=0.0):
    """Evaluate ``e`` at ``x`` and ``t`` (scalars or broadcastable arrays).

    Floating-point domain errors raise :class:`ExprEvaluationError` instead
    of producing nan or inf.
    """
    env = {"x": np.asarray(x, dtype=float), "t": np.asarray(t, dtype=float)}
    try:
        with np.errstate(divide="raise", invalid="raise", over="raise"):
            out = _eval(e, env)
    except FloatingPointError as exc:
        raise ExprEvaluationError(f"domain error evaluating {to_string(e)}: {exc}") from None
    out = np.asarray(out, dtype=float)
    shape = np.broadcast_shapes(env["x"].shape, env["t"].shape)
    if out.shape != shape:
        out = np.broadcast_to(out, shape).copy()
    return float(out) if out.ndim == 0 else out


def _eval(e: Expr, env):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Neg):
        return -_eval(e.operand, env)
    if isinstance(e, Call):
        arg = _eval(e.arg, env)
        if e.func == "log" and np.any(np.asarray(arg) <= 0):
            raise FloatingPointError("log of a non-positive number")
        if e.func == "sqrt" and np.any(np.asarray(arg) < 0):
            raise FloatingPointError("square root of a negative number")
        return FUNCTIONS[e.func](arg)
    if isinstance(e, BinOp):
        a = _eval(e.left, env)
        b = _eval(e.right, env)
        if e.op == "+":
            return np.add(a, b)
        if e.op == "-":
            return np.subtract(a, b)
        if e.op == "*":
            return np.multiply(a, b)
        if e.op == "/":
            if np.any(np.asarray(b) == 0):
                raise FloatingPointError("division by zero")
            return np.divide(a, b)
        return _power(a, b)
    raise TypeError(f"not an expression node: {e!r}")


def _power(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    integral = b == np.round(b)
    if np.any((a < 0) & ~integral):
        raise FloatingPointError("fractional power of a negative number")
    if np.any((a == 0) & (b < 0)):
        raise FloatingPointError("zero raised to a negative power")
    return np.power(a, b)


# ---------------------------------------------------------- differentiation


def _wrap(v) -> Expr:
    return v if isinstance(v, Expr) else Num(float(v))


def _is_num(e: Expr, v: float | None = None) -> bool:
    return isinstance(e, Num) and (v is None or e.value == v)


def _add(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    if _is_num(a) and _is_num(b):
        return _wrap_signed(a.value + b.value)
    if isinstance(b, Neg):
        return _sub(a, b.operand)
    return BinOp("+", a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return _neg(b)
    if _is_num(a) and _is_num(b):
        return _wrap_signed(a.value - b.value)
    return BinOp("-", a, b)


def _wrap_signed(v: float) -> Expr:
    return Num(v) if v >= 0 else Neg(Num(-v))


def _neg(a: Expr) -> Expr:
    if isinstance(a, Neg):
        return a.operand
    if _is_num(a, 0.0):
        return a
    return Neg(a)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    if _is_num(a) and _is_num(b):
        return _wrap_signed(a.value * b.value)
    if isinstance(a, Neg):
        return _neg(_mul(a.operand, b))
    if isinstance(b, Neg):
        return _neg(_mul(a, b.operand))
    return BinOp("*", a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return Num(0.0)
    if _is_num(b, 1.0):
        return a
    return BinOp("/", a, b)


def _pow(a: Expr, b: Expr) -> Expr:
    if _is_num(b, 0.0):
        return Num(1.0)
    if _is_num(b, 1.0):
        return a
    return BinOp("^", a, b)


def diff(e: Expr, var: str = "x", order: int = 1) -> Expr:
    """Symbolic derivative of ``e`` with respect to ``var``.

    Used internally to build manufactured sources; the result is lightly
    simplified (zeros and ones folded) so repeated derivatives stay small.
    """
    if var not in VARIABLES:
        raise ValueError(f"can only differentiate with respect to {VARIABLES}")
    for _ in range(order):
        e = _d(e, var)
    return e


def _d(e: Expr, v: str) -> Expr:
    if v not in e.free_variables:
        return Num(0.0)
    if isinstance(e, Var):
        return Num(1.0)
    if isinstance(e, Neg):
        return _neg(_d(e.operand, v))
    if isinstance(e, BinOp):
        a, b = e.left, e.right
        if e.op == "+":
            return _add(_d(a, v), _d(b, v))
        if e.op == "-":
            return _sub(_d(a, v), _d(b, v))
        if e.op == "*":
            return _add(_mul(_d(a, v), b), _mul(a, _d(b, v)))
        if e.op == "/":
            return _div(_sub(_mul(_d(a, v), b), _mul(a, _d(b, v))), _pow(b, Num(2.0)))
        if v not in b.free_variables:
            # a^c with constant exponent
            return _mul(_mul(b, _pow(a, _sub(b, Num(1.0)))), _d(a, v))
        # a^b = exp(b log a)
        return _mul(e, _add(_mul(_d(b, v), Call("log", a)), _div(_mul(b, _d(a, v)), a)))
    if isinstance(e, Call):
        u = e.arg
        du = _d(u, v)
        f = e.func
        if f == "sin":
            outer = Call("cos", u)
        elif f == "cos":
            outer = _neg(Call("sin", u))
        elif f == "tan":
            outer = _div(Num(1.0), _pow(Call("cos", u), Num(2.0)))
        elif f == "exp":
            outer = e
        elif f == "log":
            outer = _div(Num(1.0), u)
        elif f == "sqrt":
            outer = _div(Num(1.0), _mul(Num(2.0), e))
        elif f == "abs":
            outer = _div(u, e)
        else:  # pragma: no cover - guarded by the parser
            raise ValueError(f"unknown function {f}")
        return _mul(outer, du)
    raise TypeError(f"not an expression node: {e!r}")
