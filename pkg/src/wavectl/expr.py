"""Formula parsing, exact differentiation and vectorized evaluation.

Grammar (whitespace-insensitive)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := primary (('^' | '**') unary)?
    primary := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'
    NUMBER  := digits ['.' digits] [('e'|'E') ['+'|'-'] digits]

Power binds tighter than unary minus and is right-associative, so
``-x^2`` is ``-(x^2)`` and ``2^3^2`` is ``2^(3^2)``.  Names are the
declared variables, the constants ``pi`` and ``e``, and the functions
sin, cos, tan, exp, ln, sqrt, abs (plus ``sgn``, which only appears as
the derivative of ``abs``).

Error offsets are 0-based byte offsets into the UTF-8 encoded input.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "Expression",
    "ExprError",
    "ParseError",
    "UnknownIdentifierError",
    "DomainError",
    "NonDifferentiableWarning",
    "parse",
    "differentiate",
    "evaluate",
]


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} (at byte offset {offset})")


class UnknownIdentifierError(ParseError):
    def __init__(self, name: str, offset: int, text: str = ""):
        self.name = name
        super().__init__(f"unknown identifier {name!r}", offset, text)


class DomainError(ExprError, ArithmeticError):
    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (node at byte offset {offset})")


class NonDifferentiableWarning(RuntimeWarning):
    pass


FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt", "abs", "sgn")
CONSTANTS = {"pi": math.pi, "e": math.e}


# --------------------------------------------------------------------------
# nodes


@dataclass(frozen=True)
class Node:
    pos: int = field(default=0, compare=False, kw_only=True)


@dataclass(frozen=True)
class Num(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    name: str


@dataclass(frozen=True)
class Const(Node):
    name: str


@dataclass(frozen=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Call(Node):
    fn: str
    arg: Node


# --------------------------------------------------------------------------
# simplifying constructors: constant folding and identity elimination only


def _is_num(n: Node, v: float | None = None) -> bool:
    return isinstance(n, Num) and (v is None or n.value == v)


def num(v: float, pos: int = 0) -> Node:
    return Num(float(v), pos=pos)


def neg(a: Node, pos: int | None = None) -> Node:
    pos = a.pos if pos is None else pos
    if isinstance(a, Num):
        return Num(-a.value, pos=pos)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a, pos=pos)


def add(a: Node, b: Node, pos: int | None = None) -> Node:
    pos = a.pos if pos is None else pos
    if _is_num(a) and _is_num(b):
        return Num(a.value + b.value, pos=pos)
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    if isinstance(b, Neg):
        return BinOp("-", a, b.arg, pos=pos)
    return BinOp("+", a, b, pos=pos)


def sub(a: Node, b: Node, pos: int | None = None) -> Node:
    pos = a.pos if pos is None else pos
    if _is_num(a) and _is_num(b):
        return Num(a.value - b.value, pos=pos)
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return neg(b)
    if isinstance(b, Neg):
        return BinOp("+", a, b.arg, pos=pos)
    return BinOp("-", a, b, pos=pos)


def mul(a: Node, b: Node, pos: int | None = None) -> Node:
    pos = a.pos if pos is None else pos
    if _is_num(a) and _is_num(b):
        return Num(a.value * b.value, pos=pos)
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return Num(0.0, pos=pos)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    if _is_num(a, -1.0):
        return neg(b)
    if _is_num(b, -1.0):
        return neg(a)
    if _is_num(b) and not _is_num(a):
        a, b = b, a
    if _is_num(a) and isinstance(b, BinOp) and b.op == "*" and _is_num(b.left):
        return mul(Num(a.value * b.left.value, pos=pos), b.right, pos=pos)
    return BinOp("*", a, b, pos=pos)


def div(a: Node, b: Node, pos: int | None = None) -> Node:
    pos = a.pos if pos is None else pos
    if _is_num(a) and _is_num(b) and b.value != 0.0:
        return Num(a.value / b.value, pos=pos)
    if _is_num(b, 1.0):
        return a
    if _is_num(a, 0.0) and not _is_num(b, 0.0):
        return Num(0.0, pos=pos)
    return BinOp("/", a, b, pos=pos)


def power(a: Node, b: Node, pos: int | None = None) -> Node:
    pos = a.pos if pos is None else pos
    if _is_num(b, 0.0):
        return Num(1.0, pos=pos)
    if _is_num(b, 1.0):
        return a
    if _is_num(a) and _is_num(b):
        try:
            v = a.value**b.value
        except (OverflowError, ZeroDivisionError):
            v = None
        if isinstance(v, float) and math.isfinite(v):
            return Num(v, pos=pos)
    return BinOp("^", a, b, pos=pos)


def call(fn: str, a: Node, pos: int | None = None) -> Node:
    return Call(fn, a, pos=a.pos if pos is None else pos)


# --------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^()])"
    r")"
)


@dataclass
class _Tok:
    kind: str  # num, name, op, end
    text: str
    offset: int  # byte offset


def _tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i = 0
    n = len(text)

    def boff(ci: int) -> int:
        return len(text[:ci].encode("utf-8"))

    while i < n:
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN.match(text, i)
        if m is None or m.end() == i:
            raise ParseError(f"unexpected character {text[i]!r}", boff(i), text)
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(_Tok(kind, m.group(kind), boff(start)))
        i = m.end()
    toks.append(_Tok("end", "", boff(n)))
    return toks


class _Parser:
    def __init__(self, text: str, variables: Sequence[str]):
        self.text = text
        self.vars = tuple(variables)
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def _fail(self, expected: str):
        t = self.tok
        got = "end of input" if t.kind == "end" else repr(t.text)
        raise ParseError(f"expected {expected}, got {got}", t.offset, self.text)

    def _accept(self, *ops: str) -> _Tok | None:
        t = self.tok
        if t.kind == "op" and t.text in ops:
            self.i += 1
            return t
        return None

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            self._fail("operator or end of input")
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            t = self._accept("+", "-")
            if t is None:
                return node
            rhs = self.term()
            node = BinOp(t.text, node, rhs, pos=t.offset)

    def term(self) -> Node:
        node = self.unary()
        while True:
            t = self._accept("*", "/")
            if t is None:
                return node
            rhs = self.unary()
            node = BinOp(t.text, node, rhs, pos=t.offset)

    def unary(self) -> Node:
        t = self._accept("-", "+")
        if t is not None:
            arg = self.unary()
            return Neg(arg, pos=t.offset) if t.text == "-" else arg
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        t = self._accept("^", "**")
        if t is not None:
            exponent = self.unary()
            return BinOp("^", base, exponent, pos=t.offset)
        return base

    def primary(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Num(float(t.text), pos=t.offset)
        if t.kind == "name":
            self.i += 1
            if t.text in FUNCTIONS:
                if self._accept("(") is None:
                    self._fail(f"'(' after {t.text}")
                arg = self.expr()
                if self._accept(")") is None:
                    self._fail("')'")
                return Call(t.text, arg, pos=t.offset)
            if t.text in self.vars:
                return Var(t.text, pos=t.offset)
            if t.text in CONSTANTS:
                return Const(t.text, pos=t.offset)
            raise UnknownIdentifierError(t.text, t.offset, self.text)
        if self._accept("(") is not None:
            node = self.expr()
            if self._accept(")") is None:
                self._fail("')'")
            return node
        self._fail("number, name or '('")


# --------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _fmt_num(v: float) -> str:
    if v.is_integer() and abs(v) < 1e16:
        s = str(int(v))
    else:
        s = repr(v)
    return f"({s})" if v < 0 or s.startswith("-") else s


def to_string(node: Node) -> str:
    def go(n: Node, parent: int, right: bool = False) -> str:
        if isinstance(n, Num):
            return _fmt_num(n.value)
        if isinstance(n, (Var, Const)):
            return n.name
        if isinstance(n, Call):
            return f"{n.fn}({go(n.arg, 0)})"
        if isinstance(n, Neg):
            s = "-" + go(n.arg, _PREC["neg"])
            return f"({s})" if parent >= _PREC["neg"] else s
        p = _PREC[n.op]
        if n.op == "^":
            s = f"{go(n.left, p + 1)}^{go(n.right, p)}"
        else:
            # left-assoc: the right operand needs parens at equal precedence
            s = f"{go(n.left, p)} {n.op} {go(n.right, p + 1)}"
        return f"({s})" if p < parent else s

    return go(node, 0)


# --------------------------------------------------------------------------
# differentiation


def _depends(node: Node, var: str) -> bool:
    if isinstance(node, Var):
        return node.name == var
    if isinstance(node, (Num, Const)):
        return False
    if isinstance(node, (Neg, Call)):
        return _depends(node.arg, var)
    return _depends(node.left, var) or _depends(node.right, var)


def _d(node: Node, var: str) -> Node:
    if not _depends(node, var):
        return Num(0.0, pos=node.pos)
    if isinstance(node, Var):
        return Num(1.0, pos=node.pos)
    if isinstance(node, Neg):
        return neg(_d(node.arg, var), pos=node.pos)
    if isinstance(node, BinOp):
        a, b, op, p = node.left, node.right, node.op, node.pos
        if op == "+":
            return add(_d(a, var), _d(b, var), pos=p)
        if op == "-":
            return sub(_d(a, var), _d(b, var), pos=p)
        if op == "*":
            return add(mul(_d(a, var), b, pos=p), mul(a, _d(b, var), pos=p), pos=p)
        if op == "/":
            top = sub(mul(_d(a, var), b, pos=p), mul(a, _d(b, var), pos=p), pos=p)
            return div(top, power(b, num(2.0), pos=p), pos=p)
        # power
        if not _depends(b, var):
            return mul(mul(b, power(a, sub(b, num(1.0)), pos=p), pos=p), _d(a, var), pos=p)
        # a^b = exp(b ln a)
        inner = add(
            mul(_d(b, var), call("ln", a, pos=p), pos=p),
            div(mul(b, _d(a, var), pos=p), a, pos=p),
            pos=p,
        )
        return mul(node, inner, pos=p)
    assert isinstance(node, Call)
    u, fn, p = node.arg, node.fn, node.pos
    du = _d(u, var)
    if fn == "sin":
        outer = call("cos", u, pos=p)
    elif fn == "cos":
        outer = neg(call("sin", u, pos=p), pos=p)
    elif fn == "tan":
        outer = add(num(1.0), power(call("tan", u, pos=p), num(2.0)), pos=p)
    elif fn == "exp":
        outer = node
    elif fn == "ln":
        return div(du, u, pos=p)
    elif fn == "sqrt":
        return div(du, mul(num(2.0), node, pos=p), pos=p)
    elif fn == "abs":
        outer = call("sgn", u, pos=p)
    elif fn == "sgn":
        return Num(0.0, pos=p)
    else:  # pragma: no cover - parser rejects unknown functions
        raise ExprError(f"cannot differentiate {fn}")
    return mul(outer, du, pos=p)


# --------------------------------------------------------------------------
# evaluation


def _ev(node: Node, env: Mapping[str, np.ndarray]) -> np.ndarray:
    if isinstance(node, Num):
        return np.float64(node.value)
    if isinstance(node, Const):
        return np.float64(CONSTANTS[node.name])
    if isinstance(node, Var):
        return env[node.name]
    if isinstance(node, Neg):
        return -_ev(node.arg, env)
    if isinstance(node, BinOp):
        a = _ev(node.left, env)
        b = _ev(node.right, env)
        op = node.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if np.any(b == 0):
                raise DomainError("division by zero", node.pos)
            return a / b
        # power: negative base needs an integer exponent
        if np.any((a < 0) & (b != np.round(b))):
            raise DomainError("negative base with non-integer exponent", node.pos)
        if np.any((a == 0) & (b < 0)):
            raise DomainError("zero raised to a negative power", node.pos)
        return np.power(a, b)
    assert isinstance(node, Call)
    u = _ev(node.arg, env)
    fn = node.fn
    if fn == "ln":
        if np.any(u <= 0):
            raise DomainError("ln of non-positive value", node.pos)
        return np.log(u)
    if fn == "sqrt":
        if np.any(u < 0):
            raise DomainError("sqrt of negative value", node.pos)
        return np.sqrt(u)
    if fn == "sgn":
        if np.any(u == 0):
            warnings.warn(
                f"derivative of abs evaluated where its argument vanishes "
                f"(node at byte offset {node.pos})",
                NonDifferentiableWarning,
                stacklevel=4,
            )
        return np.sign(u)
    return {"sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "abs": np.abs}[fn](u)


def _contains_abs(node: Node) -> bool:
    if isinstance(node, Call):
        return node.fn in ("abs", "sgn") or _contains_abs(node.arg)
    if isinstance(node, Neg):
        return _contains_abs(node.arg)
    if isinstance(node, BinOp):
        return _contains_abs(node.left) or _contains_abs(node.right)
    return False


# --------------------------------------------------------------------------
# public API


@dataclass(frozen=True)
class Expression:
    """Immutable parsed formula in one (or a few) named variables."""

    root: Node
    variables: tuple[str, ...] = ("x",)

    def __str__(self) -> str:
        return to_string(self.root)

    def __repr__(self) -> str:
        return f"Expression({to_string(self.root)!r}, variables={self.variables})"

    def __call__(self, *args):
        return evaluate(self, *args)

    @property
    def has_abs(self) -> bool:
        return _contains_abs(self.root)

    def is_constant(self) -> bool:
        return not any(_depends(self.root, v) for v in self.variables)

    def diff(self, order: int = 1, var: str | None = None) -> "Expression":
        return differentiate(self, order, var)

    # composition helpers used by higher modules to build derived profiles
    def substitute(self, var: str, replacement: Node) -> "Expression":
        def go(n: Node) -> Node:
            if isinstance(n, Var) and n.name == var:
                return replacement
            if isinstance(n, Neg):
                return neg(go(n.arg))
            if isinstance(n, Call):
                return call(n.fn, go(n.arg), pos=n.pos)
            if isinstance(n, BinOp):
                ctor = {"+": add, "-": sub, "*": mul, "/": div, "^": power}[n.op]
                return ctor(go(n.left), go(n.right), pos=n.pos)
            return n

        return Expression(go(self.root), self.variables)


def parse(text: str, variables: Sequence[str] = ("x",)) -> Expression:
    if not text or not text.strip():
        raise ParseError("empty expression", 0, text)
    for v in variables:
        if v in FUNCTIONS or v in CONSTANTS:
            raise ExprError(f"variable name {v!r} shadows a builtin")
    root = _Parser(text, variables).parse()
    return Expression(root, tuple(variables))


def differentiate(e: Expression, order: int = 1, var: str | None = None) -> Expression:
    if order < 0 or order > 3:
        raise ValueError("derivative order must be in 0..3")
    if var is None:
        if len(e.variables) != 1:
            raise ValueError("multivariate expression: name the variable")
        var = e.variables[0]
    node = e.root
    for _ in range(order):
        node = _d(node, var)
    return Expression(node, e.variables)


def evaluate(e: Expression, *args):
    """Evaluate at scalar or array arguments (one per declared variable).

    Scalars in give a Python float out; arrays are broadcast together.
    """
    if len(args) == 1 and isinstance(args[0], Mapping):
        env_in = args[0]
        args = tuple(env_in[v] for v in e.variables)
    if len(args) != len(e.variables):
        raise TypeError(f"expected {len(e.variables)} argument(s), got {len(args)}")
    arrays = [np.asarray(a, dtype=float) for a in args]
    scalar = all(a.ndim == 0 for a in arrays)
    shape = np.broadcast_shapes(*(a.shape for a in arrays))
    env = {v: np.broadcast_to(a, shape) for v, a in zip(e.variables, arrays)}
    with np.errstate(all="ignore"):
        out = _ev(e.root, env)
    out = np.broadcast_to(np.asarray(out, dtype=float), shape)
    if scalar:
        return float(out)
    return np.array(out)
