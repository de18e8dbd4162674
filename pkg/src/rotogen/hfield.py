"""Prescribed mean curvature ``H(s)`` as a function of arclength.

Four kinds are supported: constants, polynomials (ascending coefficients),
piecewise-linear tables and expressions in ``s`` written in a small grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := unary ('^' factor)?
    unary  := '-'? atom
    atom   := number | 's' | func '(' expr ')' | '(' expr ')'
    func   := sin | cos | exp | tanh | abs

Every field evaluates on floats and on numpy arrays.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError, HFieldError, ParseError


class HField:
    kind = "abstract"

    def eval_array(self, s):
        raise NotImplementedError

    def __call__(self, s):
        return self.eval(s)

    def eval(self, s: float) -> float:
        return float(self.eval_array(np.asarray([float(s)]))[0])

    def to_text(self) -> str:
        raise NotImplementedError

    def out_of_range(self, s) -> bool:
        return False


@dataclass(frozen=True)
class ConstantH(HField):
    value: float
    kind = "constant"

    def eval(self, s):
        return float(self.value)

    def eval_array(self, s):
        return np.full(np.shape(s), float(self.value))

    def to_text(self):
        return f"constant:{self.value!r}"


@dataclass(frozen=True)
class PolynomialH(HField):
    coeffs: tuple
    kind = "polynomial"

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise HFieldError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    def eval(self, s):
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * s + c
        return float(acc)

    def eval_array(self, s):
        return np.polynomial.polynomial.polyval(np.asarray(s, dtype=float), self.coeffs)

    def to_text(self):
        return "polynomial:" + ",".join(repr(c) for c in self.coeffs)


@dataclass(frozen=True)
class TableH(HField):
    """Linear interpolation through ``(s_i, H_i)``, clamped outside the range."""

    s: tuple
    values: tuple
    kind = "table"

    def __post_init__(self):
        s = tuple(float(x) for x in self.s)
        h = tuple(float(x) for x in self.values)
        if len(s) < 2 or len(s) != len(h):
            raise HFieldError("table needs at least two (s, H) rows of equal length")
        if any(b <= a for a, b in zip(s, s[1:])):
            raise HFieldError("table abscissae must be strictly increasing")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "values", h)

    def eval_array(self, s):
        return np.interp(np.asarray(s, dtype=float), self.s, self.values)

    def out_of_range(self, s) -> bool:
        s = np.asarray(s, dtype=float)
        return bool(np.any((s < self.s[0]) | (s > self.s[-1])))

    def to_text(self):
        return "table:" + ";".join(f"{a!r},{b!r}" for a, b in zip(self.s, self.values))


# ---------------------------------------------------------------------------
# expression trees

FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "tanh": np.tanh, "abs": np.abs}


@dataclass(frozen=True)
class Num:
    value: float
    pos: int

    def ev(self, s):
        return np.full(np.shape(s), self.value)

    def text(self):
        return repr(self.value) if self.value >= 0 else f"({self.value!r})"


@dataclass(frozen=True)
class Var:
    pos: int

    def ev(self, s):
        return s

    def text(self):
        return "s"


@dataclass(frozen=True)
class Neg:
    arg: object
    pos: int

    def ev(self, s):
        return -self.arg.ev(s)

    def text(self):
        return f"(-{self.arg.text()})"


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object
    pos: int

    def ev(self, s):
        a, b = self.left.ev(s), self.right.ev(s)
        with np.errstate(all="ignore"):
            if self.op == "+":
                out = a + b
            elif self.op == "-":
                out = a - b
            elif self.op == "*":
                out = a * b
            elif self.op == "/":
                if np.any(b == 0.0):
                    raise EvaluationError("division by zero", self.pos)
                out = a / b
            else:
                out = np.power(a, b)
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"non-finite result of '{self.op}'", self.pos)
        return out

    def text(self):
        return f"({self.left.text()}{self.op}{self.right.text()})"


@dataclass(frozen=True)
class Call:
    name: str
    arg: object
    pos: int

    def ev(self, s):
        with np.errstate(all="ignore"):
            out = FUNCS[self.name](self.arg.ev(s))
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"non-finite result of {self.name}()", self.pos)
        return out

    def text(self):
        return f"{self.name}({self.arg.text()})"


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    raw = text.encode("utf-8")
    if len(raw) != len(text):
        # Work in bytes so reported offsets are byte offsets.
        bad = next(i for i, ch in enumerate(text) if ord(ch) > 127)
        raise ParseError(f"unexpected character {text[bad]!r}", len(text[:bad].encode("utf-8")))
    tokens = []
    i = 0
    while i < len(text):
        if text[i:].strip() == "":
            break
        m = _TOKEN.match(text, i)
        if not m:
            j = i
            while text[j].isspace():
                j += 1
            raise ParseError(f"unexpected character {text[j]!r}", j)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        i = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, op, pos = self.take()
            node = Bin(op, node, self.term(), pos)
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, op, pos = self.take()
            node = Bin(op, node, self.factor(), pos)
        return node

    def factor(self):
        node = self.unary()
        if self.peek()[1] == "^":
            _, _, pos = self.take()
            node = Bin("^", node, self.factor(), pos)
        return node

    def unary(self):
        if self.peek()[1] == "-":
            _, _, pos = self.take()
            return Neg(self.atom(), pos)
        return self.atom()

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val), pos)
        if kind == "id":
            if val == "s":
                return Var(pos)
            if val in FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg, pos)
            raise ParseError(f"unknown identifier {val!r} (allowed: s, {', '.join(FUNCS)})", pos)
        if val == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"expected a number, 's', a function or '(', found {found}", pos)


@dataclass(frozen=True)
class ExpressionH(HField):
    source: str
    tree: object = field(compare=False)
    kind = "expression"

    def eval_array(self, s):
        s = np.asarray(s, dtype=float)
        return np.asarray(self.tree.ev(s), dtype=float) * np.ones_like(s)

    def to_text(self):
        return self.tree.text()


def parse_expression(text: str):
    return _Parser(text).parse()


def parse_h(text: str) -> HField:
    """Parse an expression; a bare number gives a constant field."""
    tree = parse_expression(text)
    if isinstance(tree, Num):
        return ConstantH(tree.value)
    if isinstance(tree, Neg) and isinstance(tree.arg, Num):
        return ConstantH(-tree.arg.value)
    return ExpressionH(text, tree)


def eval_h(h: HField, s: float) -> float:
    return h.eval(s)


@dataclass(frozen=True)
class SignedH:
    """``sign * H``, the curvature seen along a branch parametrized by ``v``."""

    base: HField
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise HFieldError(f"sign must be +1 or -1, got {self.sign!r}")

    def __call__(self, s):
        return self.sign * self.base.eval(s)

    def eval_array(self, s):
        return self.sign * self.base.eval_array(s)


def signed_eval(h: SignedH, s_of_v: float) -> float:
    return h(s_of_v)


def is_zero(h: HField) -> bool:
    return isinstance(h, ConstantH) and h.value == 0.0
