"""A small arithmetic expression language for test functions.

Grammar (whitespace-insensitive):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' exponent)?
    atom   := NUMBER | NAME | '(' expr ')'

Precedence from tightest to loosest: ^  unary-  * /  + -, all binary
operators left-associative except ^.  Exponents are nonnegative integer
literals (chains like a^2^3 associate to the right before the tower is
collapsed), so ``-w2^2`` means -(w2^2).  Names are the coordinates
w1, w2, ... and the single scalar x used for one-variable functions.

Parsing never raises anything but `ExpressionError`, which carries the
byte offset and the expected-token set.  Evaluation is plain float64
numpy arithmetic; division by zero is an `EvaluationError` rather than
an infinity, and coordinate indexes are checked against the dimension of
the supplied points.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .basis import SphericalFunction

EXPONENT_CAP = 4096


class ExpressionError(ValueError):
    """Parse failure with a byte offset into the source text."""

    def __init__(self, message: str, text: str, position: int,
                 expected: tuple[str, ...] = ()):
        self.text = text
        self.position = position
        self.expected = expected
        detail = f"{message} at offset {position}"
        if expected:
            detail += f" (expected {' or '.join(expected)})"
        super().__init__(f"{detail}\n  {text}\n  {' ' * position}^")


class EvaluationError(ValueError):
    """Runtime failure: dimension mismatch or division by zero."""


# --- syntax tree ----------------------------------------------------------


@dataclass(frozen=True)
class Node:
    pass


@dataclass(frozen=True)
class Num(Node):
    value: float


@dataclass(frozen=True)
class Coord(Node):
    index: int  # 1-based


@dataclass(frozen=True)
class ScalarVar(Node):
    pass


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Neg(Node):
    child: Node


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int


# --- tokenizer ------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>[-+*/^()])"
)

_END = ("end", "", -1)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExpressionError(f"unexpected character {text[pos]!r}",
                                  text, pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), m.start()))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def cur(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected: tuple[str, ...]):
        kind, value, pos = self.cur
        what = "end of input" if kind == "end" else repr(value)
        raise ExpressionError(f"unexpected {what}", self.text, pos, expected)

    def parse(self) -> Node:
        node = self.expr()
        if self.cur[0] != "end":
            self.fail(("operator", "end of input"))
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.cur[:2] in (("op", "+"), ("op", "-")):
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.cur[:2] in (("op", "*"), ("op", "/")):
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.cur[:2] == ("op", "-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.cur[:2] != ("op", "^"):
            return base
        self.advance()
        return Pow(base, self.exponent_tower())

    def exponent_tower(self) -> int:
        kind, value, pos = self.cur
        if kind != "num":
            self.fail(("nonnegative integer exponent",))
        try:
            exponent = int(value)
        except ValueError:
            raise ExpressionError("exponent must be a nonnegative integer",
                                  self.text, pos) from None
        self.advance()
        if self.cur[:2] == ("op", "^"):
            self.advance()
            upper = self.exponent_tower()
            if upper > 64 or exponent ** min(upper, 64) > EXPONENT_CAP:
                raise ExpressionError(
                    f"exponent exceeds cap {EXPONENT_CAP}", self.text, pos)
            exponent = exponent ** upper
        if exponent > EXPONENT_CAP:
            raise ExpressionError(
                f"exponent exceeds cap {EXPONENT_CAP}", self.text, pos)
        return exponent

    def atom(self) -> Node:
        kind, value, pos = self.cur
        if kind == "num":
            self.advance()
            return Num(float(value))
        if kind == "name":
            self.advance()
            if value == "x":
                return ScalarVar()
            m = re.fullmatch(r"w([1-9]\d*)", value)
            if m:
                return Coord(int(m.group(1)))
            raise ExpressionError(f"unknown identifier {value!r}",
                                  self.text, pos)
        if kind == "op" and value == "(":
            self.advance()
            node = self.expr()
            if self.cur[:2] != ("op", ")"):
                self.fail(("')'",))
            self.advance()
            return node
        self.fail(("number", "name", "'('"))


# --- public expression object --------------------------------------------


@dataclass(frozen=True)
class Expression:
    """A parsed, immutable expression over w1..wd and/or x."""

    text: str
    root: Node

    @property
    def max_coordinate(self) -> int:
        return _max_coordinate(self.root)

    @property
    def uses_scalar(self) -> bool:
        return _uses_scalar(self.root)

    def __call__(self, points) -> np.ndarray:
        """Evaluate with w_i bound to the point coordinates (1-based)."""
        points = np.asarray(points, dtype=float)
        if points.ndim < 1:
            raise EvaluationError("points must have a coordinate axis")
        if self.uses_scalar:
            raise EvaluationError(
                f"{self.text!r} uses the scalar variable x; "
                "evaluate it with eval_scalar")
        d = points.shape[-1]
        if self.max_coordinate > d:
            raise EvaluationError(
                f"{self.text!r} uses w{self.max_coordinate} but the points "
                f"have dimension {d}")
        return _eval(self.root, points, None)

    def eval_scalar(self, x) -> np.ndarray:
        """Evaluate with x bound; coordinate variables are not allowed."""
        if self.max_coordinate > 0:
            raise EvaluationError(
                f"{self.text!r} uses coordinate variables; evaluate it "
                "on points")
        return _eval(self.root, None, np.asarray(x, dtype=float))

    def pretty(self) -> str:
        return _pretty(self.root, 0)


def parse(text: str) -> Expression:
    """Parse ``text``; raises ExpressionError with position on failure."""
    if not isinstance(text, str):
        raise ExpressionError("expression must be a string", str(text), 0)
    return Expression(text, _Parser(text).parse())


def _max_coordinate(node: Node) -> int:
    if isinstance(node, Coord):
        return node.index
    if isinstance(node, BinOp):
        return max(_max_coordinate(node.left), _max_coordinate(node.right))
    if isinstance(node, Neg):
        return _max_coordinate(node.child)
    if isinstance(node, Pow):
        return _max_coordinate(node.base)
    return 0


def _uses_scalar(node: Node) -> bool:
    if isinstance(node, ScalarVar):
        return True
    if isinstance(node, BinOp):
        return _uses_scalar(node.left) or _uses_scalar(node.right)
    if isinstance(node, Neg):
        return _uses_scalar(node.child)
    if isinstance(node, Pow):
        return _uses_scalar(node.base)
    return False


def _eval(node: Node, points, scalar):
    if isinstance(node, Num):
        shape = () if points is None and scalar is None else \
            (scalar.shape if points is None else points.shape[:-1])
        return np.full(shape, node.value)
    if isinstance(node, Coord):
        return points[..., node.index - 1]
    if isinstance(node, ScalarVar):
        return scalar + 0.0
    if isinstance(node, Neg):
        return -_eval(node.child, points, scalar)
    if isinstance(node, Pow):
        return _eval(node.base, points, scalar) ** node.exponent
    left = _eval(node.left, points, scalar)
    right = _eval(node.right, points, scalar)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if np.any(right == 0.0):
        raise EvaluationError("division by zero")
    return left / right


# Precedence levels for printing with minimal parentheses.
_ADD, _MUL, _UNARY, _POW, _ATOM = 1, 2, 3, 4, 5


def _level(node: Node) -> int:
    if isinstance(node, BinOp):
        return _ADD if node.op in "+-" else _MUL
    if isinstance(node, Neg):
        return _UNARY
    if isinstance(node, Pow):
        return _POW
    return _ATOM


def _pretty(node: Node, min_level: int) -> str:
    if isinstance(node, Num):
        out = repr(node.value)
    elif isinstance(node, Coord):
        out = f"w{node.index}"
    elif isinstance(node, ScalarVar):
        out = "x"
    elif isinstance(node, Neg):
        out = f"-{_pretty(node.child, _UNARY)}"
    elif isinstance(node, Pow):
        out = f"{_pretty(node.base, _ATOM)}^{node.exponent}"
    else:
        lvl = _level(node)
        sep = f" {node.op} " if lvl == _ADD else node.op
        out = f"{_pretty(node.left, lvl)}{sep}{_pretty(node.right, lvl + 1)}"
    if _level(node) < min_level:
        return f"({out})"
    return out


def to_spherical_function(source: str | Expression, dim: int,
                          radius: float) -> SphericalFunction:
    """Wrap an expression over w1..wd as a SphericalFunction."""
    e = parse(source) if isinstance(source, str) else source
    if e.uses_scalar:
        raise EvaluationError(
            f"{e.text!r} uses x; sphere functions take w1..w{dim}")
    if e.max_coordinate > dim:
        raise EvaluationError(
            f"{e.text!r} uses w{e.max_coordinate} but the dimension is {dim}")
    return SphericalFunction(e, dim, radius, e.text)


def to_scalar_function(source: str | Expression):
    """Wrap an expression over x as a plain callable on float arrays."""
    e = parse(source) if isinstance(source, str) else source
    if e.max_coordinate > 0:
        raise EvaluationError(
            f"{e.text!r} uses coordinate variables; scalar functions take x")
    return e.eval_scalar
