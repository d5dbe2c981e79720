"""Arithmetic formula DSL for custom concentration models.

Grammar (precedence low to high): ``+ -`` < ``* /`` < unary ``-`` < ``^``,
with ``^`` right-associative. Atoms are numeric literals (scientific
notation allowed), variable identifiers, and parenthesized expressions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import (
    FormulaDomainError,
    FormulaSyntaxError,
    MissingVariableError,
    UnknownCharacterError,
)

Node = Union["Num", "Var", "BinOp", "Neg"]


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: Node
    right: Node


@dataclass(frozen=True)
class Neg:
    operand: Node


@dataclass(frozen=True)
class Formula:
    source: str
    ast: Node
    variables: frozenset[str]


_TOKEN_RE = re.compile(r"""
    (?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
  | (?P<ws>\s+)
""", re.VERBOSE)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise UnknownCharacterError(
                f"unknown character {source[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, text, pos = self.peek()
        if kind != "op" or text != op:
            raise FormulaSyntaxError(f"expected {op!r}", pos)
        return self.next()

    def parse(self) -> Node:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise FormulaSyntaxError(f"unexpected {text!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.next()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.next()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[:2] == ("op", "-"):
            self.next()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.next()
            # right operand at unary level: right-associative, allows 2^-3
            return BinOp("^", node, self.unary())
        return node

    def atom(self) -> Node:
        kind, text, pos = self.next()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            return Var(text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise FormulaSyntaxError(f"unexpected {text or 'end of input'!r}", pos)


def parse_formula(source: str) -> Formula:
    if not source.strip():
        raise FormulaSyntaxError("empty formula", 0)
    ast = _Parser(source).parse()
    return Formula(source=source, ast=ast, variables=frozenset(_variables(ast)))


def _variables(node: Node):
    if isinstance(node, Var):
        yield node.name
    elif isinstance(node, BinOp):
        yield from _variables(node.left)
        yield from _variables(node.right)
    elif isinstance(node, Neg):
        yield from _variables(node.operand)


# precedence levels used by both the parser above and the printer below
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return 5


def to_source(node: Node) -> str:
    """Render an AST back to text; parsing the result reproduces the AST."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        inner = to_source(node.operand)
        if _prec(node.operand) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    left, right = to_source(node.left), to_source(node.right)
    p = _PREC[node.op]
    if node.op == "^":
        # right-associative: parenthesize an equal-precedence LEFT child
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < p:
            right = f"({right})"
    else:
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
    return f"{left} {node.op} {right}" if node.op in "+-" else f"{left}{node.op}{right}"


def eval_formula(f: Formula, bindings: dict) -> float | np.ndarray:
    """Evaluate over scalar or array bindings; never returns NaN or infinity."""
    missing = sorted(f.variables - set(bindings))
    if missing:
        raise MissingVariableError(missing[0])
    result = _eval(f.ast, bindings)
    _check_finite(result, f.ast)
    return result


def _eval(node: Node, b: dict):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return b[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, b)
    left = _eval(node.left, b)
    right = _eval(node.right, b)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        if np.any(np.asarray(right) == 0):
            raise FormulaDomainError("division by zero", to_source(node))
        return left / right
    # power
    l_arr, r_arr = np.asarray(left, dtype=float), np.asarray(right, dtype=float)
    fractional = r_arr != np.floor(r_arr)
    if np.any((l_arr < 0) & fractional):
        raise FormulaDomainError("fractional power of negative base", to_source(node))
    if np.any((l_arr == 0) & (r_arr < 0)):
        raise FormulaDomainError("zero base with negative exponent", to_source(node))
    out = l_arr ** r_arr
    return float(out) if out.ndim == 0 else out


def _check_finite(result, ast: Node) -> None:
    if not np.all(np.isfinite(result)):
        raise FormulaDomainError("non-finite result", to_source(ast))
