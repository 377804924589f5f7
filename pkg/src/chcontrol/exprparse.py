"""Parser and evaluator for the small formula language used in configs.

Grammar (whitespace insignificant, '^' right-associative, unary minus
binds looser than '^' so "-2^2" is -(2^2)):

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := '-' factor | power
    power   := primary ('^' factor)?
    primary := number | 'pi' | 'x' | 'y' | 't' | name '(' expr ')' | '(' expr ')'

Known functions are sin, cos and exp; numbers are decimal with optional
fraction and exponent.  Evaluation accepts floats or numpy arrays for the
variables.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
VARIABLES = ("x", "y", "t")


class ParseError(ValueError):
    """Syntax or vocabulary error with the byte offset of the failure."""

    def __init__(self, offset: int, message: str, expected: str | None = None):
        detail = f"{message} at offset {offset}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)
        self.offset = offset
        self.message = message
        self.expected = expected


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Pi:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Num | Var | Pi | Neg | BinOp | Call

_NUMBER = re.compile(r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")
_NAME = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "name" | "op" | "end"
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch.isdigit():
            m = _NUMBER.match(text, pos)
            tokens.append(_Token("num", m.group(), pos))
            pos = m.end()
        elif ch.isalpha() or ch == "_":
            m = _NAME.match(text, pos)
            tokens.append(_Token("name", m.group(), pos))
            pos = m.end()
        elif ch in "+-*/^()":
            tokens.append(_Token("op", ch, pos))
            pos += 1
        else:
            raise ParseError(pos, f"unexpected character {ch!r}")
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, text: str) -> None:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            raise ParseError(tok.offset, f"unexpected {tok.text!r}" if tok.kind != "end"
                             else "unexpected end of input", expected=repr(text))
        self.advance()

    def expr(self) -> Expr:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        if self.peek().kind == "op" and self.peek().text == "-":
            self.advance()
            return Neg(self.factor())
        return self.power()

    def power(self) -> Expr:
        node = self.primary()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            return BinOp("^", node, self.factor())
        return node

    def primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if tok.text == "pi":
                return Pi()
            if tok.text in VARIABLES:
                return Var(tok.text)
            if tok.text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(tok.text, arg)
            raise ParseError(tok.offset, f"unknown identifier {tok.text!r}")
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        if tok.kind == "end":
            raise ParseError(tok.offset, "unexpected end of input",
                             expected="expression")
        raise ParseError(tok.offset, f"unexpected {tok.text!r}",
                         expected="expression")


def parse(text: str) -> Expr:
    parser = _Parser(_tokenize(text))
    node = parser.expr()
    tail = parser.peek()
    if tail.kind != "end":
        raise ParseError(tail.offset, f"unexpected {tail.text!r} after expression")
    return node


def evaluate(node: Expr, x, y=None, t=0.0):
    """Evaluate with real arithmetic; x, y, t may be floats or arrays."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Pi):
        return math.pi
    if isinstance(node, Var):
        if node.name == "x":
            return x
        if node.name == "t":
            return t
        if y is None:
            raise ValueError("expression references 'y' but no y value was supplied")
        return y
    if isinstance(node, Neg):
        return -evaluate(node.operand, x, y, t)
    if isinstance(node, Call):
        return FUNCTIONS[node.func](evaluate(node.arg, x, y, t))
    a = evaluate(node.left, x, y, t)
    b = evaluate(node.right, x, y, t)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        return a / b
    return a ** b


def uses_y(node: Expr) -> bool:
    if isinstance(node, Var):
        return node.name == "y"
    if isinstance(node, Neg):
        return uses_y(node.operand)
    if isinstance(node, Call):
        return uses_y(node.arg)
    if isinstance(node, BinOp):
        return uses_y(node.left) or uses_y(node.right)
    return False


# Precedence levels for printing: sums < products < unary minus < power < atoms.
_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        if node.op in "+-":
            return _PREC_ADD
        if node.op in "*/":
            return _PREC_MUL
        return _PREC_POW
    if isinstance(node, Neg):
        return _PREC_NEG
    if isinstance(node, Num) and node.value < 0:
        # hand-built ASTs may hold negative literals; print them like a negation
        return _PREC_NEG
    return _PREC_ATOM


def pretty(node: Expr) -> str:
    """Render to a string that reparses to an equivalent expression."""
    return _render(node, 0)


def _render(node: Expr, parent_prec: int) -> str:
    if isinstance(node, Num):
        s = repr(node.value)
    elif isinstance(node, Pi):
        s = "pi"
    elif isinstance(node, Var):
        s = node.name
    elif isinstance(node, Call):
        s = f"{node.func}({_render(node.arg, 0)})"
    elif isinstance(node, Neg):
        s = "-" + _render(node.operand, _PREC_NEG)
    elif node.op == "^":
        s = f"{_render(node.left, _PREC_ATOM)}^{_render(node.right, _PREC_POW)}"
    elif node.op in "*/":
        s = f"{_render(node.left, _PREC_MUL)}{node.op}{_render(node.right, _PREC_MUL + 1)}"
    else:
        s = f"{_render(node.left, _PREC_ADD)}{node.op}{_render(node.right, _PREC_ADD + 1)}"
    if _prec(node) < parent_prec:
        return f"({s})"
    return s
