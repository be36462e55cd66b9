"""Integer expression language shared by the model and property parsers.

State variables are integers, so guards, updates and atomic propositions are
built from the same small AST: integer arithmetic (+, -, *, / as floor
division), comparisons and boolean connectives. Expressions evaluate either
against a single variable environment (dict) or, compiled, against numpy
column arrays for batched simulation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np


class ParseError(ValueError):
    """Syntax error with source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class EvaluationError(ValueError):
    """Runtime failure while evaluating an expression (e.g. division by zero)."""


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TWO_CHAR = (":=", "->", "<=", ">=", "!=", "..")
_ONE_CHAR = "[]()=<>+-*/&|!';:,"


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'number', 'punct', 'eof'
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    """Split source text into tokens; `//` starts a comment running to end of line."""
    tokens: list[Token] = []
    line = 1
    col = 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    # '..' is a range separator, not a decimal point
                    if text.startswith("..", j):
                        break
                    seen_dot = True
                j += 1
            tokens.append(Token("number", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        two = text[i : i + 2]
        if two in _TWO_CHAR:
            tokens.append(Token("punct", two, line, col))
            i += 2
            col += 2
            continue
        if ch in _ONE_CHAR:
            tokens.append(Token("punct", ch, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


class TokenStream:
    """Cursor over a token list with error helpers for recursive-descent parsers."""

    def __init__(self, tokens: list[Token]):
        self._tokens = tokens
        self._pos = 0

    def peek(self) -> Token:
        return self._tokens[self._pos]

    def next(self) -> Token:
        tok = self._tokens[self._pos]
        if tok.kind != "eof":
            self._pos += 1
        return tok

    def at_punct(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == "punct" and tok.text == text

    def accept_punct(self, text: str) -> bool:
        if self.at_punct(text):
            self.next()
            return True
        return False

    def expect_punct(self, text: str) -> Token:
        tok = self.peek()
        if tok.kind != "punct" or tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of input'!r}", tok.line, tok.column)
        return self.next()

    def expect_ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise ParseError(f"expected {what}, found {tok.text or 'end of input'!r}", tok.line, tok.column)
        return self.next()

    def expect_int(self, what: str = "integer") -> int:
        tok = self.peek()
        neg = False
        if self.at_punct("-"):
            self.next()
            neg = True
            tok = self.peek()
        if tok.kind != "number" or "." in tok.text:
            raise ParseError(f"expected {what}, found {tok.text or 'end of input'!r}", tok.line, tok.column)
        self.next()
        value = int(tok.text)
        return -value if neg else value

    def error(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.column)


# ---------------------------------------------------------------------------
# Arithmetic AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "ArithExpr"


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*', '/'
    left: "ArithExpr"
    right: "ArithExpr"


ArithExpr = IntLit | VarRef | Neg | BinOp


# ---------------------------------------------------------------------------
# Boolean AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Compare:
    op: str  # '<', '<=', '=', '!=', '>=', '>'
    left: ArithExpr
    right: ArithExpr


@dataclass(frozen=True)
class NotExpr:
    operand: "BoolExpr"


@dataclass(frozen=True)
class AndExpr:
    left: "BoolExpr"
    right: "BoolExpr"


@dataclass(frozen=True)
class OrExpr:
    left: "BoolExpr"
    right: "BoolExpr"


BoolExpr = BoolLit | Compare | NotExpr | AndExpr | OrExpr


# ---------------------------------------------------------------------------
# Parsing (precedence: | < & < ! < comparisons < +,- < *,/ < unary -)
# ---------------------------------------------------------------------------


def parse_arith(ts: TokenStream) -> ArithExpr:
    return _parse_add(ts)


def _parse_add(ts: TokenStream) -> ArithExpr:
    node = _parse_mul(ts)
    while ts.at_punct("+") or ts.at_punct("-"):
        op = ts.next().text
        node = BinOp(op, node, _parse_mul(ts))
    return node


def _parse_mul(ts: TokenStream) -> ArithExpr:
    node = _parse_unary(ts)
    while ts.at_punct("*") or ts.at_punct("/"):
        op = ts.next().text
        node = BinOp(op, node, _parse_unary(ts))
    return node


def _parse_unary(ts: TokenStream) -> ArithExpr:
    if ts.accept_punct("-"):
        operand = _parse_unary(ts)
        if isinstance(operand, IntLit):
            return IntLit(-operand.value)  # fold so -1 round-trips as a literal
        return Neg(operand)
    tok = ts.peek()
    if tok.kind == "number":
        if "." in tok.text:
            raise ParseError("decimal literal not allowed in integer expression", tok.line, tok.column)
        ts.next()
        return IntLit(int(tok.text))
    if tok.kind == "ident":
        ts.next()
        return VarRef(tok.text)
    if ts.accept_punct("("):
        node = _parse_add(ts)
        ts.expect_punct(")")
        return node
    raise ParseError(f"expected expression, found {tok.text or 'end of input'!r}", tok.line, tok.column)


_CMP_OPS = ("<=", ">=", "!=", "<", ">", "=")


def parse_bool(ts: TokenStream) -> BoolExpr:
    return _parse_or(ts)


def _parse_or(ts: TokenStream) -> BoolExpr:
    node = _parse_and(ts)
    while ts.accept_punct("|"):
        node = OrExpr(node, _parse_and(ts))
    return node


def _parse_and(ts: TokenStream) -> BoolExpr:
    node = _parse_not(ts)
    while ts.accept_punct("&"):
        node = AndExpr(node, _parse_not(ts))
    return node


def _parse_not(ts: TokenStream) -> BoolExpr:
    if ts.accept_punct("!"):
        return NotExpr(_parse_not(ts))
    return _parse_bool_atom(ts)


def _parse_bool_atom(ts: TokenStream) -> BoolExpr:
    tok = ts.peek()
    if tok.kind == "ident" and tok.text in ("true", "false"):
        ts.next()
        return BoolLit(tok.text == "true")
    if ts.accept_punct("("):
        node = _parse_or(ts)
        ts.expect_punct(")")
        return node
    left = parse_arith(ts)
    tok = ts.peek()
    if tok.kind == "punct" and tok.text in _CMP_OPS:
        ts.next()
        right = parse_arith(ts)
        return Compare(tok.text, left, right)
    raise ParseError(f"expected comparison operator, found {tok.text or 'end of input'!r}", tok.line, tok.column)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def eval_arith(expr: ArithExpr, env: Mapping[str, int]) -> int:
    if isinstance(expr, IntLit):
        return expr.value
    if isinstance(expr, VarRef):
        try:
            return env[expr.name]
        except KeyError:
            raise EvaluationError(f"unknown variable {expr.name!r}") from None
    if isinstance(expr, Neg):
        return -eval_arith(expr.operand, env)
    left = eval_arith(expr.left, env)
    right = eval_arith(expr.right, env)
    if expr.op == "+":
        return left + right
    if expr.op == "-":
        return left - right
    if expr.op == "*":
        return left * right
    if right == 0:
        raise EvaluationError("division by zero")
    return left // right  # floor division


def eval_bool(expr: BoolExpr, env: Mapping[str, int]) -> bool:
    if isinstance(expr, BoolLit):
        return expr.value
    if isinstance(expr, Compare):
        left = eval_arith(expr.left, env)
        right = eval_arith(expr.right, env)
        return _compare(expr.op, left, right)
    if isinstance(expr, NotExpr):
        return not eval_bool(expr.operand, env)
    if isinstance(expr, AndExpr):
        return eval_bool(expr.left, env) and eval_bool(expr.right, env)
    return eval_bool(expr.left, env) or eval_bool(expr.right, env)


def _compare(op: str, left: int, right: int) -> bool:
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    if op == ">=":
        return left >= right
    return left > right


def variables_of(expr: ArithExpr | BoolExpr) -> set[str]:
    """Names of all variables referenced by an expression."""
    if isinstance(expr, (IntLit, BoolLit)):
        return set()
    if isinstance(expr, VarRef):
        return {expr.name}
    if isinstance(expr, (Neg, NotExpr)):
        return variables_of(expr.operand)
    if isinstance(expr, (BinOp, Compare, AndExpr, OrExpr)):
        return variables_of(expr.left) | variables_of(expr.right)
    raise TypeError(f"not an expression: {expr!r}")


# ---------------------------------------------------------------------------
# Vectorized compilation: expressions over (n_vars, N) int64 state matrices
# ---------------------------------------------------------------------------


def compile_arith(expr: ArithExpr, var_index: Mapping[str, int]) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(expr, IntLit):
        value = expr.value
        return lambda cols: np.full(cols.shape[1], value, dtype=np.int64)
    if isinstance(expr, VarRef):
        try:
            idx = var_index[expr.name]
        except KeyError:
            raise EvaluationError(f"unknown variable {expr.name!r}") from None
        return lambda cols: cols[idx]
    if isinstance(expr, Neg):
        inner = compile_arith(expr.operand, var_index)
        return lambda cols: -inner(cols)
    left = compile_arith(expr.left, var_index)
    right = compile_arith(expr.right, var_index)
    op = expr.op
    if op == "+":
        return lambda cols: left(cols) + right(cols)
    if op == "-":
        return lambda cols: left(cols) - right(cols)
    if op == "*":
        return lambda cols: left(cols) * right(cols)

    def divide(cols: np.ndarray) -> np.ndarray:
        num = left(cols)
        den = right(cols)
        if np.any(den == 0):
            raise EvaluationError("division by zero")
        return num // den

    return divide


def compile_bool(expr: BoolExpr, var_index: Mapping[str, int]) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(expr, BoolLit):
        value = expr.value
        return lambda cols: np.full(cols.shape[1], value, dtype=bool)
    if isinstance(expr, Compare):
        left = compile_arith(expr.left, var_index)
        right = compile_arith(expr.right, var_index)
        op = expr.op
        if op == "<":
            return lambda cols: left(cols) < right(cols)
        if op == "<=":
            return lambda cols: left(cols) <= right(cols)
        if op == "=":
            return lambda cols: left(cols) == right(cols)
        if op == "!=":
            return lambda cols: left(cols) != right(cols)
        if op == ">=":
            return lambda cols: left(cols) >= right(cols)
        return lambda cols: left(cols) > right(cols)
    if isinstance(expr, NotExpr):
        inner = compile_bool(expr.operand, var_index)
        return lambda cols: ~inner(cols)
    if isinstance(expr, AndExpr):
        left_b = compile_bool(expr.left, var_index)
        right_b = compile_bool(expr.right, var_index)
        return lambda cols: left_b(cols) & right_b(cols)
    left_b = compile_bool(expr.left, var_index)
    right_b = compile_bool(expr.right, var_index)
    return lambda cols: left_b(cols) | right_b(cols)


# ---------------------------------------------------------------------------
# Pretty printing (minimal parentheses, reparses to an equal AST)
# ---------------------------------------------------------------------------

_ARITH_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def arith_to_text(expr: ArithExpr, parent_prec: int = 0) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, VarRef):
        return expr.name
    if isinstance(expr, Neg):
        return "-" + arith_to_text(expr.operand, 3)
    prec = _ARITH_PREC[expr.op]
    # right operand of -,/ needs a bump to keep left associativity on reparse
    text = f"{arith_to_text(expr.left, prec)}{expr.op}{arith_to_text(expr.right, prec + 1)}"
    if prec < parent_prec:
        return f"({text})"
    return text


def bool_to_text(expr: BoolExpr, parent_prec: int = 0) -> str:
    # precedence levels: | = 1, & = 2, ! = 3, atoms = 4
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, Compare):
        return f"{arith_to_text(expr.left)}{expr.op}{arith_to_text(expr.right)}"
    if isinstance(expr, NotExpr):
        return "!" + bool_to_text(expr.operand, 3)
    if isinstance(expr, AndExpr):
        text = f"{bool_to_text(expr.left, 2)} & {bool_to_text(expr.right, 2)}"
        return f"({text})" if parent_prec > 2 else text
    text = f"{bool_to_text(expr.left, 1)} | {bool_to_text(expr.right, 1)}"
    return f"({text})" if parent_prec > 1 else text
