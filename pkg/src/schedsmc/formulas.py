"""Bounded temporal properties and their evaluation on trace prefixes.

Properties are bounded LTL: atomic comparisons over model variables, boolean
connectives, and time-bounded temporal operators

    X f          f holds at the next step
    G<=t f       f holds now and for the next t steps (t+1 states in total)
    F<=t f       f holds at some step within the next t
    f U<=t g     g holds within t steps and f holds at every step before it

Every temporal operator carries a finite bound, so each formula has a finite
horizon: a prefix with horizon+1 states always yields a definite verdict.
On shorter prefixes evaluation is three-valued. A True/False verdict is only
reported when every extension of the prefix (over the declared variable
ranges) agrees, so verdicts are monotone: once decided, extending the trace
never changes them.

A property file is zero or more named-proposition lines `name := <formula>`
followed by exactly one property formula; `//` comments are allowed.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Sequence

import numpy as np

from .expressions import (
    BoolExpr,
    ParseError,
    TokenStream,
    bool_to_text,
    compile_bool,
    eval_bool,
    tokenize,
    variables_of,
)
from .model import StateVector, VariableDecl

# Exact prefix verdicts require checking every completion of the prefix up to
# the horizon. Beyond this many completions the check is skipped and the
# verdict stays Undecided until more states arrive (at the horizon the
# pointwise pass always decides, so termination is unaffected).
MAX_COMPLETIONS = 4096

_RESERVED = {"X", "G", "F", "U", "true", "false"}


class Verdict(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNDECIDED = "undecided"


# ---------------------------------------------------------------------------
# Abstract syntax
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    predicate: BoolExpr  # comparison or boolean literal over state variables


@dataclass(frozen=True)
class Not:
    operand: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Next:
    operand: "Formula"


@dataclass(frozen=True)
class Globally:
    bound: int
    operand: "Formula"


@dataclass(frozen=True)
class Finally:
    bound: int
    operand: "Formula"


@dataclass(frozen=True)
class Until:
    bound: int
    left: "Formula"
    right: "Formula"


Formula = Atom | Not | And | Or | Next | Globally | Finally | Until


def horizon(f: Formula) -> int:
    """Number of transitions after which the verdict is always decided.

    X adds 1, bounded G/F/U add their bound, nesting adds up.
    """
    if isinstance(f, Atom):
        return 0
    if isinstance(f, Not):
        return horizon(f.operand)
    if isinstance(f, (And, Or)):
        return max(horizon(f.left), horizon(f.right))
    if isinstance(f, Next):
        return 1 + horizon(f.operand)
    if isinstance(f, (Globally, Finally)):
        return f.bound + horizon(f.operand)
    return f.bound + max(horizon(f.left), horizon(f.right))


def formula_variables(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return variables_of(f.predicate)
    if isinstance(f, (Not, Next, Globally, Finally)):
        return formula_variables(f.operand)
    return formula_variables(f.left) | formula_variables(f.right)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def parse_property(text: str) -> Formula:
    """Parse a property file: definitions `name := formula`, then the property."""
    definitions: dict[str, Formula] = {}
    prop: Formula | None = None
    for chunk in _statements(text):
        ts = TokenStream(tokenize(chunk))
        first = ts.peek()
        if first.kind == "eof":
            continue
        tokens_ahead = TokenStream(tokenize(chunk))
        tokens_ahead.next()
        if first.kind == "ident" and tokens_ahead.at_punct(":="):
            ts.next()
            ts.expect_punct(":=")
            if first.text in _RESERVED:
                raise ParseError(f"{first.text!r} is reserved and cannot name a proposition", first.line, first.column)
            if first.text in definitions:
                raise ParseError(f"proposition {first.text!r} defined twice", first.line, first.column)
            definitions[first.text] = _parse_formula(ts, definitions)
            _expect_end(ts)
        else:
            if prop is not None:
                raise ParseError("more than one property formula in file", first.line, first.column)
            prop = _parse_formula(ts, definitions)
            _expect_end(ts)
    if prop is None:
        raise ParseError("no property formula found", 1, 1)
    return prop


def _statements(text: str) -> Iterator[str]:
    # one statement per line; blank and comment-only lines are skipped inside
    for line in text.split("\n"):
        yield line


def _expect_end(ts: TokenStream) -> None:
    tok = ts.peek()
    if tok.kind != "eof":
        raise ParseError(f"unexpected trailing input {tok.text!r}", tok.line, tok.column)


def _parse_formula(ts: TokenStream, defs: Mapping[str, Formula]) -> Formula:
    return _parse_until(ts, defs)


def _parse_until(ts: TokenStream, defs: Mapping[str, Formula]) -> Formula:
    left = _parse_or(ts, defs)
    tok = ts.peek()
    if tok.kind == "ident" and tok.text == "U":
        ts.next()
        bound = _parse_bound(ts, "U")
        right = _parse_until(ts, defs)
        return Until(bound, left, right)
    return left


def _parse_or(ts: TokenStream, defs: Mapping[str, Formula]) -> Formula:
    node = _parse_and(ts, defs)
    while ts.accept_punct("|"):
        node = Or(node, _parse_and(ts, defs))
    return node


def _parse_and(ts: TokenStream, defs: Mapping[str, Formula]) -> Formula:
    node = _parse_unary(ts, defs)
    while ts.accept_punct("&"):
        node = And(node, _parse_unary(ts, defs))
    return node


def _parse_unary(ts: TokenStream, defs: Mapping[str, Formula]) -> Formula:
    tok = ts.peek()
    if ts.accept_punct("!"):
        return Not(_parse_unary(ts, defs))
    if tok.kind == "ident" and tok.text == "X":
        ts.next()
        return Next(_parse_unary(ts, defs))
    if tok.kind == "ident" and tok.text in ("G", "F"):
        ts.next()
        bound = _parse_bound(ts, tok.text)
        operand = _parse_unary(ts, defs)
        return Globally(bound, operand) if tok.text == "G" else Finally(bound, operand)
    return _parse_atom(ts, defs)


def _parse_bound(ts: TokenStream, op: str) -> int:
    tok = ts.peek()
    if not ts.accept_punct("<="):
        raise ParseError(f"temporal operator {op} requires a bound, e.g. {op}<=4", tok.line, tok.column)
    bound = ts.expect_int("bound")
    if bound < 0:
        raise ParseError(f"bound of {op} must be non-negative, got {bound}", tok.line, tok.column)
    return bound


def _parse_atom(ts: TokenStream, defs: Mapping[str, Formula]) -> Formula:
    tok = ts.peek()
    if ts.accept_punct("("):
        node = _parse_formula(ts, defs)
        ts.expect_punct(")")
        return node
    if tok.kind == "ident" and tok.text in ("true", "false"):
        ts.next()
        from .expressions import BoolLit

        return Atom(BoolLit(tok.text == "true"))
    if tok.kind == "ident" and tok.text in defs:
        # a defined proposition, unless this is actually a comparison like `x = 1`
        ahead = ts._tokens[ts._pos + 1]
        if not (ahead.kind == "punct" and ahead.text in ("<", "<=", "=", "!=", ">=", ">", "+", "-", "*", "/")):
            ts.next()
            return defs[tok.text]
    if tok.kind == "ident" and tok.text not in defs and tok.text in _RESERVED:
        raise ParseError(f"misplaced keyword {tok.text!r}", tok.line, tok.column)
    return Atom(_parse_comparison(ts))


def _parse_comparison(ts: TokenStream) -> BoolExpr:
    """A single comparison; connectives belong to the formula level."""
    from .expressions import Compare, _CMP_OPS, parse_arith

    start = ts.peek()
    try:
        left = parse_arith(ts)
    except ParseError:
        if start.kind == "ident":
            raise ParseError(
                f"{start.text!r} is neither a defined proposition nor part of a comparison",
                start.line,
                start.column,
            ) from None
        raise
    tok = ts.peek()
    if tok.kind != "punct" or tok.text not in _CMP_OPS:
        raise ParseError(f"expected comparison operator, found {tok.text or 'end of input'!r}", tok.line, tok.column)
    ts.next()
    return Compare(tok.text, left, parse_arith(ts))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate(
    f: Formula,
    prefix: Sequence[StateVector],
    decls: Sequence[VariableDecl],
    max_completions: int = MAX_COMPLETIONS,
) -> Verdict:
    """Three-valued verdict of `f` on a growing trace prefix.

    A pointwise pass decides most prefixes. When it cannot, the remaining
    possibilities are checked exhaustively over the declared variable ranges
    (as long as that needs at most `max_completions` completions), so
    True/False is returned exactly when every extension of the prefix
    agrees. Past the cap the pointwise Undecided stands; it always resolves
    by horizon+1 states, so termination is unaffected.
    """
    if not prefix:
        raise ValueError("prefix must contain at least the initial state")
    envs = [_env_from_state(state, decls) for state in prefix]
    verdict = _eval3(f, envs, 0)
    if verdict is not Verdict.UNDECIDED:
        return verdict
    missing = horizon(f) + 1 - len(prefix)
    if missing <= 0:
        return verdict
    total = _alphabet_size(decls, max_completions)
    if total is None or total**missing > max_completions:
        return Verdict.UNDECIDED
    states = list(_alphabet(decls))
    seen_true = False
    seen_false = False
    for completion in itertools.product(states, repeat=missing):
        full = envs + [_env_from_state(s, decls) for s in completion]
        if _eval2(f, full, 0):
            seen_true = True
        else:
            seen_false = True
        if seen_true and seen_false:
            return Verdict.UNDECIDED
    return Verdict.TRUE if seen_true else Verdict.FALSE


def _env_from_state(state: StateVector, decls: Sequence[VariableDecl]) -> dict[str, int]:
    return {decl.name: value for decl, value in zip(decls, state)}


def _alphabet(decls: Sequence[VariableDecl]) -> Iterator[StateVector]:
    ranges = [range(d.lower, d.upper + 1) for d in decls]
    return itertools.product(*ranges)


def _alphabet_size(decls: Sequence[VariableDecl], cap: int) -> int | None:
    total = 1
    for d in decls:
        total *= d.upper - d.lower + 1
        if total > cap:
            return None
    return total


def _and3(a: Verdict, b: Verdict) -> Verdict:
    if a is Verdict.FALSE or b is Verdict.FALSE:
        return Verdict.FALSE
    if a is Verdict.TRUE and b is Verdict.TRUE:
        return Verdict.TRUE
    return Verdict.UNDECIDED


def _or3(a: Verdict, b: Verdict) -> Verdict:
    if a is Verdict.TRUE or b is Verdict.TRUE:
        return Verdict.TRUE
    if a is Verdict.FALSE and b is Verdict.FALSE:
        return Verdict.FALSE
    return Verdict.UNDECIDED


def _not3(a: Verdict) -> Verdict:
    if a is Verdict.TRUE:
        return Verdict.FALSE
    if a is Verdict.FALSE:
        return Verdict.TRUE
    return Verdict.UNDECIDED


def _eval3(f: Formula, envs: Sequence[Mapping[str, int]], i: int) -> Verdict:
    if isinstance(f, Atom):
        if i >= len(envs):
            return Verdict.UNDECIDED
        return Verdict.TRUE if eval_bool(f.predicate, envs[i]) else Verdict.FALSE
    if isinstance(f, Not):
        return _not3(_eval3(f.operand, envs, i))
    if isinstance(f, And):
        return _and3(_eval3(f.left, envs, i), _eval3(f.right, envs, i))
    if isinstance(f, Or):
        return _or3(_eval3(f.left, envs, i), _eval3(f.right, envs, i))
    if isinstance(f, Next):
        return _eval3(f.operand, envs, i + 1)
    if isinstance(f, Globally):
        result = Verdict.TRUE
        for j in range(i, i + f.bound + 1):
            result = _and3(result, _eval3(f.operand, envs, j))
            if result is Verdict.FALSE:
                return result
        return result
    if isinstance(f, Finally):
        result = Verdict.FALSE
        for j in range(i, i + f.bound + 1):
            result = _or3(result, _eval3(f.operand, envs, j))
            if result is Verdict.TRUE:
                return result
        return result
    # Until: g within the bound, f at every earlier step
    result = Verdict.FALSE
    left_so_far = Verdict.TRUE
    for j in range(i, i + f.bound + 1):
        here = _and3(left_so_far, _eval3(f.right, envs, j))
        result = _or3(result, here)
        if result is Verdict.TRUE:
            return result
        left_so_far = _and3(left_so_far, _eval3(f.left, envs, j))
        if left_so_far is Verdict.FALSE:
            break
    return result


def _eval2(f: Formula, envs: Sequence[Mapping[str, int]], i: int) -> bool:
    """Two-valued semantics; every index referenced must lie inside `envs`."""
    if isinstance(f, Atom):
        return eval_bool(f.predicate, envs[i])
    if isinstance(f, Not):
        return not _eval2(f.operand, envs, i)
    if isinstance(f, And):
        return _eval2(f.left, envs, i) and _eval2(f.right, envs, i)
    if isinstance(f, Or):
        return _eval2(f.left, envs, i) or _eval2(f.right, envs, i)
    if isinstance(f, Next):
        return _eval2(f.operand, envs, i + 1)
    if isinstance(f, Globally):
        return all(_eval2(f.operand, envs, j) for j in range(i, i + f.bound + 1))
    if isinstance(f, Finally):
        return any(_eval2(f.operand, envs, j) for j in range(i, i + f.bound + 1))
    for j in range(i, i + f.bound + 1):
        if _eval2(f.right, envs, j):
            return True
        if not _eval2(f.left, envs, j):
            return False
    return False


# ---------------------------------------------------------------------------
# Vectorized evaluation on complete traces
# ---------------------------------------------------------------------------


def compile_formula(f: Formula, var_index: Mapping[str, int]) -> Callable[[np.ndarray], np.ndarray]:
    """Compile to a function of a (length, n_vars, lanes) trace array.

    The trace must be complete (length >= horizon+1); returns a boolean lane
    mask of traces that satisfy the formula at time 0.
    """

    def build(g: Formula) -> Callable[[np.ndarray, int], np.ndarray]:
        if isinstance(g, Atom):
            pred = compile_bool(g.predicate, var_index)
            return lambda traces, i: pred(traces[i])
        if isinstance(g, Not):
            inner = build(g.operand)
            return lambda traces, i: ~inner(traces, i)
        if isinstance(g, And):
            left = build(g.left)
            right = build(g.right)
            return lambda traces, i: left(traces, i) & right(traces, i)
        if isinstance(g, Or):
            left = build(g.left)
            right = build(g.right)
            return lambda traces, i: left(traces, i) | right(traces, i)
        if isinstance(g, Next):
            inner = build(g.operand)
            return lambda traces, i: inner(traces, i + 1)
        if isinstance(g, Globally):
            inner = build(g.operand)
            bound = g.bound

            def globally(traces: np.ndarray, i: int) -> np.ndarray:
                out = inner(traces, i)
                for j in range(i + 1, i + bound + 1):
                    out = out & inner(traces, j)
                return out

            return globally
        if isinstance(g, Finally):
            inner = build(g.operand)
            bound = g.bound

            def finally_(traces: np.ndarray, i: int) -> np.ndarray:
                out = inner(traces, i)
                for j in range(i + 1, i + bound + 1):
                    out = out | inner(traces, j)
                return out

            return finally_
        left = build(g.left)
        right = build(g.right)
        bound = g.bound

        def until(traces: np.ndarray, i: int) -> np.ndarray:
            out = right(traces, i)
            left_ok = left(traces, i)
            for j in range(i + 1, i + bound + 1):
                out = out | (left_ok & right(traces, j))
                left_ok = left_ok & left(traces, j)
            return out

        return until

    root = build(f)
    return lambda traces: root(traces, 0)


# ---------------------------------------------------------------------------
# Pretty printing
# ---------------------------------------------------------------------------


def formula_to_text(f: Formula) -> str:
    if isinstance(f, Atom):
        return bool_to_text(f.predicate)
    if isinstance(f, Not):
        return f"!({formula_to_text(f.operand)})"
    if isinstance(f, And):
        return f"({formula_to_text(f.left)} & {formula_to_text(f.right)})"
    if isinstance(f, Or):
        return f"({formula_to_text(f.left)} | {formula_to_text(f.right)})"
    if isinstance(f, Next):
        return f"X ({formula_to_text(f.operand)})"
    if isinstance(f, Globally):
        return f"G<={f.bound} ({formula_to_text(f.operand)})"
    if isinstance(f, Finally):
        return f"F<={f.bound} ({formula_to_text(f.operand)})"
    return f"(({formula_to_text(f.left)}) U<={f.bound} ({formula_to_text(f.right)}))"
