"""MDP data model and the guarded-command modeling language.

A model is a fixed set of bounded integer variables plus a list of guarded
probabilistic commands::

    var loc : [0..1] init 0 ;
    [a1] loc=0 -> 0.9 : (loc'=0) + 0.1 : (loc'=1) ;

In a state, every command whose guard holds is enabled; picking one is the
nondeterministic choice, picking one of its weighted updates is the
probabilistic choice. Update right-hand sides all read the pre-state
(simultaneous assignment). Models are immutable after parsing and safe to
share across worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .expressions import (
    ArithExpr,
    BoolExpr,
    ParseError,
    TokenStream,
    arith_to_text,
    bool_to_text,
    eval_arith,
    eval_bool,
    parse_arith,
    parse_bool,
    tokenize,
)

PROBABILITY_SUM_TOLERANCE = 1e-9

StateVector = tuple[int, ...]


class ModelError(ValueError):
    """Semantic error in a model definition (bad probabilities, ranges, ...)."""


class RangeViolationError(ValueError):
    """An update pushed a variable outside its declared range."""

    def __init__(self, variable: str, value: int, lower: int, upper: int):
        super().__init__(f"update drives variable {variable!r} to {value}, outside [{lower}..{upper}]")
        self.variable = variable
        self.value = value
        self.lower = lower
        self.upper = upper

    def __reduce__(self):
        # keep the multi-argument constructor picklable across worker processes
        return (RangeViolationError, (self.variable, self.value, self.lower, self.upper))


def width_bits(lower: int, upper: int) -> int:
    """Minimal bits needed to encode an offset value in [0, upper - lower], at least 1."""
    return max(1, (upper - lower).bit_length())


@dataclass(frozen=True)
class VariableDecl:
    name: str
    lower: int
    upper: int
    init: int
    width_bits: int

    @classmethod
    def create(cls, name: str, lower: int, upper: int, init: int) -> "VariableDecl":
        if lower > upper:
            raise ModelError(f"variable {name!r}: empty range [{lower}..{upper}]")
        if not lower <= init <= upper:
            raise ModelError(f"variable {name!r}: init {init} outside [{lower}..{upper}]")
        return cls(name, lower, upper, init, width_bits(lower, upper))


@dataclass(frozen=True)
class ProbabilisticChoice:
    probability: float
    updates: dict[str, ArithExpr]  # variable name -> expression over the pre-state

    def __post_init__(self):
        if not self.probability > 0:
            raise ModelError(f"choice probability {self.probability} must be positive")
        if self.probability > 1 + PROBABILITY_SUM_TOLERANCE:
            raise ModelError(f"choice probability {self.probability} exceeds 1")


@dataclass(frozen=True)
class GuardedCommand:
    action_label: str
    guard: BoolExpr
    choices: tuple[ProbabilisticChoice, ...]

    def __post_init__(self):
        if not self.choices:
            raise ModelError(f"command [{self.action_label}] has no probabilistic choices")
        total = sum(c.probability for c in self.choices)
        if abs(total - 1.0) > PROBABILITY_SUM_TOLERANCE:
            raise ModelError(f"command [{self.action_label}]: probabilities sum to {total}, expected 1")


@dataclass(frozen=True)
class MdpModel:
    variables: tuple[VariableDecl, ...]
    commands: tuple[GuardedCommand, ...]
    initial_state: StateVector

    def __post_init__(self):
        if not self.variables:
            raise ModelError("model declares no variables")
        names = [v.name for v in self.variables]
        for name in names:
            if names.count(name) > 1:
                raise ModelError(f"duplicate variable {name!r}")
        if len(self.initial_state) != len(self.variables):
            raise ModelError("initial state length does not match variable declarations")
        for decl, value in zip(self.variables, self.initial_state):
            if not decl.lower <= value <= decl.upper:
                raise ModelError(f"initial value {value} of {decl.name!r} outside [{decl.lower}..{decl.upper}]")

    def var_index(self) -> dict[str, int]:
        return {decl.name: i for i, decl in enumerate(self.variables)}

    def env_of(self, state: StateVector) -> dict[str, int]:
        return {decl.name: value for decl, value in zip(self.variables, state)}


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def parse_model(text: str) -> MdpModel:
    """Parse model text into a validated MdpModel.

    Raises ParseError (with line/column) for syntax problems and ModelError
    for semantic ones (probability sums, duplicate variables, init range).
    """
    ts = TokenStream(tokenize(text))
    variables: list[VariableDecl] = []
    commands: list[GuardedCommand] = []
    while ts.peek().kind != "eof":
        tok = ts.peek()
        if tok.kind == "ident" and tok.text == "var":
            variables.append(_parse_variable(ts))
        elif ts.at_punct("["):
            commands.append(_parse_command(ts))
        else:
            raise ts.error(f"expected 'var' or '[', found {tok.text!r}")
    model = MdpModel(
        variables=tuple(variables),
        commands=tuple(commands),
        initial_state=tuple(v.init for v in variables),
    )
    _check_names(model)
    return model


def _parse_variable(ts: TokenStream) -> VariableDecl:
    ts.next()  # 'var'
    name = ts.expect_ident("variable name").text
    ts.expect_punct(":")
    ts.expect_punct("[")
    lower = ts.expect_int("lower bound")
    ts.expect_punct("..")
    upper = ts.expect_int("upper bound")
    ts.expect_punct("]")
    init_kw = ts.expect_ident("'init'")
    if init_kw.text != "init":
        raise ParseError(f"expected 'init', found {init_kw.text!r}", init_kw.line, init_kw.column)
    init = ts.expect_int("initial value")
    ts.expect_punct(";")
    return VariableDecl.create(name, lower, upper, init)


def _parse_command(ts: TokenStream) -> GuardedCommand:
    ts.expect_punct("[")
    action = ts.expect_ident("action label").text
    ts.expect_punct("]")
    guard = parse_bool(ts)
    ts.expect_punct("->")
    choices = [_parse_choice(ts)]
    while ts.accept_punct("+"):
        choices.append(_parse_choice(ts))
    ts.expect_punct(";")
    return GuardedCommand(action, guard, tuple(choices))


def _parse_choice(ts: TokenStream) -> ProbabilisticChoice:
    tok = ts.peek()
    if tok.kind != "number":
        raise ParseError(f"expected probability, found {tok.text or 'end of input'!r}", tok.line, tok.column)
    ts.next()
    probability = float(tok.text)
    ts.expect_punct(":")
    updates: dict[str, ArithExpr] = {}
    ts.expect_punct("(")
    _parse_update(ts, updates)
    ts.expect_punct(")")
    while ts.accept_punct("&"):
        ts.expect_punct("(")
        _parse_update(ts, updates)
        ts.expect_punct(")")
    return ProbabilisticChoice(probability, updates)


def _parse_update(ts: TokenStream, updates: dict[str, ArithExpr]) -> None:
    name_tok = ts.expect_ident("variable name")
    if name_tok.text in updates:
        raise ParseError(f"variable {name_tok.text!r} updated twice in one choice", name_tok.line, name_tok.column)
    ts.expect_punct("'")
    ts.expect_punct("=")
    updates[name_tok.text] = parse_arith(ts)


def _check_names(model: MdpModel) -> None:
    from .expressions import variables_of

    known = set(model.var_index())
    for command in model.commands:
        unknown = variables_of(command.guard) - known
        if unknown:
            raise ModelError(f"command [{command.action_label}]: unknown variable(s) {sorted(unknown)} in guard")
        for choice in command.choices:
            for name, expr in choice.updates.items():
                if name not in known:
                    raise ModelError(f"command [{command.action_label}]: update targets unknown variable {name!r}")
                bad = variables_of(expr) - known
                if bad:
                    raise ModelError(f"command [{command.action_label}]: unknown variable(s) {sorted(bad)} in update")


# ---------------------------------------------------------------------------
# Semantics
# ---------------------------------------------------------------------------


def enabled_commands(model: MdpModel, state: StateVector) -> list[int]:
    """Indices of commands whose guard holds in `state`, in declaration order."""
    env = model.env_of(state)
    return [i for i, command in enumerate(model.commands) if eval_bool(command.guard, env)]


def apply_choice(model: MdpModel, state: StateVector, command: int, choice: int) -> StateVector:
    """Apply one probabilistic choice; right-hand sides read the pre-state."""
    env = model.env_of(state)
    updates = model.commands[command].choices[choice].updates
    new_values = list(state)
    index = model.var_index()
    for name, expr in updates.items():
        value = eval_arith(expr, env)
        decl = model.variables[index[name]]
        if not decl.lower <= value <= decl.upper:
            raise RangeViolationError(name, value, decl.lower, decl.upper)
        new_values[index[name]] = value
    return tuple(new_values)


# ---------------------------------------------------------------------------
# Pretty printing
# ---------------------------------------------------------------------------


def model_to_text(model: MdpModel) -> str:
    """Render a model back to source text; reparsing yields an equal model."""
    lines = []
    for v in model.variables:
        lines.append(f"var {v.name} : [{v.lower}..{v.upper}] init {v.init} ;")
    for command in model.commands:
        parts = []
        for choice in command.choices:
            updates = "&".join(f"({name}'={arith_to_text(expr)})" for name, expr in choice.updates.items())
            parts.append(f"{_prob_text(choice.probability)} : {updates}")
        lines.append(f"[{command.action_label}] {bool_to_text(command.guard)} -> {' + '.join(parts)} ;")
    return "\n".join(lines) + "\n"


def _prob_text(p: float) -> str:
    text = repr(p)
    return text
