"""Guarded-command parser and MDP semantics."""

import random

import pytest

import schedsmc as s
from schedsmc.expressions import ParseError, eval_bool
from schedsmc.model import ModelError, RangeViolationError, model_to_text, width_bits

FIG2 = s.example_path("fig2.mdp").read_text()

SELF_LOOP = "var x : [0..3] init 1 ;\n[a] true -> 1 : (x'=x) ;\n"


def test_parse_fig2():
    model = s.parse_model(FIG2)
    assert len(model.commands) == 3
    assert [v.name for v in model.variables] == ["loc"]
    assert model.variables[0].lower == 0 and model.variables[0].upper == 1
    assert model.initial_state == (0,)
    assert [c.action_label for c in model.commands] == ["a1", "a2", "a0"]


def test_parse_self_loop():
    model = s.parse_model(SELF_LOOP)
    assert len(model.commands) == 1
    assert s.apply_choice(model, (1,), 0, 0) == (1,)


def test_probability_sum_violation():
    text = "var x : [0..1] init 0 ;\n[a] true -> 0.5 : (x'=0) + 0.4 : (x'=1) ;\n"
    with pytest.raises(ModelError, match="sum"):
        s.parse_model(text)


def test_duplicate_variable():
    text = "var x : [0..1] init 0 ;\nvar x : [0..5] init 2 ;\n[a] true -> 1 : (x'=x) ;\n"
    with pytest.raises(ModelError, match="duplicate"):
        s.parse_model(text)


def test_init_out_of_range():
    with pytest.raises(ModelError, match="init"):
        s.parse_model("var x : [0..1] init 7 ;\n[a] true -> 1 : (x'=x) ;\n")


def test_syntax_error_has_position():
    with pytest.raises(ParseError) as err:
        s.parse_model("var x : [0..1 init 0 ;")
    assert err.value.line == 1
    assert err.value.column > 0


def test_unknown_variable_in_guard():
    with pytest.raises(ModelError, match="unknown"):
        s.parse_model("var x : [0..1] init 0 ;\n[a] y=0 -> 1 : (x'=x) ;\n")


def test_comments_and_negative_ranges():
    text = """
    // a counter that can go negative
    var n : [-3..3] init -1 ;
    [down] n>-3 -> 1 : (n'=n-1) ;  // decrement
    [up]   n<3  -> 1 : (n'=n+1) ;
    """
    model = s.parse_model(text)
    assert model.variables[0].lower == -3
    assert model.initial_state == (-1,)
    assert s.apply_choice(model, (-1,), 0, 0) == (-2,)


def test_width_bits_values():
    assert width_bits(0, 1) == 1
    assert width_bits(0, 2) == 2
    assert width_bits(0, 255) == 8
    assert width_bits(0, 256) == 9
    assert width_bits(5, 5) == 1  # degenerate range still occupies a bit
    assert width_bits(-4, 3) == 3
    model = s.parse_model(FIG2)
    assert model.variables[0].width_bits == 1


# -- enabled_commands ---------------------------------------------------------


def test_enabled_fig2_loc0():
    model = s.parse_model(FIG2)
    assert s.enabled_commands(model, (0,)) == [0, 1]


def test_enabled_fig2_loc1():
    model = s.parse_model(FIG2)
    assert s.enabled_commands(model, (1,)) == [2]


def test_enabled_empty_on_unsatisfied_guard():
    model = s.parse_model("var x : [0..1] init 0 ;\n[a] x>0 -> 1 : (x'=x) ;\n")
    assert s.enabled_commands(model, (0,)) == []


def test_enabled_cross_checked_on_random_walk():
    # every index returned must have a true guard, every omitted one a false
    # guard, re-evaluated here with the expression evaluator directly
    model = s.parse_model(
        """
        var x : [0..7] init 0 ;
        var y : [0..7] init 7 ;
        [right] x<7 -> 0.5 : (x'=x+1) + 0.5 : (x'=x) ;
        [left]  x>0 -> 1 : (x'=x-1) ;
        [swap]  x=y -> 1 : (x'=y)&(y'=x) ;
        [drop]  y>0 & x<y -> 0.25 : (y'=y-1) + 0.75 : (y'=y) ;
        """
    )
    rng = random.Random(3)
    state = model.initial_state
    for _ in range(10_000):
        enabled = s.enabled_commands(model, state)
        env = model.env_of(state)
        for idx, command in enumerate(model.commands):
            assert (idx in enabled) == eval_bool(command.guard, env)
        if not enabled:
            break
        command = rng.choice(enabled)
        choice = rng.randrange(len(model.commands[command].choices))
        state = s.apply_choice(model, state, command, choice)


# -- apply_choice -------------------------------------------------------------


def test_apply_choice_fig2_a2_to_loc1():
    model = s.parse_model(FIG2)
    # command a2 (index 1), second choice moves to loc=1
    assert s.apply_choice(model, (0,), 1, 1) == (1,)


def test_apply_choice_empty_update_is_identity():
    model = s.parse_model(SELF_LOOP)
    choice = model.commands[0].choices[0]
    bare = s.ProbabilisticChoice(1.0, {})
    patched = s.GuardedCommand("a", model.commands[0].guard, (bare,))
    model2 = s.MdpModel(model.variables, (patched,), model.initial_state)
    assert s.apply_choice(model2, (1,), 0, 0) == (1,)


def test_apply_choice_overflow_raises():
    model = s.parse_model("var x : [0..3] init 3 ;\n[a] true -> 1 : (x'=x+1) ;\n")
    with pytest.raises(RangeViolationError, match="x"):
        s.apply_choice(model, (3,), 0, 0)


def test_apply_choice_simultaneous_updates():
    model = s.parse_model("var x : [0..9] init 2 ;\nvar y : [0..9] init 5 ;\n[a] true -> 1 : (x'=y)&(y'=x) ;\n")
    assert s.apply_choice(model, (2, 5), 0, 0) == (5, 2)  # both sides read the pre-state


def test_apply_choice_deterministic():
    model = s.parse_model(FIG2)
    results = {s.apply_choice(model, (0,), 0, 0) for _ in range(10)}
    assert results == {(0,)}


def test_integer_division_floors():
    model = s.parse_model("var x : [-9..9] init -7 ;\n[a] true -> 1 : (x'=x/2) ;\n")
    assert s.apply_choice(model, (-7,), 0, 0) == (-4,)  # floor, not truncation


# -- round trip ---------------------------------------------------------------


def test_round_trip_fig2():
    model = s.parse_model(FIG2)
    assert s.parse_model(model_to_text(model)) == model


def test_round_trip_expressions():
    text = """
    var x : [-5..50] init 0 ;
    var y : [0..50] init 3 ;
    [a] !(x=0) & (y<5 | x>=2) -> 0.25 : (x'=-x+2*(y-1)) + 0.75 : (x'=x/3)&(y'=y*2) ;
    [b] true -> 1 : (y'=y-(x+1)) ;
    """
    model = s.parse_model(text)
    printed = model_to_text(model)
    assert s.parse_model(printed) == model
    assert s.parse_model(model_to_text(s.parse_model(printed))) == model
