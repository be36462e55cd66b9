"""Trace-hash arithmetic against arbitrary-precision oracles."""

import json
import random
from pathlib import Path

import pytest

from schedsmc.model import VariableDecl, parse_model
from schedsmc.tracehash import (
    DEFAULT_MODULUS,
    HashConfig,
    absorb_state,
    absorb_value,
    init_hash,
    is_prime,
    recommended_modulus_range,
    shift_mod,
)

SMALL = HashConfig(13)


def concat_oracle(sigma: int, widths, values, m: int) -> int:
    """Hash by actually building the concatenated big integer."""
    x = sigma
    for w, v in zip(widths, values):
        x = x * (1 << w) + v
    return x % m


# -- init ------------------------------------------------------------------


def test_init_zero():
    assert init_hash(0, SMALL).value == 0


def test_init_small_sigma():
    assert init_hash(5, SMALL).value == 5


def test_init_wraps():
    assert init_hash(13 + 7, SMALL).value == 7


def test_init_rejects_negative():
    with pytest.raises(ValueError):
        init_hash(-1, SMALL)


# -- shift_mod ---------------------------------------------------------------


def test_shift_mod_example():
    assert shift_mod(9, 3, 13) == (9 * 8) % 13 == 7


def test_shift_mod_zero_shift():
    assert shift_mod(9, 0, 13) == 9


def test_shift_mod_zero_absorbs():
    for j in (0, 1, 5, 64):
        assert shift_mod(0, j, 13) == 0


def test_shift_mod_random_against_pow():
    rng = random.Random(1)
    for _ in range(500):
        m = rng.choice([13, 97, 1000003, DEFAULT_MODULUS])
        h = rng.randrange(m)
        j = rng.randrange(0, 80)
        assert shift_mod(h, j, m) == (h * pow(2, j, m)) % m


def test_shift_mod_intermediates_bounded():
    # instrumented mirror of the implementation: every intermediate must
    # stay at or below 2(m-1); cross-checked for equality with shift_mod
    def instrumented(h, j, m):
        for _ in range(j):
            h = h + h
            assert h <= 2 * (m - 1)
            if h >= m:
                h -= m
        return h

    rng = random.Random(2)
    for _ in range(300):
        m = rng.choice([13, DEFAULT_MODULUS, 2305843009213693951])
        h = rng.randrange(m)
        j = rng.randrange(0, 70)
        assert instrumented(h, j, m) == shift_mod(h, j, m)


# -- absorb_value ------------------------------------------------------------


def test_absorb_value_example():
    t = absorb_value(init_hash(5, SMALL), 3, 4)
    assert t.value == (5 * 16 + 3) % 13 == 5


def test_absorb_value_chained_example():
    t = absorb_value(init_hash(5, SMALL), 3, 4)
    t = absorb_value(t, 7, 4)
    assert t.value == 9


def test_absorb_value_empty():
    t = init_hash(11, SMALL)
    assert absorb_value(t, 0, 0).value == t.value


def test_absorb_value_width_check():
    t = init_hash(0, SMALL)
    with pytest.raises(ValueError):
        absorb_value(t, 16, 4)
    with pytest.raises(ValueError):
        absorb_value(t, 1, 0)
    with pytest.raises(ValueError):
        absorb_value(t, -1, 4)


# -- golden vectors and random oracle equivalence ----------------------------


def test_golden_vectors():
    entries = json.loads((Path(__file__).parent / "data" / "hash_golden.json").read_text())
    assert len(entries) >= 50
    for entry in entries:
        t = init_hash(entry["sigma"], HashConfig(entry["modulus"]))
        for w, v in zip(entry["widths"], entry["values"]):
            t = absorb_value(t, v, w)
        assert t.value == entry["hash"]


def test_oracle_equivalence_random():
    rng = random.Random(77)
    moduli = [13, 97, 1000003, DEFAULT_MODULUS, 2305843009213693951]
    for _ in range(10_000):
        m = rng.choice(moduli)
        sigma = rng.randrange(0, 1 << 64)
        widths = [rng.randrange(1, 16) for _ in range(rng.randrange(1, 6))]
        values = [rng.randrange(0, 1 << w) for w in widths]
        t = init_hash(sigma, HashConfig(m))
        for w, v in zip(widths, values):
            t = absorb_value(t, v, w)
        assert t.value == concat_oracle(sigma, widths, values, m)


def test_incrementality_matches_whole_sequence():
    # absorbing states one at a time equals hashing the concatenation
    decls = (VariableDecl.create("x", 0, 9, 0), VariableDecl.create("y", -2, 5, 0))
    rng = random.Random(5)
    config = HashConfig(DEFAULT_MODULUS)
    for _ in range(200):
        sigma = rng.randrange(0, 1 << 64)
        states = [(rng.randrange(0, 10), rng.randrange(-2, 6)) for _ in range(rng.randrange(1, 8))]
        t = init_hash(sigma, config)
        for state in states:
            t = absorb_state(t, state, decls)
        widths = []
        values = []
        for state in states:
            for decl, value in zip(decls, state):
                widths.append(decl.width_bits)
                values.append(value - decl.lower)
        assert t.value == concat_oracle(sigma, widths, values, DEFAULT_MODULUS)


def test_absorb_state_chains_variables_in_order():
    # two 4-bit variables with offsets 3 then 7 from h0=5, mod 13: the same
    # arithmetic as the chained absorb_value example
    decls = (VariableDecl.create("a", 0, 15, 0), VariableDecl.create("b", 0, 15, 0))
    assert decls[0].width_bits == 4
    t = absorb_state(init_hash(5, SMALL), (3, 7), decls)
    assert t.value == 9


def test_state_sequence_from_parsed_model():
    model = parse_model("var loc : [0..1] init 0 ;\n[a] true -> 1 : (loc'=loc) ;\n")
    t = init_hash(0, HashConfig(13))
    for state in [(0,), (1,), (1,)]:
        t = absorb_state(t, state, model.variables)
    # concatenation 0:0,1,1 with 1-bit widths = 0b011 = 3
    assert t.value == 3 % 13


def test_all_lower_bound_states_hash_to_zero():
    decls = (VariableDecl.create("x", 3, 6, 3),)
    t = init_hash(0, HashConfig(13))
    for _ in range(5):
        t = absorb_state(t, (3,), decls)
    assert t.value == 0


def test_prefix_sensitivity():
    # flipping one early state should almost always change the hash
    decls = (VariableDecl.create("x", 0, 3, 0),)
    config = HashConfig(DEFAULT_MODULUS)
    rng = random.Random(9)
    collisions = 0
    pairs = 10_000
    for _ in range(pairs):
        sigma = rng.randrange(0, 1 << 64)
        states = [(rng.randrange(4),) for _ in range(6)]
        flip_at = rng.randrange(2)  # early position
        altered = list(states)
        altered[flip_at] = ((states[flip_at][0] + rng.randrange(1, 4)) % 4,)
        t1 = init_hash(sigma, config)
        t2 = init_hash(sigma, config)
        for s1, s2 in zip(states, altered):
            t1 = absorb_state(t1, s1, decls)
            t2 = absorb_state(t2, s2, decls)
        if t1.value == t2.value:
            collisions += 1
    assert collisions / pairs <= 1e-3


# -- config validation --------------------------------------------------------


def test_default_modulus_is_prime_and_in_range():
    assert is_prime(DEFAULT_MODULUS)
    assert recommended_modulus_range(DEFAULT_MODULUS)
    assert DEFAULT_MODULUS <= (1 << 63)


def test_config_rejects_two():
    with pytest.raises(ValueError):
        HashConfig(2)


def test_config_rejects_composite():
    with pytest.raises(ValueError):
        HashConfig(15)


def test_config_rejects_oversized():
    m = (1 << 63) + 29  # a prime above half the 64-bit range would overflow doubling
    with pytest.raises(ValueError):
        HashConfig(m)


def test_is_prime_spot_checks():
    known_primes = [3, 13, 97, 1000003, 2305843009213693951, DEFAULT_MODULUS]
    known_composites = [1, 4, 1000001, 2305843009213693953, DEFAULT_MODULUS + 2]
    assert all(is_prime(p) for p in known_primes)
    assert not any(is_prime(c) for c in known_composites)
