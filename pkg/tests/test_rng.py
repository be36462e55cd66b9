"""Determinism, golden vectors, and distribution checks for the PRNG."""

import pytest

from schedsmc.rng import SplitMix64

# First outputs of the published SplitMix64 reference for seed 0.
REFERENCE_SEED0 = [
    0xE220A8397B1DCDAF,
    0x6E789E6AA1B965F4,
    0x06C45D188009454F,
    0xF88BB8A8724C81EC,
    0x1B39896A51A8749B,
]

# Frozen from a reference run of this implementation (which matches the
# published algorithm above); guards against accidental constant changes.
GOLDEN_SEED42 = [13679457532755275413, 2949826092126892291, 5139283748462763858, 6349198060258255764]
GOLDEN_SEED43 = [13432527470776545160, 11303639812522640203, 7982107704362031207, 15321244078163471231]
GOLDEN_UNIT_12345 = [
    0.1330796686614273,
    0.20481663336165912,
    0.11954258300911547,
    0.17611780724496118,
    0.506880215507456,
    0.33703454463939386,
    0.12265221496336498,
    0.43145857388310627,
    0.47978593254104396,
    0.8675219243871907,
]
GOLDEN_INDEX5_9001 = [3, 0, 0, 0, 4, 1, 4, 1, 1, 1]


def test_matches_published_reference():
    gen = SplitMix64(0)
    assert [gen.next_u64() for _ in range(5)] == REFERENCE_SEED0


def test_same_seed_same_sequence():
    a = SplitMix64(987654321)
    b = SplitMix64(987654321)
    assert [a.next_u64() for _ in range(100)] == [b.next_u64() for _ in range(100)]


def test_reseed_restarts_sequence():
    gen = SplitMix64(5)
    first = [gen.next_u64() for _ in range(10)]
    gen.next_u64()
    gen.seed(5)
    assert [gen.next_u64() for _ in range(10)] == first


def test_adjacent_seeds_diverge():
    gen42 = SplitMix64(42)
    gen43 = SplitMix64(43)
    assert [gen42.next_u64() for _ in range(4)] == GOLDEN_SEED42
    assert [gen43.next_u64() for _ in range(4)] == GOLDEN_SEED43
    assert GOLDEN_SEED42[0] != GOLDEN_SEED43[0]


def test_seed_range_validated():
    with pytest.raises(ValueError):
        SplitMix64(-1)
    with pytest.raises(ValueError):
        SplitMix64(1 << 64)
    SplitMix64((1 << 64) - 1)  # top of the range is fine


def test_interleaving_does_not_perturb():
    solo = SplitMix64(7)
    expected = [solo.next_u64() for _ in range(50)]
    a = SplitMix64(7)
    b = SplitMix64(1234)
    interleaved = []
    for _ in range(50):
        interleaved.append(a.next_u64())
        b.next_u64()
    assert interleaved == expected


def test_uniform_index_k1_always_zero():
    gen = SplitMix64(99)
    assert all(gen.uniform_index(1) == 0 for _ in range(20))


def test_uniform_index_rejects_k0():
    with pytest.raises(ValueError):
        SplitMix64(1).uniform_index(0)


def test_uniform_index_golden():
    gen = SplitMix64(9001)
    assert [gen.uniform_index(5) for _ in range(10)] == GOLDEN_INDEX5_9001


def test_uniform_index_frequencies():
    gen = SplitMix64(2026)
    draws = 1_000_000
    ones = sum(gen.uniform_index(2) for _ in range(draws))
    assert abs(ones / draws - 0.5) < 0.005


def test_uniform_unit_range_and_mean():
    gen = SplitMix64(313)
    draws = 1_000_000
    total = 0.0
    for _ in range(draws):
        u = gen.uniform_unit()
        assert 0.0 <= u < 1.0
        total += u
    assert abs(total / draws - 0.5) < 0.002


def test_uniform_unit_golden():
    gen = SplitMix64(12345)
    got = [gen.uniform_unit() for _ in range(10)]
    assert got == GOLDEN_UNIT_12345
