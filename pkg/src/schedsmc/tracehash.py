"""Incremental modular hash of (scheduler id : visited states).

The hash value h of the bit-concatenation "sigma then every state so far" is
maintained one state at a time: absorbing a b-bit value v folds it in as

    h' = ((h * 2^b) mod m + v mod m) mod m

which equals the arbitrary-precision concatenated integer mod m. The shift
(h * 2^b) mod m is computed by b rounds of double-then-conditional-subtract,
so no intermediate ever exceeds 2(m-1) and everything fits in native 64-bit
arithmetic for m <= 2^63. Only h is kept, never the state sequence itself,
which is what makes per-step scheduler reseeding O(1) in memory.

The modulus must be prime and, to spread hash codes well, large and not
close to a power of two. DEFAULT_MODULUS is the first prime at or above
golden-ratio * 2^60, chosen once with the primality test below and locked
by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .model import StateVector, VariableDecl

# First prime >= floor(phi * 2^60); 61 bits, more than 2^32 away from both
# neighbouring powers of two.
DEFAULT_MODULUS = 0x19E3779B97F4A7C9  # 1865466180814546889

MAX_MODULUS = 1 << 63  # doubling must not overflow unsigned 64-bit

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin; exact for all n < 3.3 * 10^24."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def recommended_modulus_range(m: int) -> bool:
    """Whether m meets the production heuristic: 61-bit and far from powers of two."""
    if not (1 << 60) < m < (1 << 61):
        return False
    return m - (1 << 60) > (1 << 32) and (1 << 61) - m > (1 << 32)


@dataclass(frozen=True)
class HashConfig:
    """Modulus for the trace hash.

    Any odd prime up to 2^63 is accepted so tests can use small moduli;
    production configs (the default, CLI overrides) should satisfy
    recommended_modulus_range as well.
    """

    modulus: int = DEFAULT_MODULUS

    def __post_init__(self):
        if self.modulus < 3:
            raise ValueError(f"modulus {self.modulus} too small (need an odd prime >= 3)")
        if self.modulus > MAX_MODULUS:
            raise ValueError(f"modulus {self.modulus} exceeds half the 64-bit range")
        if not is_prime(self.modulus):
            raise ValueError(f"modulus {self.modulus} is not prime")


@dataclass(frozen=True)
class TraceHash:
    value: int
    config: HashConfig


def init_hash(sigma: int, config: HashConfig) -> TraceHash:
    """Start a trace hash from a scheduler id: h0 = sigma mod m."""
    if sigma < 0:
        raise ValueError("scheduler id must be non-negative")
    return TraceHash(sigma % config.modulus, config)


def shift_mod(h: int, j: int, m: int) -> int:
    """(h * 2^j) mod m via j double-and-reduce rounds; requires 0 <= h < m."""
    for _ in range(j):
        h = h + h
        if h >= m:
            h -= m
    return h


def absorb_value(t: TraceHash, v: int, b: int) -> TraceHash:
    """Fold a b-bit value into the hash."""
    if v < 0 or v >> b:
        raise ValueError(f"value {v} does not fit in {b} bits")
    m = t.config.modulus
    h = shift_mod(t.value, b, m)
    h = h + v % m
    if h >= m:
        h -= m
    return TraceHash(h, t.config)


def absorb_state(t: TraceHash, state: StateVector, decls: Sequence[VariableDecl]) -> TraceHash:
    """Fold a whole state in, variable by variable in declaration order."""
    for decl, value in zip(decls, state):
        t = absorb_value(t, value - decl.lower, decl.width_bits)
    return t
