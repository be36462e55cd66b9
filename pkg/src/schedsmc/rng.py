"""Deterministic, platform-independent uniform PRNG (SplitMix64).

SplitMix64 keeps a single 64-bit counter advanced by the golden-ratio
increment and returns an avalanche mix of it. It is the standard choice for
turning arbitrary seeds into well-distributed streams: consecutive or
otherwise correlated seeds still give statistically independent outputs,
which is exactly what per-step hash-derived reseeding needs. The sequence
for a given seed is identical on every platform.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 finalizer: avalanche a 64-bit value."""
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """Seedable generator; instances are independent and single-threaded."""

    __slots__ = ("_state",)

    def __init__(self, seed: int = 0):
        self.seed(seed)

    def seed(self, value: int) -> "SplitMix64":
        if not 0 <= value <= MASK64:
            raise ValueError(f"seed {value} outside unsigned 64-bit range")
        self._state = value
        return self

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN_GAMMA) & MASK64
        return mix64(self._state)

    def uniform_index(self, k: int) -> int:
        """Unbiased integer in [0, k) by rejection sampling.

        Draws 64-bit values and rejects those at or above the largest
        multiple of k that fits in 2^64, so every residue is equally likely.
        Rejection probability is < k / 2^64, negligible for small k.
        """
        if k < 1:
            raise ValueError(f"uniform_index needs k >= 1, got {k}")
        limit = ((1 << 64) // k) * k
        while True:
            z = self.next_u64()
            if z < limit:
                return z % k

    def uniform_unit(self) -> float:
        """Uniform float in [0, 1) with full 53-bit precision."""
        return (self.next_u64() >> 11) * 2.0**-53
