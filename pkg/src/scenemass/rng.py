"""Deterministic 64-bit generator used wherever seeded choices are made.

The sequence is a SplitMix-style mixer so that any implementation, in any
language, draws identical values from the same seed. The exact update is:

    state = (state + 0x9E3779B97F4A7C15) mod 2^64
    z = state
    z = ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z = ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output = z XOR (z >> 31)

Distinct index draws (used to seed clustering) take successive outputs
modulo n and skip duplicates until k indices are collected, in draw order.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """Tiny deterministic PRNG; identical output for identical seeds."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def below(self, n: int) -> int:
        """Next value reduced modulo n (n >= 1)."""
        if n < 1:
            raise ValueError("n must be >= 1")
        return self.next_u64() % n


def sample_distinct_indices(n: int, k: int, seed: int) -> list[int]:
    """First k distinct values of the seeded sequence modulo n, in draw order."""
    if not 0 < k <= n:
        raise ValueError(f"need 0 < k <= n, got k={k}, n={n}")
    gen = SplitMix64(seed)
    seen: set[int] = set()
    out: list[int] = []
    while len(out) < k:
        idx = gen.below(n)
        if idx not in seen:
            seen.add(idx)
            out.append(idx)
    return out
