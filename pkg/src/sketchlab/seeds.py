"""Deterministic seed derivation.

Every random object in the library is rebuilt from a single 64-bit master
seed.  Derivation uses splitmix64 over a mixed counter so that independent
components (hash rows, trials, noise) get decorrelated 64-bit words without
sharing any RNG state.
"""

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 output step for the state ``x``."""
    x = (x + _GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def mix64(master_seed: int, *indices: int) -> int:
    """Mix a master seed with component indices into a fresh 64-bit seed.

    The same (master_seed, indices) always yields the same word; distinct
    index tuples yield decorrelated words.
    """
    s = splitmix64(master_seed & MASK64)
    for i in indices:
        s = splitmix64(s ^ ((i & MASK64) * _GOLDEN & MASK64))
    return s


class WordStream:
    """A counter-mode stream of 64-bit words derived from one seed."""

    def __init__(self, seed: int):
        self._seed = seed & MASK64
        self._counter = 0

    def next_word(self) -> int:
        w = mix64(self._seed, self._counter)
        self._counter += 1
        return w

    def next_bits(self, bits: int) -> int:
        """Next ``bits``-wide integer assembled from 64-bit words."""
        need = (bits + 63) // 64
        v = 0
        for _ in range(need):
            v = (v << 64) | self.next_word()
        return v & ((1 << bits) - 1)
