"""Tree-structured pseudorandom block generator over n-bit words.

The generator holds k rows of b pairwise hashes h_i^(0..b-1) plus an n-bit
seed word x.  Output block j (base-b digits j_{k-1}..j_0) is

    h_0^(j_0)( h_1^(j_1)( ... h_{k-1}^(j_{k-1})(x) ... ) )

so any block costs exactly k pairwise-hash evaluations.  Restricting to
b = 2 with every branch-0 hash fixed to the identity map recovers the
classical two-way recursive generator (the ``nisan`` variant here).

Because b is a power of two, xor-ing every block index by a fixed label l
is the same as xor-ing each row's branch labels by the digits of l; the
``relabel`` operation implements that table permutation, giving the block
identity  block(relabel(P, l), i) == block(P, i ^ l).
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .hashing import PairwiseHash, pairwise_new
from .seeds import mix64

_TAG_SEED = 0x5EED
_TAG_HASH = 0xA5


def _is_pow2(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


class HashPrg:
    """Immutable generator state; ``hash_evals`` is a diagnostic counter."""

    def __init__(self, block_bits: int, branching: int, depth: int,
                 seed_word: int, hash_table, variant: str = "hashprg",
                 master_seed: int | None = None):
        if not 1 <= block_bits <= 64:
            raise ParameterError("block_bits must be in 1..64")
        if not _is_pow2(branching) or branching < 2:
            raise ParameterError("branching b must be a power of two >= 2")
        if depth < 0:
            raise ParameterError("depth k must be >= 0")
        if branching ** depth > (1 << 63):
            raise ParameterError("b^k exceeds the 63-bit index space")
        if not 0 <= seed_word < (1 << block_bits):
            raise ParameterError("seed word must be an n-bit value")
        if len(hash_table) != depth or any(len(row) != branching for row in hash_table):
            raise ParameterError("hash table must be k rows of b functions")
        self.block_bits = block_bits
        self.branching = branching
        self.depth = depth
        self.seed_word = seed_word
        self.hash_table = tuple(tuple(row) for row in hash_table)
        self.variant = variant
        self.master_seed = master_seed
        self.hash_evals = 0
        self._digit_bits = branching.bit_length() - 1

    @property
    def capacity(self) -> int:
        """Number of addressable blocks, b^k."""
        return self.branching ** self.depth

    def __eq__(self, other) -> bool:
        if not isinstance(other, HashPrg):
            return NotImplemented
        return (self.block_bits == other.block_bits
                and self.branching == other.branching
                and self.depth == other.depth
                and self.seed_word == other.seed_word
                and self.hash_table == other.hash_table)

    def block(self, j: int) -> int:
        """The j-th output block; exactly k pairwise-hash evaluations."""
        if not 0 <= j < self.capacity:
            raise ParameterError(f"block index {j} outside [0, b^k)")
        v = self.seed_word
        for level in range(self.depth - 1, -1, -1):
            digit = (j >> (level * self._digit_bits)) & (self.branching - 1)
            v = self.hash_table[level][digit].eval(v)
            self.hash_evals += 1
        return v

    def blocks(self, indices) -> np.ndarray:
        """Vectorized ``block`` over an array of indices."""
        idx = np.asarray(indices, dtype=np.uint64)
        if idx.size and int(idx.max()) >= self.capacity:
            raise ParameterError("block index outside [0, b^k)")
        v = np.full(idx.shape, self.seed_word, dtype=np.uint64)
        b_mask = np.uint64(self.branching - 1)
        for level in range(self.depth - 1, -1, -1):
            digits = (idx >> np.uint64(level * self._digit_bits)) & b_mask
            row = self.hash_table[level]
            out = np.empty_like(v)
            for dig in range(self.branching):
                sel = digits == dig
                if sel.any():
                    out[sel] = row[dig].eval_many(v[sel])
            v = out
            self.hash_evals += idx.size
        return v

    def block_over_seeds(self, j: int, seeds: np.ndarray) -> np.ndarray:
        """Block j evaluated for an array of alternative seed words."""
        if not 0 <= j < self.capacity:
            raise ParameterError(f"block index {j} outside [0, b^k)")
        v = np.asarray(seeds, dtype=np.uint64)
        for level in range(self.depth - 1, -1, -1):
            digit = (j >> (level * self._digit_bits)) & (self.branching - 1)
            v = self.hash_table[level][digit].eval_many(v)
            self.hash_evals += v.size
        return v

    def relabel(self, label: int) -> "HashPrg":
        """Generator whose row i swaps branch j for branch j ^ label_i."""
        if not 0 <= label < self.capacity:
            raise ParameterError(f"label {label} outside [0, b^k)")
        table = []
        for level in range(self.depth):
            digit = (label >> (level * self._digit_bits)) & (self.branching - 1)
            row = self.hash_table[level]
            table.append(tuple(row[j ^ digit] for j in range(self.branching)))
        return HashPrg(self.block_bits, self.branching, self.depth,
                       self.seed_word, table, variant="hashprg")

    def stream_view(self, start: int, count: int):
        """Lazily yield ``count`` blocks starting at index ``start``."""
        if start < 0 or count < 0 or start + count > self.capacity:
            raise ParameterError("view range outside [0, b^k)")
        for j in range(start, start + count):
            yield self.block(j)

    def params_tuple(self) -> tuple[int, int, int, int, int]:
        """(variant_code, n, b, k, master_seed) for config serialization."""
        if self.master_seed is None:
            raise ParameterError("generator was not built from a master seed")
        code = 1 if self.variant == "nisan" else 0
        return (code, self.block_bits, self.branching, self.depth, self.master_seed)


def prg_new(n: int, b: int, k: int, master_seed: int) -> HashPrg:
    """Sample a fresh generator: b*k pairwise hashes plus one n-bit seed."""
    if not 8 <= n <= 64:
        raise ParameterError("block bits n must be in 8..64")
    table = [tuple(pairwise_new(n, mix64(master_seed, _TAG_HASH, i, j))
                   for j in range(b))
             for i in range(k)]
    seed_word = mix64(master_seed, _TAG_SEED) & ((1 << n) - 1)
    return HashPrg(n, b, k, seed_word, table, variant="hashprg",
                   master_seed=master_seed)


def nisan_new(n: int, k: int, master_seed: int) -> HashPrg:
    """The b=2 variant with branch 0 fixed to the identity at every level."""
    if not 8 <= n <= 64:
        raise ParameterError("block bits n must be in 8..64")
    ident = PairwiseHash.identity(n)
    table = [(ident, pairwise_new(n, mix64(master_seed, _TAG_HASH, i, 1)))
             for i in range(k)]
    seed_word = mix64(master_seed, _TAG_SEED) & ((1 << n) - 1)
    return HashPrg(n, 2, k, seed_word, table, variant="nisan",
                   master_seed=master_seed)


def prg_from_params(params: tuple[int, int, int, int, int]) -> HashPrg:
    code, n, b, k, master_seed = params
    if code == 1:
        if b != 2:
            raise ParameterError("nisan variant requires b = 2")
        return nisan_new(n, k, master_seed)
    return prg_new(n, b, k, master_seed)


class UniformBlockSource:
    """Fresh-entropy drop-in for HashPrg: every block an independent word.

    Materializes ``capacity`` uniform n-bit words from a numpy generator so
    repeated queries are consistent.  Used as the fully-random baseline in
    derandomization experiments.
    """

    def __init__(self, block_bits: int, capacity: int, seed: int):
        if not 1 <= block_bits <= 64:
            raise ParameterError("block_bits must be in 1..64")
        self.block_bits = block_bits
        self._cap = capacity
        rng = np.random.default_rng(seed)
        hi = rng.integers(0, 1 << 32, size=capacity, dtype=np.uint64)
        lo = rng.integers(0, 1 << 32, size=capacity, dtype=np.uint64)
        words = (hi << np.uint64(32)) | lo
        if block_bits < 64:
            words &= np.uint64((1 << block_bits) - 1)
        self._words = words
        self.hash_evals = 0

    @property
    def capacity(self) -> int:
        return self._cap

    def block(self, j: int) -> int:
        if not 0 <= j < self._cap:
            raise ParameterError(f"block index {j} outside range")
        return int(self._words[j])

    def blocks(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        return self._words[idx]
