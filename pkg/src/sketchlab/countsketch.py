"""CountSketch with generator-supplied hash values, plus a private variant.

All randomness for repetition i and coordinate l comes from output block
i*d + l of an attached block generator: the block's top bit is the sign,
its low log2(t) bits the bucket.  The sketch is a linear map of the input
vector, so merging and inverse updates are exact in integer arithmetic.
"""

from __future__ import annotations

import math
import random

import numpy as np

from .errors import ParameterError
from .prg import UniformBlockSource, prg_new
from .seeds import mix64


def _is_pow2(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


def next_pow2(x: float) -> int:
    """Smallest power of two >= max(x, 1)."""
    n = max(1, math.ceil(x))
    return 1 << (n - 1).bit_length()


def default_branching(d: int) -> int:
    """d^(1/2) rounded to a power of two (at least 2)."""
    return max(2, 1 << round(math.log2(max(d, 4)) / 2))


def tail_delta(x, t: int) -> float:
    """Error scale: l2 norm of x with its t largest entries zeroed, over sqrt(t)."""
    mags = np.sort(np.abs(np.asarray(x, dtype=np.float64)))[::-1]
    return float(np.sqrt((mags[t:] ** 2).sum() / t))


class CountSketchState:
    """r x t signed counter table fed by a block generator.

    Counters are 64-bit; the configuration-time guard d*bound < 2^(w-1)
    rules out overflow without hot-path checks.
    """

    def __init__(self, dimension: int, table_size: int, repetitions: int,
                 *, bound: int, prg=None, master_seed: int | None = None,
                 block_bits: int = 32, branching: int | None = None):
        if not _is_pow2(table_size):
            raise ParameterError("table size t must be a power of two")
        if repetitions % 2 == 0 or repetitions < 1:
            raise ParameterError("repetitions r must be odd")
        if dimension < 1:
            raise ParameterError("dimension must be positive")
        if prg is None:
            if master_seed is None:
                raise ParameterError("need a prg or a master seed")
            b = branching or default_branching(dimension)
            need = repetitions * dimension
            k = max(1, math.ceil(math.log(need, b)))
            while b ** k < need:
                k += 1
            prg = prg_new(block_bits, b, k, master_seed)
        w = prg.block_bits
        if repetitions * dimension > prg.capacity:
            raise ParameterError("generator too short: need r*d blocks")
        if table_size > (1 << (w - 1)):
            raise ParameterError("table size needs log2(t) bits below the sign bit")
        if dimension * bound >= (1 << (w - 1)) or dimension * bound >= (1 << 62):
            raise ParameterError(
                f"overflow guard failed: d*bound = {dimension * bound} "
                f"must stay below 2^{w - 1}")
        self.dimension = dimension
        self.table_size = table_size
        self.repetitions = repetitions
        self.bound = bound
        self.prg = prg
        self.table = np.zeros((repetitions, table_size), dtype=np.int64)
        self._finalized_private = False

    def decode(self, i: int, ell: int) -> tuple[int, int]:
        """(bucket, sign) for repetition i and coordinate ell."""
        if not 0 <= i < self.repetitions:
            raise ParameterError("repetition index out of range")
        if not 0 <= ell < self.dimension:
            raise ParameterError("coordinate out of range")
        block = self.prg.block(i * self.dimension + ell)
        sign = -1 if (block >> (self.prg.block_bits - 1)) & 1 else 1
        return block & (self.table_size - 1), sign

    def _decode_row(self, i: int, ells: np.ndarray):
        blocks = self.prg.blocks(np.uint64(i * self.dimension) + ells.astype(np.uint64))
        signs = np.where((blocks >> np.uint64(self.prg.block_bits - 1)) & np.uint64(1),
                         -1, 1).astype(np.int64)
        buckets = (blocks & np.uint64(self.table_size - 1)).astype(np.int64)
        return buckets, signs

    def update(self, ell: int, value: int) -> None:
        for i in range(self.repetitions):
            bucket, sign = self.decode(i, ell)
            self.table[i, bucket] += sign * value

    def update_many(self, indices, values) -> None:
        idx = np.asarray(indices, dtype=np.int64)
        vals = np.asarray(values, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.dimension):
            raise ParameterError("coordinate out of range")
        for i in range(self.repetitions):
            buckets, signs = self._decode_row(i, idx)
            np.add.at(self.table[i], buckets, signs * vals)

    def estimate(self, ell: int) -> int:
        vals = sorted(sign * self.table[i, bucket]
                      for i, (bucket, sign)
                      in ((i, self.decode(i, ell)) for i in range(self.repetitions)))
        return int(vals[self.repetitions // 2])

    def estimate_many(self, ells) -> np.ndarray:
        ells = np.asarray(ells, dtype=np.int64)
        vals = np.empty((self.repetitions, ells.size), dtype=np.int64)
        for i in range(self.repetitions):
            buckets, signs = self._decode_row(i, ells)
            vals[i] = signs * self.table[i, buckets]
        mid = self.repetitions // 2
        return np.partition(vals, mid, axis=0)[mid]

    def merge(self, other: "CountSketchState") -> "CountSketchState":
        """Cellwise sum; requires identical parameters and generator."""
        if (self.dimension, self.table_size, self.repetitions) != \
                (other.dimension, other.table_size, other.repetitions):
            raise ParameterError("mismatched sketch parameters")
        if not (self.prg is other.prg or self.prg == other.prg):
            raise ParameterError("mismatched generators")
        out = CountSketchState(self.dimension, self.table_size,
                               self.repetitions, bound=self.bound, prg=self.prg)
        out.table = self.table + other.table
        return out


class PrivateCountSketch:
    """A finalized sketch with one-shot Gaussian noise on every cell."""

    def __init__(self, base: CountSketchState, sigma: float, noise_seed: int):
        if sigma < 0:
            raise ParameterError("sigma must be nonnegative")
        self.base = base
        self.sigma = sigma
        r, t = base.repetitions, base.table_size
        if sigma == 0:
            self.noise = np.zeros((r, t))
        else:
            # ratio-method sampler from a dedicated seed, independent of the
            # sketch generator
            gen = random.Random(noise_seed)
            self.noise = np.array([gen.normalvariate(0.0, sigma)
                                   for _ in range(r * t)]).reshape(r, t)

    def estimate(self, ell: int) -> float:
        base = self.base
        vals = []
        for i in range(base.repetitions):
            bucket, sign = base.decode(i, ell)
            vals.append(sign * (base.table[i, bucket] + self.noise[i, bucket]))
        return float(np.median(vals))

    def estimate_many(self, ells) -> np.ndarray:
        base = self.base
        ells = np.asarray(ells, dtype=np.int64)
        vals = np.empty((base.repetitions, ells.size))
        for i in range(base.repetitions):
            buckets, signs = base._decode_row(i, ells)
            vals[i] = signs * (base.table[i, buckets] + self.noise[i, buckets])
        return np.median(vals, axis=0)


def pcs_finalize(cs: CountSketchState, sigma: float,
                 noise_seed: int) -> PrivateCountSketch:
    """Add i.i.d. Gaussian noise to every cell, exactly once per sketch."""
    if cs._finalized_private:
        raise ParameterError("sketch was already finalized with noise")
    pcs = PrivateCountSketch(cs, sigma, noise_seed)
    cs._finalized_private = True
    return pcs


def error_tail_experiment(x, table_size: int, repetitions: int,
                          alphas, n_seeds: int, coords_per_seed: int,
                          master_seed: int, *, block_bits: int = 32,
                          source: str = "prg",
                          branching: int | None = None) -> dict:
    """Empirical Pr[|est - x_l| > alpha*Delta] over (seed, coordinate) samples.

    ``source`` selects generator-driven hashing ("prg") or a fresh-entropy
    fully-random baseline ("uniform") with identical geometry.
    """
    x = np.asarray(x, dtype=np.int64)
    d = len(x)
    nz = np.flatnonzero(x)
    delta = tail_delta(x, table_size)
    bound = int(np.abs(x).max()) if d else 1
    alphas = list(alphas)
    exceed = {a: 0 for a in alphas}
    total = 0
    for s in range(n_seeds):
        seed = mix64(master_seed, s)
        if source == "uniform":
            src = UniformBlockSource(block_bits, repetitions * d, seed)
            cs = CountSketchState(d, table_size, repetitions, bound=bound,
                                  prg=src)
        else:
            cs = CountSketchState(d, table_size, repetitions, bound=bound,
                                  master_seed=seed, block_bits=block_bits,
                                  branching=branching)
        cs.update_many(nz, x[nz])
        rng = np.random.default_rng(mix64(master_seed, s, 1))
        ells = rng.integers(0, d, size=coords_per_seed)
        errs = np.abs(cs.estimate_many(ells) - x[ells])
        for a in alphas:
            exceed[a] += int((errs > a * delta).sum())
        total += coords_per_seed
    return {"delta": delta, "samples": total,
            "tails": {a: exceed[a] / total for a in alphas}}
