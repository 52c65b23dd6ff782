"""Constant-factor Fp estimation for p > 2, and a relaxed lp sampler.

Each coordinate i gets a power-of-two scale factor from generator block i:
the position j of the first 1 among the block's leading M bits yields the
discrete exponential E = 2^j (capped at 2^M when the prefix is all zero),
so Pr[E = 2^j] = 2^-(j+1) for j < M and 2^-M at the cap.  Updates are
scaled by round(E^(1/p)) and folded into one wide hashed row of counters;
the estimate is the largest absolute counter, median-boosted over
independent copies.

The sampler variant refines the scale to 2^(j+u) with u read off the next
32 block bits, sketches the scaled vector into a handful of independent
hashed rows, and returns the coordinate consistent with every row's
maximum bucket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SamplerFailure
from .hashing import KWiseHash, sign_eval_many
from .countsketch import next_pow2
from .prg import prg_new
from .seeds import mix64


@dataclass(frozen=True)
class DiscreteExponential:
    cap_exponent: int
    value: int

    @property
    def exponent(self) -> int:
        return self.value.bit_length() - 1


def _bit_length_u64(arr: np.ndarray) -> np.ndarray:
    out = np.zeros(arr.shape, dtype=np.uint64)
    tmp = arr.astype(np.uint64, copy=True)
    for s in (32, 16, 8, 4, 2, 1):
        big = tmp >= (np.uint64(1) << np.uint64(s))
        out += np.uint64(s) * big
        tmp >>= np.uint64(s) * big
    return out + (tmp > 0)


def discrete_exp(block: int, cap: int, block_bits: int) -> DiscreteExponential:
    """First-one position among the leading ``cap`` bits of the block."""
    if cap > block_bits:
        raise ParameterError("cap exponent M cannot exceed the block width")
    prefix = block >> (block_bits - cap)
    j = cap if prefix == 0 else cap - prefix.bit_length()
    return DiscreteExponential(cap_exponent=cap, value=1 << j)


def discrete_exp_many(blocks: np.ndarray, cap: int, block_bits: int) -> np.ndarray:
    """Vectorized exponents j (not the values 2^j) for an array of blocks."""
    if cap > block_bits:
        raise ParameterError("cap exponent M cannot exceed the block width")
    prefix = blocks.astype(np.uint64) >> np.uint64(block_bits - cap)
    return (np.uint64(cap) - _bit_length_u64(prefix)).astype(np.int64)


def exact_exponent_counts(cap: int) -> list[int]:
    """Count of the 2^cap bit prefixes mapping to each exponent j = 0..cap.

    Exact combinatorics: prefixes whose first 1 sits at position j number
    2^(cap-1-j); the all-zero prefix is the single j = cap case.
    """
    return [1 << (cap - 1 - j) for j in range(cap)] + [1]


def _default_branching(d: int) -> int:
    # largest power of two <= d^(1/4), at least 2
    return max(2, 1 << int(math.log2(max(d, 16)) / 4))


def _cap_exponent(d: int, bound: int, p: float, limit: int) -> int:
    raw = math.ceil(math.log2(d) + p * math.log2(max(2.0, float(bound)))) + 1
    return max(4, min(limit, raw))


class FpHighSketch:
    """Wide hashed counter row fed by exponential-scaled updates (p > 2)."""

    def __init__(self, dimension: int, p: float, *, bound: int,
                 master_seed: int, copies: int = 1,
                 buckets: int | None = None, block_bits: int = 64,
                 branching: int | None = None):
        if p <= 2:
            raise ParameterError("this estimator needs p > 2")
        if copies < 1:
            raise ParameterError("copies must be >= 1")
        self.dimension = dimension
        self.p = p
        self.copies = copies
        d = dimension
        self.buckets = buckets or next_pow2(
            max(16, d ** (1 - 2 / p) * math.log2(max(d, 4))))
        b = branching or _default_branching(d)
        k = max(1, math.ceil(math.log(max(d, 2), b)))
        while b ** k < d:
            k += 1
        self.cap = _cap_exponent(d, bound, p, block_bits)
        # per-update magnitude round(E^(1/p)) <= 2^(M/p); keep sums in int64
        if d * bound * (2 ** (self.cap / p) + 1) >= 2 ** 62:
            raise ParameterError("declared bounds overflow 64-bit counters")
        self.scale_table = np.array(
            [round(2 ** (j / p)) for j in range(self.cap + 1)], dtype=np.int64)
        k_ind = max(4, math.ceil(math.log2(max(d, 4))))
        self.prgs = []
        self.bucket_hashes = []
        self.sign_hashes = []
        for c in range(copies):
            self.prgs.append(prg_new(block_bits, b, k, mix64(master_seed, 17, c)))
            self.bucket_hashes.append(
                KWiseHash(k_ind, d, self.buckets, mix64(master_seed, 18, c)))
            self.sign_hashes.append(
                KWiseHash(k_ind, d, 2, mix64(master_seed, 19, c)))
        self.tables = np.zeros((copies, self.buckets), dtype=np.int64)

    def update(self, i: int, v: int) -> None:
        if not 0 <= i < self.dimension:
            raise ParameterError("coordinate out of range")
        for c in range(self.copies):
            exp = discrete_exp(self.prgs[c].block(i), self.cap,
                               self.prgs[c].block_bits)
            w = int(self.scale_table[exp.exponent])
            sign = 1 - 2 * self.sign_hashes[c].eval(i)
            self.tables[c, self.bucket_hashes[c].eval(i)] += sign * w * v

    def update_many(self, indices, values) -> None:
        idx = np.asarray(indices, dtype=np.int64)
        vals = np.asarray(values, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.dimension):
            raise ParameterError("coordinate out of range")
        for c in range(self.copies):
            prg = self.prgs[c]
            exps = discrete_exp_many(prg.blocks(idx.astype(np.uint64)),
                                     self.cap, prg.block_bits)
            w = self.scale_table[exps]
            signs = sign_eval_many(self.sign_hashes[c], idx.astype(np.uint64))
            buckets = self.bucket_hashes[c].eval_many(idx.astype(np.uint64))
            np.add.at(self.tables[c], buckets, signs * w * vals)

    def estimate(self) -> float:
        """Max absolute counter, median across copies."""
        per_copy = np.abs(self.tables).max(axis=1)
        return float(np.median(per_copy))

    def merge(self, other: "FpHighSketch") -> "FpHighSketch":
        if (self.dimension, self.p, self.copies, self.buckets) != \
                (other.dimension, other.p, other.copies, other.buckets):
            raise ParameterError("mismatched sketch parameters")
        if any(a != b for a, b in zip(self.prgs, other.prgs)):
            raise ParameterError("mismatched generators")
        out = FpHighSketch.__new__(FpHighSketch)
        out.__dict__.update(self.__dict__)
        out.tables = self.tables + other.tables
        return out


@dataclass
class ZVectorReport:
    """Scaled-vector statistics against their expected desk-scale ranges."""

    max_scaled: float
    max_in_window: bool
    exceed_count: int
    exceed_bound: float
    exceed_ok: bool
    sum_sq_rounded: float
    sum_sq_bound: float
    sum_sq_ok: bool


def zvector_properties_check(x, prg, p: float, cap: int,
                             threshold_t: float | None = None) -> ZVectorReport:
    """Compute the scaled-vector statistics for a dense test vector."""
    x = np.asarray(x, dtype=np.float64)
    d = len(x)
    norm_p = float((np.abs(x) ** p).sum() ** (1 / p)) if np.any(x) else 0.0
    exps = discrete_exp_many(prg.blocks(np.arange(d, dtype=np.uint64)),
                             cap, prg.block_bits)
    e_pow = (2.0 ** exps) ** (1 / p)
    scaled = np.abs(x) * e_pow
    max_scaled = float(scaled.max()) if d else 0.0
    window_ok = (norm_p / 16 ** (1 / p) <= max_scaled <= 50 ** (1 / p) * norm_p) \
        if norm_p > 0 else max_scaled == 0.0
    T = threshold_t if threshold_t is not None else max(2.0, math.log2(max(d, 4))) ** p
    exceed = int((scaled >= norm_p / T ** (1 / p)).sum()) if norm_p > 0 else 0
    sum_sq = float((np.round(e_pow) ** 2 * x ** 2).sum())
    c_p = 1.0 / (2.0 - 2.0 ** (2 / p)) + 1.0
    sum_sq_bound = 40.0 * c_p * d ** (1 - 2 / p) * norm_p ** 2
    return ZVectorReport(
        max_scaled=max_scaled, max_in_window=window_ok,
        exceed_count=exceed, exceed_bound=20 * T, exceed_ok=exceed <= 20 * T,
        sum_sq_rounded=sum_sq, sum_sq_bound=sum_sq_bound,
        sum_sq_ok=sum_sq <= sum_sq_bound or norm_p == 0.0)


class LpSampler:
    """Relaxed lp sampling for p > 2 via fine-grained exponential scaling.

    The scale is 2^(j+u), u uniform in [0,1) from 32 block bits past the
    leading prefix, shared across all hashed rows.  ``sample`` raises
    SamplerFailure when no single coordinate matches every row's maximum
    bucket with a consistent sign pattern; callers retry with fresh seeds.
    """

    def __init__(self, dimension: int, p: float, *, bound: int,
                 master_seed: int, eps: float = 0.25, copies: int = 3,
                 buckets: int | None = None):
        if p <= 2:
            raise ParameterError("the relaxed sampler needs p > 2")
        d = dimension
        self.dimension = d
        self.p = p
        self.copies = copies
        block_bits = 64
        self.cap = _cap_exponent(d, bound, p, 32)
        self.buckets = buckets or min(
            next_pow2(d),
            next_pow2(max(64, d ** (1 - 2 / p) * math.log2(max(d, 4)) ** 2 / eps ** 2)))
        b = _default_branching(d)
        k = max(1, math.ceil(math.log(max(d, 2), b)))
        while b ** k < d:
            k += 1
        self.prg = prg_new(block_bits, b, k, mix64(master_seed, 23))
        k_ind = max(4, math.ceil(math.log2(max(d, 4))))
        self.bucket_hashes = [KWiseHash(k_ind, d, self.buckets,
                                        mix64(master_seed, 24, c))
                              for c in range(copies)]
        self.sign_hashes = [KWiseHash(k_ind, d, 2, mix64(master_seed, 25, c))
                            for c in range(copies)]
        self.tables = np.zeros((copies, self.buckets), dtype=np.float64)

    def _scales(self, idx: np.ndarray) -> np.ndarray:
        blocks = self.prg.blocks(idx.astype(np.uint64))
        j = discrete_exp_many(blocks, self.cap, self.prg.block_bits)
        frac_bits = (blocks >> np.uint64(self.prg.block_bits - self.cap - 32)) \
            & np.uint64(0xFFFFFFFF)
        u = frac_bits.astype(np.float64) / 2.0 ** 32
        return (2.0 ** ((j + u) / self.p))

    def update_many(self, indices, values) -> None:
        idx = np.asarray(indices, dtype=np.int64)
        vals = np.asarray(values, dtype=np.float64)
        scale = self._scales(idx)
        for c in range(self.copies):
            signs = sign_eval_many(self.sign_hashes[c], idx.astype(np.uint64))
            buckets = self.bucket_hashes[c].eval_many(idx.astype(np.uint64))
            np.add.at(self.tables[c], buckets, signs * scale * vals)

    def update(self, i: int, v: int) -> None:
        self.update_many([i], [v])

    def sample(self) -> int:
        """Index whose (bucket, sign) pattern matches the max bucket everywhere."""
        arange = np.arange(self.dimension, dtype=np.uint64)
        mask = np.ones(self.dimension, dtype=bool)
        max_signs = []
        bucket_maps = []
        for c in range(self.copies):
            m = int(np.abs(self.tables[c]).argmax())
            if self.tables[c, m] == 0:
                raise SamplerFailure("empty sketch: nothing to sample")
            buckets = self.bucket_hashes[c].eval_many(arange)
            bucket_maps.append(buckets)
            mask &= buckets == m
            max_signs.append(1 if self.tables[c, m] > 0 else -1)
        cand = np.flatnonzero(mask)
        if cand.size == 0:
            raise SamplerFailure("no coordinate matches every max bucket")
        if cand.size > 1:
            # a candidate is sign-consistent when sigma_c(i)*sign(max bucket)
            # agrees across rows
            keep = []
            for i in cand:
                pat = {sign_eval_many(self.sign_hashes[c],
                                      np.array([i], dtype=np.uint64))[0] * max_signs[c]
                       for c in range(self.copies)}
                if len(pat) == 1:
                    keep.append(int(i))
            if len(keep) != 1:
                raise SamplerFailure("ambiguous candidates for the max bucket")
            return keep[0]
        return int(cand[0])


def lp_sample(stream_indices, stream_values, dimension: int, p: float,
              eps: float, master_seed: int, *, bound: int,
              copies: int = 3) -> int:
    """One-shot relaxed lp sample of a stream; raises SamplerFailure."""
    sampler = LpSampler(dimension, p, bound=bound, master_seed=master_seed,
                        eps=eps, copies=copies)
    sampler.update_many(stream_indices, stream_values)
    return sampler.sample()
