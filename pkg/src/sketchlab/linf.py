"""Additive-error max-coordinate estimation via a two-level sketch.

Level one is a dimension-reducing signed hash map: update (i, delta)
becomes (h(i), s(i)*delta) over t buckets, which preserves the squared
norm in expectation and, with t large enough, the max coordinate up to a
small additive error.  Level two is a CountSketch over the image; the
estimate is the largest point-query magnitude over all image coordinates.

The ``tight`` variant targets vectors whose max is a constant fraction of
the l2 norm: it keeps the same estimator but runs fewer repetitions with
a wider generator branch, beating the standard variant's counter budget.
There is deliberately no separate recovery code path for it.
"""

from __future__ import annotations

import math

import numpy as np

from .countsketch import CountSketchState, next_pow2
from .errors import ParameterError
from .hashing import KWiseHash, sign_eval_many
from .seeds import mix64


def _floor_pow2(x: int) -> int:
    return 1 << (x.bit_length() - 1)


class LMap:
    """Signed 2-wise bucket map [d] -> [t] with a 4-wise sign function."""

    def __init__(self, input_dim: int, output_dim: int, seed: int):
        if output_dim < 1 or (output_dim & (output_dim - 1)):
            raise ParameterError("output dimension t must be a power of two")
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.bucket_hash = KWiseHash(2, input_dim, output_dim, mix64(seed, 61))
        self.sign_hash = KWiseHash(4, input_dim, 2, mix64(seed, 62))

    def route(self, i: int, delta):
        """(bucket, signed delta) for one update."""
        if not 0 <= i < self.input_dim:
            raise ParameterError("coordinate out of range")
        return self.bucket_hash.eval(i), (1 - 2 * self.sign_hash.eval(i)) * delta

    def route_many(self, indices, deltas):
        idx = np.asarray(indices, dtype=np.int64)
        vals = np.asarray(deltas, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.input_dim):
            raise ParameterError("coordinate out of range")
        buckets = self.bucket_hash.eval_many(idx.astype(np.uint64))
        signs = sign_eval_many(self.sign_hash, idx.astype(np.uint64))
        return buckets, signs * vals

    def apply_dense(self, x) -> np.ndarray:
        """Materialize Lx for a dense vector (test oracle path)."""
        x = np.asarray(x, dtype=np.float64)
        idx = np.arange(len(x), dtype=np.uint64)
        buckets = self.bucket_hash.eval_many(idx)
        signs = sign_eval_many(self.sign_hash, idx)
        out = np.zeros(self.output_dim)
        np.add.at(out, buckets, signs * x)
        return out


class LinfSketch:
    """Two-level sketch: LMap composed with an inner CountSketch."""

    def __init__(self, dimension: int, eps: float, *, bound: int,
                 master_seed: int, variant: str = "standard"):
        if not 0.01 <= eps <= 0.5:
            raise ParameterError("eps must be in [0.01, 0.5] at desk scale")
        if variant not in ("standard", "tight"):
            raise ParameterError("variant must be 'standard' or 'tight'")
        self.dimension = dimension
        self.eps = eps
        self.variant = variant
        cap = _floor_pow2(max(dimension, 1))
        want = next_pow2(min(eps ** -8.0, 2.0 ** 62))
        t = min(cap, want)
        self.lmap = LMap(dimension, t, mix64(master_seed, 63))
        inner_t = next_pow2(2.0 / eps ** 2)
        if variant == "tight":
            r = 2 * math.ceil(math.log2(1.0 / eps)) + 1
            branching = next_pow2(1.0 / eps)
        else:
            r = 2 * math.ceil(math.log2(max(t, 2))) + 1
            branching = None
        # image coordinates aggregate up to d*bound of mass
        self.inner = CountSketchState(
            t, inner_t, r, bound=max(1, dimension * bound),
            master_seed=mix64(master_seed, 64), block_bits=64,
            branching=branching)

    @property
    def counter_count(self) -> int:
        """Allocated inner counters (the space-accounting figure)."""
        return self.inner.repetitions * self.inner.table_size

    def update(self, i: int, delta: int) -> None:
        bucket, signed = self.lmap.route(i, delta)
        self.inner.update(bucket, signed)

    def update_many(self, indices, deltas) -> None:
        buckets, signed = self.lmap.route_many(indices, deltas)
        self.inner.update_many(buckets, signed)

    def estimate(self) -> float:
        """Max point-query magnitude over the image coordinates."""
        ests = self.inner.estimate_many(np.arange(self.lmap.output_dim))
        return float(np.abs(ests).max())

    def merge(self, other: "LinfSketch") -> "LinfSketch":
        if (self.dimension, self.eps, self.variant) != \
                (other.dimension, other.eps, other.variant):
            raise ParameterError("mismatched sketch parameters")
        out = LinfSketch.__new__(LinfSketch)
        out.__dict__.update(self.__dict__)
        out.inner = self.inner.merge(other.inner)
        return out


def linf_estimate(sk: LinfSketch) -> float:
    return sk.estimate()


def linf_tight_estimate(sk: LinfSketch) -> float:
    """Estimate from the tight variant; same estimator, leaner geometry."""
    if sk.variant != "tight":
        raise ParameterError("sketch was not built as the tight variant")
    return sk.estimate()
