"""Hash-function primitives: pairwise and k-wise independent families.

Two families cover everything the sketches need:

* ``PairwiseHash`` -- the multiply-add-shift family over n-bit words,
  h(x) = high n bits of (a*x + b) computed in 2n-bit arithmetic.
* ``KWiseHash`` -- degree-(k-1) polynomials over the Mersenne prime field
  GF(2^61 - 1), reduced mod the range size.

Both expose a scalar ``eval`` and a vectorized ``eval_many`` over numpy
uint64 arrays; the vectorized paths emulate the needed 128-bit products
with 64-bit limbs.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .seeds import WordStream

MERSENNE_61 = (1 << 61) - 1

_M61 = np.uint64(MERSENNE_61)
_U0 = np.uint64(0)
_U3 = np.uint64(3)
_U32 = np.uint64(32)
_U61 = np.uint64(61)
_LOW32 = np.uint64(0xFFFFFFFF)


def _umulh(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """High 64 bits of the 128-bit product of uint64 operands."""
    a_lo = a & _LOW32
    a_hi = a >> _U32
    b_lo = b & _LOW32
    b_hi = b >> _U32
    t = a_lo * b_lo
    w = a_hi * b_lo + (t >> _U32)
    y = a_lo * b_hi + (w & _LOW32)
    return a_hi * b_hi + (w >> _U32) + (y >> _U32)


def _mulmod_m61(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a * b) mod (2^61 - 1) for uint64 arrays with values < 2^61."""
    lo = a * b
    hi = _umulh(a, b)
    # 2^64 = 8 mod (2^61 - 1), and hi < 2^58, so hi*8 stays below 2^61.
    r = (lo & _M61) + (lo >> _U61) + (hi << _U3)
    r = (r & _M61) + (r >> _U61)
    return np.where(r >= _M61, r - _M61, r)


class PairwiseHash:
    """Multiply-add-shift hash over ``word_bits``-bit words.

    h(x) = ((a*x + b) mod 2^(2n)) >> n, with a, b fixed 2n-bit words.
    Deterministic and immutable after construction.
    """

    __slots__ = ("word_bits", "multiplier_a", "offset_b",
                 "_a_hi", "_a_lo", "_b_hi", "_b_lo")

    def __init__(self, word_bits: int, multiplier_a: int, offset_b: int):
        if not 1 <= word_bits <= 64:
            raise ParameterError(f"word_bits must be in 1..64, got {word_bits}")
        mask2n = (1 << (2 * word_bits)) - 1
        if not 0 <= multiplier_a <= mask2n or not 0 <= offset_b <= mask2n:
            raise ParameterError("coefficients must be 2n-bit words")
        self.word_bits = word_bits
        self.multiplier_a = multiplier_a
        self.offset_b = offset_b
        self._a_hi = np.uint64(multiplier_a >> 64)
        self._a_lo = np.uint64(multiplier_a & 0xFFFFFFFFFFFFFFFF)
        self._b_hi = np.uint64(offset_b >> 64)
        self._b_lo = np.uint64(offset_b & 0xFFFFFFFFFFFFFFFF)

    @classmethod
    def identity(cls, word_bits: int) -> "PairwiseHash":
        """The family member with h(x) = x (a = 2^n, b = 0)."""
        return cls(word_bits, 1 << word_bits, 0)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PairwiseHash):
            return NotImplemented
        return (self.word_bits == other.word_bits
                and self.multiplier_a == other.multiplier_a
                and self.offset_b == other.offset_b)

    def __hash__(self):
        return hash((self.word_bits, self.multiplier_a, self.offset_b))

    def eval(self, x: int) -> int:
        n = self.word_bits
        mask2n = (1 << (2 * n)) - 1
        return ((self.multiplier_a * x + self.offset_b) & mask2n) >> n

    def eval_many(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized eval over a uint64 array of n-bit inputs."""
        n = self.word_bits
        xs = xs.astype(np.uint64, copy=False)
        p_lo = self._a_lo * xs
        p_hi = _umulh(np.broadcast_to(self._a_lo, xs.shape), xs) + self._a_hi * xs
        lo = p_lo + self._b_lo
        carry = (lo < p_lo).astype(np.uint64)
        hi = p_hi + self._b_hi + carry
        two_n = 2 * n
        if two_n < 64:
            return (lo & np.uint64((1 << two_n) - 1)) >> np.uint64(n)
        if two_n == 64:
            return lo >> np.uint64(n)
        if two_n < 128:
            hi = hi & np.uint64((1 << (two_n - 64)) - 1)
        if n == 64:
            return hi
        out = (lo >> np.uint64(n)) | (hi << np.uint64(64 - n))
        return out & np.uint64((1 << n) - 1)


def pairwise_new(n: int, seed: int) -> PairwiseHash:
    """Draw a fresh n-bit multiply-add-shift hash from a 64-bit seed."""
    if not 1 <= n <= 64:
        raise ParameterError(f"n must be in 1..64, got {n}")
    ws = WordStream(seed)
    a = ws.next_bits(2 * n)
    b = ws.next_bits(2 * n)
    return PairwiseHash(n, a, b)


def pairwise_eval(h: PairwiseHash, x: int) -> int:
    if not 0 <= x < (1 << h.word_bits):
        raise ParameterError(f"input {x} outside [0, 2^{h.word_bits})")
    return h.eval(x)


class KWiseHash:
    """k-wise independent hash [d] -> [v] via a random degree-(k-1) polynomial.

    Coefficients live in GF(prime); outputs are reduced mod v, accepting the
    <= k/prime bias from non-dividing ranges (negligible at 2^61 - 1).
    Tracks how many evaluations it has served (``evals``) so tests can
    assert per-update hash budgets.
    """

    def __init__(self, independence: int, domain_size: int, range_size: int,
                 seed: int | None = None, *, coefficients=None,
                 prime: int = MERSENNE_61):
        if independence < 1:
            raise ParameterError("independence k must be >= 1")
        if range_size < 1:
            raise ParameterError("range size v must be >= 1")
        if prime < max(domain_size, range_size):
            raise ParameterError(
                f"prime field {prime} too small for domain {domain_size} / "
                f"range {range_size}")
        self.independence = independence
        self.domain_size = domain_size
        self.range_size = range_size
        self.prime = prime
        if coefficients is not None:
            self.coefficients = [c % prime for c in coefficients]
            if len(self.coefficients) != independence:
                raise ParameterError("need exactly k coefficients")
        else:
            if seed is None:
                raise ParameterError("either seed or coefficients required")
            ws = WordStream(seed)
            # rejection sampling keeps coefficients uniform over the field
            coeffs = []
            while len(coeffs) < independence:
                w = ws.next_bits(64) >> 3  # 61 bits
                if w < prime:
                    coeffs.append(w)
            self.coefficients = coeffs
        self.evals = 0
        self._vec_coeffs = None
        if prime == MERSENNE_61:
            self._vec_coeffs = [np.uint64(c) for c in self.coefficients]

    def eval(self, x: int) -> int:
        self.evals += 1
        acc = 0
        for c in reversed(self.coefficients):
            acc = (acc * x + c) % self.prime
        return acc % self.range_size

    def eval_many(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized eval; requires the default Mersenne prime field."""
        if self._vec_coeffs is None:
            return np.array([self.eval(int(x)) for x in xs], dtype=np.int64)
        self.evals += len(xs)
        xs = xs.astype(np.uint64, copy=False)
        xs = np.where(xs >= _M61, xs - _M61, xs)  # domain < 2^62 assumed
        acc = np.broadcast_to(self._vec_coeffs[-1], xs.shape).copy()
        for c in self._vec_coeffs[-2::-1]:
            acc = _mulmod_m61(acc, xs) + c
            acc = np.where(acc >= _M61, acc - _M61, acc)
        return (acc % np.uint64(self.range_size)).astype(np.int64)


def kwise_new(k: int, d: int, v: int, seed: int,
              prime: int = MERSENNE_61) -> KWiseHash:
    return KWiseHash(k, d, v, seed, prime=prime)


def kwise_eval(h: KWiseHash, x: int) -> int:
    return h.eval(x)


def sign_eval(h: KWiseHash, x: int) -> int:
    """Map a v=2 hash output to a sign: bit 0 -> +1, bit 1 -> -1."""
    if h.range_size != 2:
        raise ParameterError("sign_eval needs a hash with range size 2")
    return 1 - 2 * h.eval(x)


def sign_eval_many(h: KWiseHash, xs: np.ndarray) -> np.ndarray:
    if h.range_size != 2:
        raise ParameterError("sign_eval needs a hash with range size 2")
    return 1 - 2 * h.eval_many(xs)
