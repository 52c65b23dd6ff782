"""Turnstile stream ingestion, synthetic workloads, and the exact oracle.

Stream files are plain text: a header line ``d m M`` (dimension, update
count, per-update magnitude bound) followed by m lines ``index delta``.
Desk-scale sizes make human-inspectable fixtures worth more than
throughput.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, StreamFormatError
from .seeds import mix64

ORACLE_DIMENSION_BUDGET = 10 ** 7


@dataclass
class TurnstileStream:
    dimension: int
    declared_bound: int
    indices: np.ndarray
    deltas: np.ndarray

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.deltas = np.asarray(self.deltas, dtype=np.int64)
        if self.dimension < 1:
            raise ParameterError("dimension must be positive")
        if self.indices.shape != self.deltas.shape or self.indices.ndim != 1:
            raise ParameterError("indices and deltas must be equal-length vectors")
        if self.indices.size:
            if self.indices.min() < 0 or self.indices.max() >= self.dimension:
                raise ParameterError("update index out of range")
            if np.abs(self.deltas).max() > self.declared_bound:
                raise ParameterError("update magnitude exceeds the declared bound")

    @property
    def update_count(self) -> int:
        return int(self.indices.size)

    def iter_updates(self):
        for i, v in zip(self.indices, self.deltas):
            yield int(i), int(v)

    def scaled(self, c: int) -> "TurnstileStream":
        return TurnstileStream(self.dimension, self.declared_bound * abs(c),
                               self.indices.copy(), self.deltas * c)


def parse_stream(path) -> TurnstileStream:
    """Read and strictly validate a stream file."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise StreamFormatError("empty file, expected a 'd m M' header", 1)
    head = lines[0].split()
    if len(head) != 3:
        raise StreamFormatError("header must be 'd m M'", 1)
    try:
        d, m, bound = (int(f) for f in head)
    except ValueError:
        raise StreamFormatError("header fields must be decimal integers", 1)
    if len(lines) - 1 != m:
        raise StreamFormatError(
            f"header promises {m} updates, file has {len(lines) - 1}",
            len(lines))
    idx = np.empty(m, dtype=np.int64)
    vals = np.empty(m, dtype=np.int64)
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != 2:
            raise StreamFormatError("update line must be 'index delta'", lineno)
        try:
            i, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise StreamFormatError("update fields must be decimal integers", lineno)
        if not 0 <= i < d:
            raise StreamFormatError(f"index {i} outside [0, {d})", lineno)
        if abs(v) > bound:
            raise StreamFormatError(f"|delta| = {abs(v)} exceeds bound {bound}",
                                    lineno)
        idx[lineno - 2] = i
        vals[lineno - 2] = v
    return TurnstileStream(d, bound, idx, vals)


def write_stream(stream: TurnstileStream, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{stream.dimension} {stream.update_count} "
                 f"{stream.declared_bound}\n")
        for i, v in zip(stream.indices, stream.deltas):
            fh.write(f"{i} {v}\n")


def gen_synthetic(shape: str, d: int, seed: int, *, amp: int = 100,
                  alpha: float = 1.0, spikes: int = 1,
                  churn: int = 0) -> TurnstileStream:
    """Deterministic synthetic workloads.

    flat       -- every coordinate has magnitude ``amp``, random signs
    zipf       -- magnitude of the rank-i coordinate is round(amp * i^-alpha)
    spike      -- ``spikes`` coordinates at ``amp`` over +-amp/50 noise
    gaussian   -- round(N(0, amp))

    ``churn`` appends that many cancelling (+c, -c) update pairs, leaving
    the final vector unchanged while exercising deletions.
    """
    rng = np.random.default_rng(mix64(seed, 71))
    if shape == "flat":
        x = amp * rng.choice([-1, 1], size=d)
    elif shape == "zipf":
        mags = np.round(amp * (np.arange(1, d + 1, dtype=np.float64) ** -alpha))
        x = (mags * rng.choice([-1, 1], size=d)).astype(np.int64)
        rng.shuffle(x)
    elif shape == "spike":
        noise = max(1, amp // 50)
        x = rng.integers(-noise, noise + 1, size=d)
        spots = rng.choice(d, size=min(spikes, d), replace=False)
        x[spots] = amp * rng.choice([-1, 1], size=len(spots))
    elif shape == "gaussian":
        x = np.round(rng.normal(0.0, amp, size=d)).astype(np.int64)
    else:
        raise ParameterError(f"unknown shape '{shape}'")
    idx = np.flatnonzero(x)
    vals = x[idx]
    if churn > 0:
        spots = rng.integers(0, d, size=churn)
        c = rng.integers(1, max(2, amp), size=churn)
        idx = np.concatenate([idx, spots, spots])
        vals = np.concatenate([vals, c, -c])
    order = rng.permutation(idx.size)
    bound = int(np.abs(vals).max()) if vals.size else 1
    return TurnstileStream(d, bound, idx[order], vals[order])


class OracleStats:
    """Dense replay of a stream with exact norms (the ground-truth side)."""

    def __init__(self, stream: TurnstileStream):
        if stream.dimension > ORACLE_DIMENSION_BUDGET:
            raise ParameterError("dimension exceeds the oracle memory budget")
        x = np.zeros(stream.dimension, dtype=np.int64)
        np.add.at(x, stream.indices, stream.deltas)
        self.x = x
        self._check_running_bound(stream)

    @staticmethod
    def _check_running_bound(stream: TurnstileStream) -> None:
        # running per-coordinate values must stay within +-d*M
        if not stream.update_count:
            return
        order = np.argsort(stream.indices, kind="stable")
        si, sv = stream.indices[order], stream.deltas[order]
        csum = np.cumsum(sv)
        group_start = np.flatnonzero(np.diff(si, prepend=si[0] - 1))
        offsets = np.zeros_like(csum)
        offsets[group_start[1:]] = csum[group_start[1:] - 1]
        running = csum - np.maximum.accumulate(offsets)
        limit = stream.dimension * stream.declared_bound
        if np.abs(running).max() > limit:
            raise ParameterError("running coordinate value exceeds d*M")

    @property
    def l2(self) -> float:
        return float(np.sqrt((self.x.astype(np.float64) ** 2).sum()))

    @property
    def linf(self) -> float:
        return float(np.abs(self.x).max()) if self.x.size else 0.0

    def norm(self, p: float) -> float:
        """The lp norm ||x||_p (p-th root of the moment)."""
        return float((np.abs(self.x.astype(np.float64)) ** p).sum() ** (1 / p))

    def moment(self, p: float) -> float:
        """The Fp moment sum |x_i|^p."""
        return float((np.abs(self.x.astype(np.float64)) ** p).sum())

    def tail_delta(self, t: int) -> float:
        mags = np.sort(np.abs(self.x.astype(np.float64)))[::-1]
        return float(np.sqrt((mags[t:] ** 2).sum() / t))


def replay_oracle(stream: TurnstileStream) -> OracleStats:
    return OracleStats(stream)
