"""Exact finite-state-machine distinguishing harness for the generator.

Space-bounded adversaries are explicit FSMs over n-bit block alphabets.
Both final-state distributions are exact: the uniform one by dynamic
programming over all 2^n symbols per step, the generator one by running
the FSM on the full output for every one of the 2^n seeds.  The only
randomness in a sweep is therefore the hash draw, which is precisely the
quantity the distinguishing guarantee is about.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, ParameterError
from .prg import HashPrg, prg_new
from .seeds import mix64

ENUMERATION_BUDGET = 10 ** 9


@dataclass
class Fsm:
    """A deterministic FSM over n-bit blocks.

    ``transition(state, block) -> state`` must be pure; ``transition_many``
    is the vectorized counterpart over numpy int64 arrays and defaults to
    a python loop around ``transition``.
    """

    state_count: int
    start_state: int
    transition: callable
    transition_many: callable = None
    name: str = "fsm"

    def __post_init__(self):
        if not 0 <= self.start_state < self.state_count:
            raise ParameterError("start state outside state range")
        if self.transition_many is None:
            scalar = self.transition
            def fallback(states, blocks):
                return np.array([scalar(int(s), int(b))
                                 for s, b in zip(states, blocks)], dtype=np.int64)
            self.transition_many = fallback


@dataclass
class StateDistribution:
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64)
        if p.ndim != 1:
            raise ParameterError("distribution must be a vector")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ParameterError("probabilities must be nonnegative and sum to 1")
        self.probabilities = p

    def __len__(self):
        return len(self.probabilities)


def run_fsm(fsm: Fsm, blocks) -> int:
    """Fold the transition over a block sequence from the start state."""
    state = fsm.start_state
    for blk in blocks:
        state = fsm.transition(state, blk)
    return state


def uniform_distribution(fsm: Fsm, n: int, steps: int) -> StateDistribution:
    """Exact final-state law after ``steps`` uniform n-bit blocks."""
    symbols = 1 << n
    if symbols * fsm.state_count * max(steps, 1) > ENUMERATION_BUDGET:
        raise BudgetError("uniform enumeration exceeds the transition budget")
    syms = np.arange(symbols, dtype=np.int64)
    kernel = np.empty((fsm.state_count, fsm.state_count), dtype=np.float64)
    for s in range(fsm.state_count):
        outs = fsm.transition_many(np.full(symbols, s, dtype=np.int64), syms)
        kernel[s] = np.bincount(outs, minlength=fsm.state_count) / symbols
    p = np.zeros(fsm.state_count)
    p[fsm.start_state] = 1.0
    for _ in range(steps):
        p = p @ kernel
    return StateDistribution(p)


def prg_distribution(fsm: Fsm, prg: HashPrg) -> StateDistribution:
    """Exact final-state law of the FSM run on the generator output.

    Enumerates every seed word (2^n of them) with the generator's fixed
    hash draw; each seed contributes one full-length run of b^k blocks.
    """
    n = prg.block_bits
    seeds = np.arange(1 << n, dtype=np.uint64)
    steps = prg.capacity
    if (1 << n) * steps > ENUMERATION_BUDGET:
        raise BudgetError("seed enumeration exceeds the transition budget")
    states = np.full(1 << n, fsm.start_state, dtype=np.int64)
    for j in range(steps):
        blocks = prg.block_over_seeds(j, seeds).astype(np.int64)
        states = fsm.transition_many(states, blocks)
    hist = np.bincount(states, minlength=fsm.state_count) / (1 << n)
    return StateDistribution(hist)


def tv_distance(a: StateDistribution, b: StateDistribution) -> float:
    if len(a) != len(b):
        raise ParameterError("distributions must have equal length")
    return 0.5 * float(np.abs(a.probabilities - b.probabilities).sum())


@dataclass
class SweepSummary:
    n: int
    b: int
    k: int
    state_count: int
    tvs: np.ndarray
    quantile_levels: tuple = (0.05, 0.25, 0.5, 0.75, 0.95)
    mean: float = field(init=False)
    max: float = field(init=False)
    quantiles: dict = field(init=False)

    def __post_init__(self):
        self.tvs = np.asarray(self.tvs, dtype=np.float64)
        self.mean = float(self.tvs.mean())
        self.max = float(self.tvs.max())
        self.quantiles = {q: float(np.quantile(self.tvs, q))
                          for q in self.quantile_levels}

    def fraction_below(self, threshold: float) -> float:
        return float((self.tvs <= threshold).mean())


def distinguish_sweep(fsm: Fsm, n: int, b: int, k: int, hash_draws: int,
                      master_seed: int = 0) -> SweepSummary:
    """TV(prg law, uniform law) for ``hash_draws`` independent generators."""
    uniform = uniform_distribution(fsm, n, b ** k)
    tvs = np.empty(hash_draws)
    for draw in range(hash_draws):
        prg = prg_new(n, b, k, mix64(master_seed, draw))
        tvs[draw] = tv_distance(prg_distribution(fsm, prg), uniform)
    return SweepSummary(n=n, b=b, k=k, state_count=fsm.state_count, tvs=tvs)


# --- built-in adversary zoo ------------------------------------------------

def counter_mod(m: int) -> Fsm:
    """m-state counter: adds each block value mod m."""
    return Fsm(state_count=m, start_state=0,
               transition=lambda s, blk: (s + blk) % m,
               transition_many=lambda ss, bb: (ss + bb) % m,
               name=f"counter_mod_{m}")


def parity_low_bit() -> Fsm:
    """2-state tracker of the xor of the blocks' low bits."""
    return Fsm(state_count=2, start_state=0,
               transition=lambda s, blk: s ^ (blk & 1),
               transition_many=lambda ss, bb: ss ^ (bb & 1),
               name="parity_low_bit")


def threshold_counter(m: int) -> Fsm:
    """Counts blocks with the low bit set, saturating at m-1 states."""
    return Fsm(state_count=m, start_state=0,
               transition=lambda s, blk: min(s + (blk & 1), m - 1),
               transition_many=lambda ss, bb: np.minimum(ss + (bb & 1), m - 1),
               name=f"threshold_counter_{m}")


def one_state() -> Fsm:
    return Fsm(state_count=1, start_state=0,
               transition=lambda s, blk: 0,
               transition_many=lambda ss, bb: np.zeros_like(ss),
               name="one_state")


FSM_ZOO = {
    "counter_mod_64": lambda: counter_mod(64),
    "counter_mod_16": lambda: counter_mod(16),
    "parity_low_bit": parity_low_bit,
    "threshold_counter_8": lambda: threshold_counter(8),
    "one_state": one_state,
}
