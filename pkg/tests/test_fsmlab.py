import itertools

import numpy as np
import pytest

from sketchlab.errors import BudgetError, ParameterError
from sketchlab.fsmlab import (Fsm, StateDistribution, counter_mod,
                              distinguish_sweep, one_state, parity_low_bit,
                              prg_distribution, run_fsm, threshold_counter,
                              tv_distance, uniform_distribution)
from sketchlab.prg import nisan_new, prg_new
from sketchlab.hashing import PairwiseHash
from sketchlab.prg import HashPrg


class TestRunFsm:
    def test_empty_sequence(self):
        fsm = counter_mod(8)
        assert run_fsm(fsm, []) == 0

    def test_one_state(self):
        fsm = one_state()
        assert run_fsm(fsm, [3, 1, 4, 1, 5]) == 0

    def test_parity_hand_fold(self):
        fsm = parity_low_bit()
        assert run_fsm(fsm, [1, 1]) == 0
        assert run_fsm(fsm, [1, 2, 1]) == 0
        assert run_fsm(fsm, [1]) == 1


class TestUniformDistribution:
    def test_point_masses(self):
        assert uniform_distribution(one_state(), 4, 10).probabilities[0] == 1.0
        ident = Fsm(3, 1, lambda s, b: s, lambda ss, bb: ss)
        dist = uniform_distribution(ident, 4, 5)
        assert list(dist.probabilities) == [0.0, 1.0, 0.0]

    def test_parity_single_step(self):
        dist = uniform_distribution(parity_low_bit(), 1, 1)
        assert np.allclose(dist.probabilities, [0.5, 0.5])

    def test_matches_brute_force_sequences(self):
        # exact oracle: enumerate all symbol sequences at n=2, steps=3
        fsm = threshold_counter(4)
        n, steps = 2, 3
        counts = np.zeros(fsm.state_count)
        for seq in itertools.product(range(1 << n), repeat=steps):
            counts[run_fsm(fsm, seq)] += 1
        expected = counts / counts.sum()
        got = uniform_distribution(fsm, n, steps).probabilities
        assert np.allclose(got, expected, atol=1e-15)

    def test_budget_guard(self):
        with pytest.raises(BudgetError):
            uniform_distribution(counter_mod(2 ** 20), 40, 100)


class TestPrgDistribution:
    def test_depth_zero_equals_uniform(self):
        fsm = counter_mod(16)
        prg = prg_new(10, 2, 0, 5)
        a = prg_distribution(fsm, prg)
        b = uniform_distribution(fsm, 10, 1)
        assert tv_distance(a, b) == 0.0

    def test_one_state_point_mass(self):
        prg = prg_new(10, 2, 2, 6)
        dist = prg_distribution(one_state(), prg)
        assert dist.probabilities[0] == 1.0

    def test_matches_naive_seed_enumeration(self):
        # the brute-force oracle: run the fsm per seed in pure python
        fsm = counter_mod(4)
        prg = prg_new(8, 2, 2, 31)
        naive = np.zeros(4)
        for seed in range(1 << 8):
            clone = HashPrg(8, 2, 2, seed, prg.hash_table)
            naive[run_fsm(fsm, [clone.block(j) for j in range(4)])] += 1
        naive /= naive.sum()
        got = prg_distribution(fsm, prg).probabilities
        assert np.allclose(got, naive, atol=1e-15)

    def test_nisan_equals_general_with_identity_branch(self):
        fsm = counter_mod(8)
        nis = nisan_new(10, 3, 44)
        ident = PairwiseHash.identity(10)
        general = HashPrg(10, 2, 3, nis.seed_word,
                          [(ident, nis.hash_table[i][1]) for i in range(3)])
        a = prg_distribution(fsm, nis)
        b = prg_distribution(fsm, general)
        assert tv_distance(a, b) == 0.0


class TestTvDistance:
    def test_identical_and_disjoint(self):
        a = StateDistribution(np.array([0.5, 0.5]))
        assert tv_distance(a, a) == 0.0
        p = StateDistribution(np.array([1.0, 0.0]))
        q = StateDistribution(np.array([0.0, 1.0]))
        assert tv_distance(p, q) == 1.0

    def test_hand_value(self):
        a = StateDistribution(np.array([0.5, 0.5]))
        b = StateDistribution(np.array([0.75, 0.25]))
        assert tv_distance(a, b) == pytest.approx(0.25)

    def test_length_mismatch(self):
        a = StateDistribution(np.array([1.0]))
        b = StateDistribution(np.array([0.5, 0.5]))
        with pytest.raises(ParameterError):
            tv_distance(a, b)

    def test_symmetry_and_triangle_on_random_triples(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            p, q, r = (StateDistribution(v / v.sum())
                       for v in rng.random((3, 6)))
            assert tv_distance(p, q) == pytest.approx(tv_distance(q, p))
            assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r) + 1e-12


class TestSweep:
    def test_depth_zero_all_zero(self):
        summary = distinguish_sweep(counter_mod(16), n=10, b=2, k=0,
                                    hash_draws=5, master_seed=3)
        assert summary.max == 0.0

    def test_one_state_all_zero(self):
        summary = distinguish_sweep(one_state(), n=10, b=4, k=2,
                                    hash_draws=5, master_seed=4)
        assert summary.max == 0.0

    def test_values_in_unit_interval_and_quantiles(self):
        summary = distinguish_sweep(counter_mod(16), n=10, b=4, k=2,
                                    hash_draws=10, master_seed=5)
        assert np.all(summary.tvs >= 0) and np.all(summary.tvs <= 1)
        assert summary.quantiles[0.05] <= summary.quantiles[0.95]
        assert 0.0 <= summary.fraction_below(0.5) <= 1.0
