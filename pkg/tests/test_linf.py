import numpy as np
import pytest

from sketchlab.errors import ParameterError
from sketchlab.linf import LinfSketch, LMap, linf_estimate, linf_tight_estimate
from sketchlab.seeds import mix64


class TestLMap:
    def test_zero_delta_routes_zero(self):
        lm = LMap(100, 16, seed=1)
        bucket, signed = lm.route(7, 0)
        assert signed == 0
        assert 0 <= bucket < 16

    def test_route_stable(self):
        lm = LMap(100, 16, seed=2)
        assert lm.route(12, 5) == lm.route(12, 5)

    def test_route_many_matches_scalar(self):
        lm = LMap(64, 8, seed=3)
        idx = np.arange(64)
        buckets, signed = lm.route_many(idx, np.full(64, 3))
        for i in idx:
            b, sv = lm.route(int(i), 3)
            assert buckets[i] == b and signed[i] == sv

    def test_energy_preserved_in_expectation(self):
        # E ||Lx||^2 = ||x||^2 over fresh seeds, within 3 sigma
        rng = np.random.default_rng(4)
        x = rng.integers(-10, 11, size=128).astype(float)
        norm2 = (x ** 2).sum()
        seeds = 10 ** 4
        vals = np.empty(seeds)
        for s in range(seeds):
            lm = LMap(128, 16, seed=mix64(5, s))
            vals[s] = (lm.apply_dense(x) ** 2).sum()
        se = vals.std() / seeds ** 0.5
        assert abs(vals.mean() - norm2) <= 3 * se

    def test_pow2_required(self):
        with pytest.raises(ParameterError):
            LMap(10, 12, seed=1)


class TestLinfSketch:
    def test_zero_stream(self):
        sk = LinfSketch(256, 0.1, bound=10, master_seed=1)
        assert sk.estimate() == 0.0

    def test_single_spike_exact(self):
        for s in range(10):
            sk = LinfSketch(256, 0.1, bound=50, master_seed=mix64(2, s))
            sk.update(17, -33)
            assert sk.estimate() == 33.0

    def test_update_many_matches_scalar(self):
        a = LinfSketch(128, 0.15, bound=20, master_seed=3)
        b = LinfSketch(128, 0.15, bound=20, master_seed=3)
        idx = [5, 90, 5, 33]
        vals = [7, -2, 1, 9]
        for i, v in zip(idx, vals):
            a.update(i, v)
        b.update_many(idx, vals)
        assert np.array_equal(a.inner.table, b.inner.table)

    def test_end_to_end_linearity_merge(self):
        rng = np.random.default_rng(6)
        idx = rng.integers(0, 128, size=150)
        vals = rng.integers(-9, 10, size=150)
        whole = LinfSketch(128, 0.15, bound=2000, master_seed=7)
        whole.update_many(idx, vals)
        lo = LinfSketch(128, 0.15, bound=2000, master_seed=7)
        hi = LinfSketch(128, 0.15, bound=2000, master_seed=7)
        lo.update_many(idx[:75], vals[:75])
        hi.update_many(idx[75:], vals[75:])
        assert np.array_equal(lo.merge(hi).inner.table, whole.inner.table)

    def test_estimate_bounded_by_bucket_mass_envelope(self):
        # the estimate can never exceed max_j sum_{h(i)=j} |x_i|
        rng = np.random.default_rng(8)
        x = rng.integers(-20, 21, size=256)
        sk = LinfSketch(256, 0.1, bound=20, master_seed=9)
        sk.update_many(np.arange(256), x)
        buckets = sk.lmap.bucket_hash.eval_many(np.arange(256, dtype=np.uint64))
        envelope = np.zeros(sk.lmap.output_dim)
        np.add.at(envelope, buckets, np.abs(x).astype(float))
        assert sk.estimate() <= envelope.max() + 1e-9

    def test_accuracy_smoke(self):
        # light version of the additive-error experiment
        d, trials, ok = 1024, 40, 0
        rng = np.random.default_rng(10)
        for t in range(trials):
            x = rng.integers(-10, 11, size=d)
            x[rng.integers(0, d)] = 60
            sk = LinfSketch(d, 0.1, bound=60, master_seed=mix64(11, t))
            sk.update_many(np.arange(d), x)
            l2 = float(np.sqrt((x.astype(float) ** 2).sum()))
            ok += abs(sk.estimate() - np.abs(x).max()) <= 0.1 * l2
        assert ok >= 0.75 * trials

    def test_tight_variant_fewer_counters(self):
        std = LinfSketch(4096, 0.1, bound=10, master_seed=12)
        tight = LinfSketch(4096, 0.1, bound=10, master_seed=12, variant="tight")
        assert tight.counter_count < std.counter_count

    def test_tight_estimator_guard(self):
        std = LinfSketch(256, 0.1, bound=10, master_seed=13)
        with pytest.raises(ParameterError):
            linf_tight_estimate(std)
        tight = LinfSketch(256, 0.1, bound=10, master_seed=13, variant="tight")
        tight.update(3, 21)
        assert linf_tight_estimate(tight) == 21.0
        assert linf_estimate(tight) == 21.0
