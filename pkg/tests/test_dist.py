import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from banditkl.dist import (
    EmpiricalDist,
    FiniteDist,
    RandomSource,
    SEED_MIX,
    child_seed,
    make_finite,
)
from banditkl.errors import (
    EmptyEmpiricalError,
    EmptySupportError,
    ValueOutOfRangeError,
    WeightsNotNormalizableError,
)


class TestMakeFinite:
    def test_bernoulli_half(self):
        d = make_finite([0, 1], [0.5, 0.5])
        assert d.support == (0.0, 1.0)
        assert d.weights == (0.5, 0.5)

    def test_sort_canonicalization(self):
        d = make_finite([1, 0], [0.3, 0.7])
        assert d.support == (0.0, 1.0)
        assert d.weights == (0.7, 0.3)

    def test_duplicate_merge(self):
        d = make_finite([0.5, 0.5], [0.4, 0.6])
        assert d.support == (0.5,)
        assert d.weights == (1.0,)

    def test_zero_weight_dropped(self):
        d = make_finite([0.2, 0.8], [0.0, 1.0])
        assert d.support == (0.8,)

    def test_empty_support(self):
        with pytest.raises(EmptySupportError):
            make_finite([], [])

    def test_value_out_of_range(self):
        with pytest.raises(ValueOutOfRangeError):
            make_finite([1.5], [1.0])
        with pytest.raises(ValueOutOfRangeError):
            make_finite([0.5], [-1.0])
        with pytest.raises(ValueOutOfRangeError):
            make_finite([0.1, 0.2], [1.0])

    def test_not_normalizable(self):
        with pytest.raises(WeightsNotNormalizableError):
            make_finite([0.1, 0.2], [0.5, 0.3])

    @given(
        st.lists(
            st.tuples(
                st.floats(0.0, 1.0, allow_nan=False),
                st.floats(0.01, 1.0, allow_nan=False),
            ),
            min_size=1,
            max_size=8,
        )
    )
    @settings(max_examples=200, deadline=None)
    def test_canonical_form(self, pairs):
        xs = [p[0] for p in pairs]
        raw = [p[1] for p in pairs]
        total = sum(raw)
        ws = [w / total for w in raw]
        d = make_finite(xs, ws)
        assert all(b > a for a, b in zip(d.support, d.support[1:]))
        assert all(w > 0 for w in d.weights)
        assert abs(math.fsum(d.weights) - 1.0) <= 1e-12
        assert all(0.0 <= s <= 1.0 for s in d.support)


class TestMean:
    def test_bernoulli(self):
        assert FiniteDist.bernoulli(0.3).mean == pytest.approx(0.3, abs=1e-15)

    def test_dirac_one(self):
        assert FiniteDist.dirac(1.0).mean == 1.0

    def test_three_atom_dot_product(self):
        # hand dot product: 0*0.2 + 0.5*0.5 + 1*0.3
        d = make_finite([0, 0.5, 1], [0.2, 0.5, 0.3])
        assert d.mean == pytest.approx(0.55, abs=1e-15)


class TestSample:
    def test_dirac_always_same(self):
        d = FiniteDist.dirac(0.7)
        src = RandomSource(123)
        assert all(d.sample(src) == 0.7 for _ in range(100))

    def test_bernoulli_mean_concentrates(self):
        d = FiniteDist.bernoulli(0.5)
        src = RandomSource(42)
        n = 10**6
        total = np.sum(src.uniforms(n) < 0.5)
        # 3.9 sigma binomial bound
        assert abs(total / n - 0.5) < 0.002

    def test_same_seed_same_sequence(self):
        d = make_finite([0.1, 0.4, 0.9], [0.3, 0.4, 0.3])
        a = [d.sample(RandomSource(9)) for _ in range(1)]
        xs1 = [d.sample(src) for src in [RandomSource(7)] for _ in range(50)]
        src1, src2 = RandomSource(7), RandomSource(7)
        seq1 = [d.sample(src1) for _ in range(200)]
        seq2 = [d.sample(src2) for _ in range(200)]
        assert seq1 == seq2

    def test_samples_are_support_points(self):
        d = make_finite([0.1, 0.4, 0.9], [0.3, 0.4, 0.3])
        src = RandomSource(5)
        assert all(d.sample(src) in d.support for _ in range(500))

    def test_empirical_weights_concentrate(self):
        # per-atom deviation below 5*sqrt(w(1-w)/n) at n = 1e5
        d = make_finite([0.0, 0.25, 0.5, 1.0], [0.1, 0.2, 0.3, 0.4])
        src = RandomSource(2024)
        n = 10**5
        emp = EmpiricalDist.from_values(d.sample(src) for _ in range(n))
        frozen = emp.freeze()
        for s, w in zip(d.support, d.weights):
            w_hat = frozen.weight_of(s)
            assert abs(w_hat - w) <= 5.0 * math.sqrt(w * (1 - w) / n)


class TestEmpirical:
    def test_observe_fresh(self):
        e = EmpiricalDist().observe(0.5)
        assert e.atoms == {0.5: 1}
        assert e.total == 1

    def test_observe_repeat(self):
        e = EmpiricalDist().observe(0.5).observe(0.5)
        assert e.atoms == {0.5: 2}
        assert e.total == 2

    def test_observe_new_atom(self):
        e = EmpiricalDist(atoms={0.0: 3}, total=3).observe(1.0)
        assert e.atoms == {0.0: 3, 1.0: 1}
        assert e.total == 4

    def test_observe_out_of_range(self):
        with pytest.raises(ValueOutOfRangeError):
            EmpiricalDist().observe(1.5)

    def test_observe_is_persistent(self):
        e0 = EmpiricalDist()
        e1 = e0.observe(0.5)
        assert e0.total == 0 and e1.total == 1

    def test_freeze_dirac(self):
        e = EmpiricalDist(atoms={1.0: 4}, total=4)
        assert e.freeze() == FiniteDist.dirac(1.0)

    def test_freeze_bernoulli(self):
        e = EmpiricalDist(atoms={0.0: 1, 1.0: 1}, total=2)
        assert e.freeze() == FiniteDist.bernoulli(0.5)

    def test_freeze_counts(self):
        e = EmpiricalDist(atoms={0.0: 1, 0.5: 2, 1.0: 1}, total=4)
        assert e.freeze().weights == (0.25, 0.5, 0.25)

    def test_freeze_empty(self):
        with pytest.raises(EmptyEmpiricalError):
            EmpiricalDist().freeze()

    def test_freeze_scale_free(self):
        values = [0.1, 0.4, 0.4, 0.9]
        once = EmpiricalDist.from_values(values).freeze()
        twice = EmpiricalDist.from_values(values + values).freeze()
        assert once == twice

    @pytest.mark.parametrize("n", [1, 10, 1000, 10_000])
    def test_frozen_mean_matches_average(self, n):
        rng = np.random.default_rng(n)
        values = rng.uniform(0.0, 1.0, n)
        emp = EmpiricalDist.from_values(values)
        assert emp.freeze().mean == pytest.approx(
            float(np.mean(values)), abs=1e-12
        )


class TestRandomSource:
    def test_determinism(self):
        assert RandomSource(99).uniforms(16).tolist() == RandomSource(99).uniforms(16).tolist()

    def test_child_seed_formula(self):
        base = 12345
        assert child_seed(base, 0) == base
        assert child_seed(base, 3) == base ^ ((3 * SEED_MIX) & ((1 << 64) - 1))

    def test_children_distinct(self):
        seeds = {child_seed(0, i) for i in range(1000)}
        assert len(seeds) == 1000

    def test_child_stream_matches_direct_source(self):
        a = RandomSource(5).child(7).uniforms(8)
        b = RandomSource(child_seed(5, 7)).uniforms(8)
        assert a.tolist() == b.tolist()
