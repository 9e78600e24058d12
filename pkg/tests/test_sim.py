import math

import numpy as np
import pytest

from banditkl.dist import FiniteDist, RandomSource, child_seed, make_finite
from banditkl.errors import (
    HorizonTooSmallError,
    NoArmsError,
    ValueOutOfRangeError,
)
from banditkl.policies import PolicyKind, PolicyState
from banditkl.sim import (
    BanditInstance,
    default_checkpoints,
    mc_check_deviation,
    mc_check_types,
    run_many,
    run_one,
)


class TestBanditInstance:
    def test_derived_fields(self):
        inst = BanditInstance.bernoulli(0.9, 0.8, 0.9)
        assert inst.mu_star == 0.9
        assert inst.gaps == pytest.approx((0.0, 0.1, 0.0), abs=1e-15)
        assert inst.optimal_arms == (0, 2)
        assert inst.suboptimal_arms == (1,)

    def test_needs_two_arms(self):
        with pytest.raises(NoArmsError):
            BanditInstance(arms=(FiniteDist.bernoulli(0.5),))


class TestDefaultCheckpoints:
    def test_includes_horizon(self):
        cps = default_checkpoints(10_000)
        assert cps[-1] == 10_000
        assert cps[0] >= 1
        assert list(cps) == sorted(set(cps))

    def test_tiny_horizon(self):
        assert default_checkpoints(1) == (1,)

    def test_count_grows_with_request(self):
        assert len(default_checkpoints(10**6, 50)) >= 40


class TestRunOne:
    def test_identical_arms_zero_regret(self):
        inst = BanditInstance.bernoulli(0.7, 0.7)
        r = run_one(inst, PolicyKind("ucb1"), 300, seed=5)
        assert all(v == 0.0 for v in r.regret_curve)

    def test_dirac_instance_trace(self):
        # suboptimal Dirac(0) arm is pulled exactly once, at initialization
        inst = BanditInstance(
            arms=(FiniteDist.dirac(1.0), FiniteDist.dirac(0.0))
        )
        r = run_one(inst, PolicyKind("k_bernoulli"), 100, seed=3)
        assert r.pulls == (99, 1)
        assert r.regret_curve[-1] == pytest.approx(1.0, abs=1e-15)

    def test_determinism(self):
        inst = BanditInstance.bernoulli(0.9, 0.8)
        a = run_one(inst, PolicyKind("k_bernoulli"), 500, seed=11)
        b = run_one(inst, PolicyKind("k_bernoulli"), 500, seed=11)
        assert a == b
        c = run_one(inst, PolicyKind("k_bernoulli"), 500, seed=12)
        assert c.action_log_hash != a.action_log_hash

    def test_horizon_too_small(self):
        inst = BanditInstance.bernoulli(0.9, 0.8)
        with pytest.raises(HorizonTooSmallError):
            run_one(inst, PolicyKind("ucb1"), 1, seed=0)

    def test_curve_monotone_and_pulls_sum(self):
        inst = BanditInstance.bernoulli(0.6, 0.5, 0.4)
        r = run_one(inst, PolicyKind("ucbv"), 700, seed=9)
        assert sum(r.pulls) == 700
        assert all(b >= a for a, b in zip(r.regret_curve, r.regret_curve[1:]))

    def test_accounting_identity_against_manual_replay(self):
        # independent re-simulation: same seed, same policy, explicit
        # gap-weighted pull counting at every round
        arms = (
            make_finite([0.0, 0.5, 1.0], [0.3, 0.3, 0.4]),
            make_finite([0.0, 1.0], [0.6, 0.4]),
        )
        inst = BanditInstance(arms=arms)
        T = 250
        cps = tuple(range(1, T + 1))
        r = run_one(inst, PolicyKind("k_inf"), T, seed=21, checkpoints=cps)

        state = PolicyState(PolicyKind("k_inf"), 2)
        source = RandomSource(21)
        pulls = [0, 0]
        for t in range(T):
            a = state.select_arm()
            reward = arms[a].sample(source)
            state.update(a, reward)
            pulls[a] += 1
            expected = sum(g * n for g, n in zip(inst.gaps, pulls))
            assert r.regret_curve[t] == pytest.approx(expected, abs=1e-12)
        assert r.pulls == tuple(pulls)


class TestRunMany:
    def test_single_replication_wraps_run_one(self):
        inst = BanditInstance.bernoulli(0.9, 0.8)
        agg = run_many(inst, PolicyKind("ucb1"), 200, 1, base_seed=13)
        one = run_one(inst, PolicyKind("ucb1"), 200, seed=child_seed(13, 0))
        assert agg.mean_regret == one.regret_curve
        assert agg.mean_pulls == tuple(float(p) for p in one.pulls)
        assert agg.stderr_regret == tuple(0.0 for _ in one.regret_curve)
        assert agg.action_log_hashes == (one.action_log_hash,)

    def test_prefix_stability(self):
        inst = BanditInstance.bernoulli(0.9, 0.8)
        small = run_many(inst, PolicyKind("ucb1"), 150, 5, base_seed=3)
        big = run_many(inst, PolicyKind("ucb1"), 150, 10, base_seed=3)
        assert big.action_log_hashes[:5] == small.action_log_hashes
        assert big.child_seeds[:5] == small.child_seeds

    def test_identical_arms_zero_stderr(self):
        inst = BanditInstance.bernoulli(0.5, 0.5)
        agg = run_many(inst, PolicyKind("ucb1"), 100, 8, base_seed=1)
        assert all(m == 0.0 for m in agg.mean_regret)
        assert all(se == 0.0 for se in agg.stderr_regret)

    @pytest.mark.parametrize("workers", [2, 8])
    def test_worker_count_invariance(self, workers):
        inst = BanditInstance.bernoulli(0.9, 0.7)
        serial = run_many(
            inst, PolicyKind("k_bernoulli"), 300, 12, base_seed=7, workers=1
        )
        parallel = run_many(
            inst, PolicyKind("k_bernoulli"), 300, 12, base_seed=7, workers=workers
        )
        assert serial == parallel

    def test_invalid_replications(self):
        inst = BanditInstance.bernoulli(0.9, 0.7)
        with pytest.raises(ValueOutOfRangeError):
            run_many(inst, PolicyKind("ucb1"), 100, 0, base_seed=0)


class TestMcCheckDeviation:
    def test_single_step_cannot_cross_high_level(self):
        # one observation keeps kl at most log 2 < 2
        freq, bound = mc_check_deviation(0.5, 1, 2.0, reps=2000)
        assert freq == 0.0

    def test_bound_formula(self):
        _, bound = mc_check_deviation(0.5, 100, 8.0, reps=10)
        assert bound == pytest.approx(
            2.0 * math.e * 37 * math.exp(-8.0), abs=1e-15
        )

    def test_vacuous_bound_still_returned(self):
        freq, bound = mc_check_deviation(0.5, 1000, 1.5, reps=500)
        assert bound > 1.0
        assert 0.0 <= freq <= 1.0

    def test_inequality_small(self):
        freq, bound = mc_check_deviation(0.3, 100, 6.0, reps=20_000)
        assert freq <= bound + 3.0 * math.sqrt(bound / 20_000)

    def test_deterministic_in_seed(self):
        a = mc_check_deviation(0.4, 50, 4.0, reps=5000, seed=9)
        b = mc_check_deviation(0.4, 50, 4.0, reps=5000, seed=9)
        assert a == b

    def test_validation(self):
        with pytest.raises(ValueOutOfRangeError):
            mc_check_deviation(0.5, 100, 1.0, reps=10)
        with pytest.raises(ValueOutOfRangeError):
            mc_check_deviation(0.0, 100, 2.0, reps=10)


class TestMcCheckTypes:
    def test_dirac_never_deviates(self):
        freq, bound = mc_check_types(FiniteDist.dirac(1.0), 20, 0.1, reps=3000)
        assert freq == 0.0
        assert bound == pytest.approx(21 * math.exp(-2.0), abs=1e-12)

    def test_bound_formula(self):
        _, bound = mc_check_types(FiniteDist.bernoulli(0.5), 50, 0.3, reps=10)
        assert bound == pytest.approx(51**2 * math.exp(-15.0), rel=1e-12)

    def test_inequality_small(self):
        freq, bound = mc_check_types(
            FiniteDist.bernoulli(0.5), 50, 0.3, reps=20_000
        )
        assert freq <= bound + 3.0 * math.sqrt(bound / 20_000)

    def test_vacuous_gamma(self):
        freq, bound = mc_check_types(FiniteDist.bernoulli(0.5), 5, 0.01, reps=200)
        assert bound > 1.0
        assert 0.0 <= freq <= 1.0
