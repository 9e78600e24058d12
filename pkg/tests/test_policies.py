import numpy as np
import pytest

from banditkl.dist import RandomSource, make_finite
from banditkl.errors import NoArmsError, ValueOutOfRangeError
from banditkl.indices import ExplorationSchedule, exploration, kinf_ucb_index, kl_ucb_index
from banditkl.policies import PolicyKind, PolicyState, select_arm, update


def make_state(tag, n_arms=2, schedule=None):
    return PolicyState(PolicyKind(tag, schedule), n_arms)


class TestPolicyKind:
    def test_unknown_tag(self):
        with pytest.raises(ValueOutOfRangeError):
            PolicyKind("thompson")

    def test_default_schedules(self):
        assert PolicyKind("k_bernoulli").exploration is ExplorationSchedule.INFLATED_LOG
        assert PolicyKind("k_inf").exploration is ExplorationSchedule.LOG
        assert PolicyKind("ucb1").exploration is None

    def test_names(self):
        assert PolicyKind("k_inf").name == "k_inf[log]"
        assert PolicyKind("ucbv").name == "ucbv"


class TestSelectArm:
    def test_initialization_order(self):
        st = make_state("ucb1", 3)
        assert st.select_arm() == 0
        st.update(0, 1.0)
        st.update(2, 0.0)  # out-of-order updates still leave arm 1 unpulled
        assert st.select_arm() == 1

    def test_dominant_arm_after_init(self):
        for tag in ("k_bernoulli", "k_inf"):
            st = make_state(tag)
            st.update(0, 1.0)
            st.update(1, 0.0)
            assert st.select_arm() == 0

    def test_symmetric_tie_breaks_to_arm_zero(self):
        for tag in ("k_bernoulli", "k_inf", "ucb1", "ucbv"):
            st = make_state(tag)
            st.update(0, 0.5)
            st.update(1, 0.5)
            assert st.select_arm() == 0

    def test_mean_breaks_index_tie(self):
        # both indices capped at 1, means differ: richer mean wins
        st = make_state("k_bernoulli", 2)
        st.update(0, 0.0)
        st.update(1, 1.0)
        st.update(0, 1.0)
        # arm 0: mean 1/2 n=2; arm 1: mean 1 n=1 (index exactly 1)
        idx = st._indices()
        if idx[0] == idx[1]:
            assert st.select_arm() == 1

    def test_too_few_arms(self):
        with pytest.raises(NoArmsError):
            make_state("ucb1", 1)


class TestUpdate:
    def test_fresh_update(self):
        st = make_state("ucb1")
        update(st, 0, 1.0)
        assert st.arms[0].pulls == 1
        assert st.arms[0].mean == 1.0
        assert st.t == 1

    def test_two_updates_mean(self):
        st = make_state("ucb1")
        st.update(0, 0.5).update(0, 0.5)
        assert st.arms[0].mean == 0.5
        assert st.arms[0].empirical.atoms == {0.5: 2}

    def test_isolation_between_arms(self):
        st = make_state("ucb1", 3)
        st.update(0, 1.0)
        st.update(2, 0.25)
        assert st.arms[1].pulls == 0
        assert st.arms[0].empirical.atoms == {1.0: 1}
        assert st.arms[2].empirical.atoms == {0.25: 1}

    def test_reward_out_of_range(self):
        st = make_state("ucb1")
        with pytest.raises(ValueOutOfRangeError):
            st.update(0, 1.5)

    def test_state_invariants_random(self):
        rng = np.random.default_rng(21)
        st = make_state("ucbv", 3)
        for _ in range(500):
            a = int(rng.integers(0, 3))
            st.update(a, float(rng.choice([0.0, 0.25, 0.5, 1.0])))
        assert st.t == sum(rec.pulls for rec in st.arms)
        for rec in st.arms:
            if rec.pulls:
                assert rec.mean == pytest.approx(rec.frozen().mean, abs=1e-12)


class TestIndexPathsAgree:
    """The batched policy path must reproduce the public index ops bit for bit."""

    @pytest.mark.parametrize("tag", ["k_bernoulli", "k_inf"])
    def test_kl_policies(self, tag):
        rng = np.random.default_rng(22)
        arms = [
            make_finite([0.0, 0.5, 1.0], [0.2, 0.2, 0.6]),
            make_finite([0.0, 0.5, 1.0], [0.4, 0.4, 0.2]),
        ]
        src = RandomSource(77)
        st = make_state(tag, 2)
        for _ in range(300):
            a = select_arm(st)
            st.update(a, arms[a].sample(src))
            if all(rec.pulls for rec in st.arms):
                thr = exploration(st.kind.exploration, st.t)
                got = st._indices()
                if tag == "k_bernoulli":
                    want = [
                        kl_ucb_index(rec.mean, rec.pulls, thr) for rec in st.arms
                    ]
                else:
                    want = [
                        kinf_ucb_index(rec.frozen(), rec.pulls, thr)
                        for rec in st.arms
                    ]
                assert got == want

    def test_ucb_formulas(self):
        import math

        rng = np.random.default_rng(23)
        st = make_state("ucbv", 2)
        stu = make_state("ucb1", 2)
        for _ in range(200):
            a = int(rng.integers(0, 2))
            r = float(rng.choice([0.0, 0.5, 1.0]))
            st.update(a, r)
            stu.update(a, r)
        log_t = math.log(st.t)
        want_v = [
            rec.mean
            + math.sqrt(2.0 * rec.variance * log_t / rec.pulls)
            + 3.0 * log_t / rec.pulls
            for rec in st.arms
        ]
        want_1 = [
            rec.mean + math.sqrt(2.0 * log_t / rec.pulls) for rec in stu.arms
        ]
        assert st._indices() == pytest.approx(want_v, abs=0)
        assert stu._indices() == pytest.approx(want_1, abs=0)


class TestReplay:
    def test_replaying_rewards_reproduces_actions(self):
        arms = [make_finite([0.0, 1.0], [0.2, 0.8]), make_finite([0.0, 1.0], [0.5, 0.5])]
        src = RandomSource(31)
        st = make_state("k_inf", 2)
        log = []
        for _ in range(400):
            a = st.select_arm()
            r = arms[a].sample(src)
            log.append((a, r))
            st.update(a, r)

        st2 = make_state("k_inf", 2)
        for a, r in log:
            assert st2.select_arm() == a
            st2.update(a, r)

    def test_bernoulli_and_kinf_agree_on_01_rewards(self):
        from banditkl.sim import BanditInstance, run_one

        inst = BanditInstance.bernoulli(0.9, 0.8)
        for seed in range(5):
            r1 = run_one(
                inst, PolicyKind("k_bernoulli", ExplorationSchedule.LOG), 300, seed
            )
            r2 = run_one(inst, PolicyKind("k_inf", ExplorationSchedule.LOG), 300, seed)
            assert r1.action_log_hash == r2.action_log_hash
