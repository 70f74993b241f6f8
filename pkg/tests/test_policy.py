import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coopbandit.policy import (
    LocalCounters,
    a2c_indices,
    a2c_ucb_index,
    argmax_random_tie,
    record_pull,
    select_arm_a2c,
    select_arm_ucb1,
    ucb1_indices,
)


class TestA2cIndex:
    def test_unexplored_arm_is_infinite(self):
        breakdown = a2c_ucb_index(mu_hat=0.0, nu_hat=0.0, g_hat=1.0, t=1, alpha=2.0)
        assert breakdown.q == math.inf
        assert breakdown.bonus_part == math.inf

    def test_known_scalar_value(self):
        # sqrt(2 * ln(16) / 4) evaluated to full precision
        breakdown = a2c_ucb_index(mu_hat=0.5, nu_hat=4.0, g_hat=2.0, t=8, alpha=2.0)
        assert breakdown.bonus_part == pytest.approx(1.1774100225154747, abs=1e-15)
        assert breakdown.q == pytest.approx(1.6774100225154747, abs=1e-15)
        assert breakdown.q == breakdown.mean_part + breakdown.bonus_part

    def test_log_clamp_boundary(self):
        breakdown = a2c_ucb_index(mu_hat=0.4, nu_hat=3.0, g_hat=0.5, t=2, alpha=2.0)
        assert breakdown.bonus_part == 0.0
        assert breakdown.q == 0.4

    def test_vectorized_matches_scalar(self):
        mu = np.array([0.1, 0.5, 0.0])
        nu = np.array([2.0, 4.0, 0.0])
        g = np.array([1.0, 2.0, 3.0])
        q = a2c_indices(mu, nu, g, t=8, alpha=2.0)
        for k in range(3):
            assert q[k] == a2c_ucb_index(mu[k], nu[k], g[k], t=8, alpha=2.0).q

    @given(
        st.floats(0.0, 1.0),
        st.floats(0.01, 1e4),
        st.floats(0.01, 1e4),
        st.floats(0.0, 10.0),
        st.integers(1, 10_000),
        st.integers(1, 10_000),
    )
    def test_monotonicity(self, mu, nu, extra_nu, g, t, extra_t):
        alpha = 2.0
        base = a2c_ucb_index(mu, nu, g, t, alpha)
        more_pulls = a2c_ucb_index(mu, nu + extra_nu, g, t, alpha)
        assert more_pulls.bonus_part <= base.bonus_part + 1e-12

        later = a2c_ucb_index(mu, nu, g, t + extra_t, alpha)
        assert later.q >= base.q - 1e-12

        higher_mean = a2c_ucb_index(min(mu + 0.1, 1.0), nu, g, t, alpha)
        assert higher_mean.q >= base.q - 1e-12

        more_mass = a2c_ucb_index(mu, nu, g + 1.0, t, alpha)
        assert more_mass.q >= base.q - 1e-12


class TestUcb1Index:
    def test_unpulled_arm_first(self):
        counters = LocalCounters(pulls=np.array([0, 5]), reward_sum=np.array([0.0, 4.0]))
        rng = np.random.default_rng(0)
        assert select_arm_ucb1(counters, np.array([True, True]), t=6, alpha=2.0, rng=rng) == 0

    def test_known_scalar_values(self):
        q = ucb1_indices(np.array([10, 10]), np.array([9.0, 1.0]), t=100, alpha=2.0)
        assert q[0] == pytest.approx(1.8597051824376163, abs=1e-14)
        assert q[1] == pytest.approx(1.0597051824376162, abs=1e-14)
        rng = np.random.default_rng(0)
        counters = LocalCounters(pulls=np.array([10, 10]), reward_sum=np.array([9.0, 1.0]))
        assert select_arm_ucb1(counters, np.array([True, True]), t=100, alpha=2.0, rng=rng) == 0

    def test_singleton_access(self):
        counters = LocalCounters.zeros(3)
        rng = np.random.default_rng(1)
        accessible = np.array([False, False, True])
        assert select_arm_ucb1(counters, accessible, t=1, alpha=2.0, rng=rng) == 2

    def test_matches_a2c_in_degenerate_setting(self):
        # Single agent: tracked mass equals local counters and the
        # generation-mass estimate is 1, so both index families agree.
        rng = np.random.default_rng(3)
        for _ in range(200):
            pulls = rng.integers(0, 30, size=4)
            rewards = pulls * rng.random(4)
            t = int(rng.integers(1, 500))
            local = ucb1_indices(pulls, rewards, t, alpha=2.0)
            mu = rewards / np.maximum(pulls, 1.0)
            networked = a2c_indices(mu, pulls.astype(float), np.ones(4), t, alpha=2.0)
            assert np.array_equal(local, networked)


class TestSelection:
    def test_cold_start_tie_break_covers_all_arms(self):
        q = np.array([math.inf, math.inf, math.inf, -math.inf])
        picked = {argmax_random_tie(q, u) for u in (0.0, 0.4, 0.7, 0.999999)}
        assert picked == {0, 1, 2}

    def test_tie_break_draw_at_upper_edge_stays_in_range(self):
        q = np.array([1.0, 1.0])
        assert argmax_random_tie(q, 0.9999999999999999) == 1

    def test_argmax_without_ties(self):
        rng = np.random.default_rng(0)
        arm = select_arm_a2c(
            mu_hat=np.array([0.7, 0.4]),
            nu_hat=np.array([10.0, 10.0]),
            g_hat=np.array([1.0, 1.0]),
            accessible=np.array([True, True]),
            t=10,
            alpha=2.0,
            rng=rng,
        )
        assert arm == 0

    def test_singleton_access_ignores_indices(self):
        rng = np.random.default_rng(0)
        arm = select_arm_a2c(
            mu_hat=np.array([0.9, 0.1, 0.5]),
            nu_hat=np.array([5.0, 5.0, 5.0]),
            g_hat=np.ones(3),
            accessible=np.array([False, False, True]),
            t=4,
            alpha=2.0,
            rng=rng,
        )
        assert arm == 2

    @given(
        st.integers(1, 6),
        st.integers(0, 2**32 - 1),
        st.integers(1, 1000),
    )
    def test_selected_arm_always_accessible(self, num_arms, seed, t):
        rng = np.random.default_rng(seed)
        accessible = rng.random(num_arms) < 0.5
        if not accessible.any():
            accessible[rng.integers(num_arms)] = True
        mu = rng.random(num_arms)
        nu = rng.random(num_arms) * 20.0
        g = 1.0 + rng.random(num_arms)
        arm = select_arm_a2c(mu, nu, g, accessible, t, 2.0, rng)
        assert accessible[arm]
        counters = LocalCounters(
            pulls=rng.integers(0, 10, num_arms), reward_sum=rng.random(num_arms)
        )
        arm = select_arm_ucb1(counters, accessible, t, 2.0, rng)
        assert accessible[arm]


class TestRecordPull:
    def test_single_update(self):
        counters = record_pull(LocalCounters.zeros(1), 0, 0.7)
        assert counters.pulls.tolist() == [1]
        assert counters.reward_sum.tolist() == [0.7]

    def test_two_updates(self):
        counters = LocalCounters.zeros(1)
        counters = record_pull(counters, 0, 1.0)
        counters = record_pull(counters, 0, 0.0)
        assert counters.pulls.tolist() == [2]
        assert counters.reward_sum.tolist() == [1.0]

    def test_does_not_mutate_input(self):
        before = LocalCounters.zeros(2)
        record_pull(before, 1, 0.5)
        assert before.pulls.tolist() == [0, 0]

    @given(st.lists(st.tuples(st.integers(0, 2), st.floats(0.0, 1.0)), max_size=100))
    def test_matches_fold_oracle(self, script):
        counters = LocalCounters.zeros(3)
        for arm, reward in script:
            counters = record_pull(counters, arm, reward)
        expected_pulls = [0, 0, 0]
        expected_sums = [0.0, 0.0, 0.0]
        for arm, reward in script:
            expected_pulls[arm] += 1
            expected_sums[arm] += reward
        assert counters.pulls.tolist() == expected_pulls
        assert counters.reward_sum.tolist() == pytest.approx(expected_sums, abs=1e-12)
