import numpy as np
import pytest
from hypothesis import given, strategies as st

from coopbandit.consensus import (
    apply_round,
    estimates,
    init_state,
    outgoing_messages,
    synchronous_round,
)
from coopbandit.environment import AccessMatrix
from coopbandit.errors import MalformedInbox
from coopbandit.graph import DirectedGraph, build_weight_matrix, validate_graph

from oracle_utils import closed_form_states, scripted_pulls

REFERENCE_ACCESS = AccessMatrix(
    entries=[
        [1, 0, 0, 0, 0, 0, 0],
        [1, 0, 0, 0, 0, 0, 0],
        [0, 1, 1, 1, 0, 0, 0],
        [0, 0, 0, 1, 1, 1, 0],
        [0, 0, 0, 0, 0, 1, 0],
        [0, 0, 0, 0, 0, 0, 1],
    ]
)


def weights_for(num_agents, edges):
    return build_weight_matrix(validate_graph(DirectedGraph.from_edge_list(num_agents, edges)))

SYMMETRIC_PAIR = weights_for(2, [(0, 1), (1, 0)])
SINGLE = weights_for(1, [])
RING3 = weights_for(3, [(0, 1), (1, 2), (2, 0)])


def no_pulls(num_arms):
    return np.zeros(num_arms)


class TestInitState:
    def test_partial_access(self):
        state = init_state(0, AccessMatrix(entries=[[1, 0]]))
        assert state.u_hat.tolist() == [1.0, 0.0]
        assert state.y_hat == 1.0
        assert state.s_hat.tolist() == [0.0, 0.0]
        assert state.n_hat.tolist() == [0.0, 0.0]

    def test_full_access(self):
        state = init_state(0, AccessMatrix(entries=[[1, 1, 1]]))
        assert state.u_hat.tolist() == [1.0, 1.0, 1.0]

    def test_reference_agent_five(self):
        state = init_state(4, REFERENCE_ACCESS)
        assert state.u_hat.tolist() == [0, 0, 0, 0, 0, 1, 0]


class TestOutgoingMessages:
    def test_out_degree_one_halves(self):
        state = init_state(0, AccessMatrix(entries=[[1], [1]]))
        shares = outgoing_messages(state, SYMMETRIC_PAIR, 0)
        assert set(shares) == {0, 1}
        assert shares[1].y_part == 0.5
        assert shares[0].y_part == 0.5

    def test_isolated_agent_keeps_everything(self):
        state = init_state(0, AccessMatrix(entries=[[1]]))
        shares = outgoing_messages(state, SINGLE, 0)
        assert set(shares) == {0}
        assert shares[0].y_part == 1.0
        assert shares[0].s_part.tolist() == [0.0]

    def test_shares_sum_back_to_original(self):
        from coopbandit.consensus import AgentConsensusState

        state = AgentConsensusState(
            s_hat=np.array([2.0]), n_hat=np.array([2.0]), u_hat=np.array([1.0]), y_hat=1.0
        )
        shares = outgoing_messages(state, RING3, 0)
        sent = shares[1].s_part[0]
        kept = shares[0].s_part[0]
        assert sent == 1.0 and kept == 1.0
        assert sent + kept == 2.0


class TestApplyRound:
    def test_single_agent_accumulates(self):
        state = init_state(0, AccessMatrix(entries=[[1]]))
        inbox = list(outgoing_messages(state, SINGLE, 0).values())
        new = apply_round(state, inbox, np.array([1.0]), 0.7, expected_senders=[0])
        assert new.s_hat.tolist() == [0.7]
        assert new.n_hat.tolist() == [1.0]
        assert new.y_hat == 1.0

    def test_symmetric_pair_reward_spreads(self):
        access = AccessMatrix(entries=[[1, 1], [1, 1]])
        states = [init_state(i, access) for i in range(2)]
        gammas = np.array([[1.0, 0.0], [0.0, 0.0]])
        rewards = np.array([1.0, 0.0])
        states = synchronous_round(states, SYMMETRIC_PAIR, gammas, rewards)
        assert [s.s_hat[0] for s in states] == [1.0, 0.0]
        idle = np.zeros((2, 2))
        states = synchronous_round(states, SYMMETRIC_PAIR, idle, np.zeros(2))
        assert [s.s_hat[0] for s in states] == [0.5, 0.5]

    def test_access_mass_reaches_fixed_point(self):
        access = AccessMatrix(entries=[[1], [0]])
        states = [init_state(i, access) for i in range(2)]
        assert [s.u_hat[0] for s in states] == [1.0, 0.0]
        idle = np.zeros((2, 1))
        states = synchronous_round(states, SYMMETRIC_PAIR, idle, np.zeros(2))
        assert [s.u_hat[0] for s in states] == [0.5, 0.5]
        states = synchronous_round(states, SYMMETRIC_PAIR, idle, np.zeros(2))
        assert [s.u_hat[0] for s in states] == [0.5, 0.5]

    def test_malformed_inbox_rejected(self):
        state = init_state(0, AccessMatrix(entries=[[1], [1]]))
        shares = outgoing_messages(state, SYMMETRIC_PAIR, 0)
        with pytest.raises(MalformedInbox):
            apply_round(state, [shares[0], shares[0]], no_pulls(1), 0.0, expected_senders=[0, 1])
        with pytest.raises(MalformedInbox):
            apply_round(state, [shares[0]], no_pulls(1), 0.0, expected_senders=[0, 1])


class TestEstimates:
    def test_zero_state_guard(self):
        state = init_state(0, AccessMatrix(entries=[[1, 0]]))
        mu, nu, g = estimates(state, 1)
        assert mu.tolist() == [0.0, 0.0]
        assert nu.tolist() == [0.0, 0.0]

    def test_single_agent_after_one_pull(self):
        state = init_state(0, AccessMatrix(entries=[[1]]))
        inbox = list(outgoing_messages(state, SINGLE, 0).values())
        state = apply_round(state, inbox, np.array([1.0]), 0.7, expected_senders=[0])
        mu, nu, g = estimates(state, 1)
        assert mu[0] == pytest.approx(0.7, abs=0)
        assert nu[0] == 1.0
        assert g[0] == 1.0

    def test_generation_mass_fixed_point(self):
        access = AccessMatrix(entries=[[1], [0]])
        states = [init_state(i, access) for i in range(2)]
        idle = np.zeros((2, 1))
        for _ in range(2):
            states = synchronous_round(states, SYMMETRIC_PAIR, idle, np.zeros(2))
        for state in states:
            _, _, g = estimates(state, 2)
            assert g[0] == pytest.approx(1.0, abs=1e-12)


@st.composite
def consensus_cases(draw):
    num_agents = draw(st.integers(1, 4))
    order = draw(st.permutations(range(num_agents)))
    ring = (
        [(order[i], order[(i + 1) % num_agents]) for i in range(num_agents)]
        if num_agents > 1
        else []
    )
    extras = draw(
        st.lists(
            st.tuples(st.integers(0, num_agents - 1), st.integers(0, num_agents - 1)),
            max_size=6,
        )
    )
    num_arms = draw(st.integers(1, 3))
    access = draw(
        st.lists(
            st.lists(st.integers(0, 1), min_size=num_arms, max_size=num_arms),
            min_size=num_agents,
            max_size=num_agents,
        ).filter(lambda rows: all(any(row) for row in rows))
    )
    horizon = draw(st.integers(1, 8))
    return num_agents, num_arms, ring + extras, access, horizon


class TestAgainstDenseOracle:
    @given(consensus_cases())
    def test_trajectory_matches_matrix_power_oracle(self, case):
        num_agents, num_arms, edges, access_rows, horizon = case
        weights = weights_for(num_agents, edges)
        access = AccessMatrix(entries=access_rows)
        gamma_seq, reward_seq = scripted_pulls(num_agents, num_arms, access_rows, horizon)
        expected = closed_form_states(weights.entries, access_rows, gamma_seq, reward_seq)

        states = [init_state(i, access) for i in range(num_agents)]
        for t in range(horizon):
            states = synchronous_round(states, weights, gamma_seq[t], reward_seq[t])
            s_exp, n_exp, u_exp, y_exp = expected[t]
            stacked_s = np.stack([s.s_hat for s in states])
            stacked_n = np.stack([s.n_hat for s in states])
            stacked_u = np.stack([s.u_hat for s in states])
            stacked_y = np.array([s.y_hat for s in states])
            assert np.abs(stacked_s - s_exp).max() <= 1e-12
            assert np.abs(stacked_n - n_exp).max() <= 1e-12
            assert np.abs(stacked_u - u_exp).max() <= 1e-12
            assert np.abs(stacked_y - y_exp).max() <= 1e-12

    @given(consensus_cases())
    def test_mass_conservation_and_ordering(self, case):
        num_agents, num_arms, edges, access_rows, horizon = case
        weights = weights_for(num_agents, edges)
        access = AccessMatrix(entries=access_rows)
        gamma_seq, reward_seq = scripted_pulls(num_agents, num_arms, access_rows, horizon)
        generation_mass = np.asarray(access_rows).sum(axis=0)

        states = [init_state(i, access) for i in range(num_agents)]
        reward_ledger = np.zeros(num_arms)
        pull_ledger = np.zeros(num_arms)
        for t in range(horizon):
            states = synchronous_round(states, weights, gamma_seq[t], reward_seq[t])
            reward_ledger += (gamma_seq[t] * reward_seq[t][:, None]).sum(axis=0)
            pull_ledger += gamma_seq[t].sum(axis=0)

            total_s = np.sum([s.s_hat for s in states], axis=0)
            total_n = np.sum([s.n_hat for s in states], axis=0)
            total_u = np.sum([s.u_hat for s in states], axis=0)
            total_y = sum(s.y_hat for s in states)
            assert np.abs(total_s - reward_ledger).max() <= 1e-9 * (1 + reward_ledger.max())
            assert np.abs(total_n - pull_ledger).max() <= 1e-9 * (1 + pull_ledger.max())
            assert abs(total_y - num_agents) <= 1e-12 * num_agents
            assert np.abs(total_u - generation_mass).max() <= 1e-12 * max(num_agents, 1)

            for state in states:
                assert np.all(state.s_hat >= 0.0)
                assert np.all(state.n_hat >= 0.0)
                assert np.all(state.u_hat >= 0.0)
                assert state.y_hat > 0.0
                assert np.all(state.s_hat <= state.n_hat + 1e-12)
