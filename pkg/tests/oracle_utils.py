"""Independent closed-form reference for the consensus recursions.

Computes each post-round state directly from matrix powers of the mixing
matrix (a global summation formula), rather than by stepping the
recursion, so it can serve as an oracle for both the message-passing
path and the engine.
"""

import numpy as np
from numpy.linalg import matrix_power


def closed_form_states(mixing, access_entries, gamma_seq, reward_seq):
    """States after each round for a scripted pull sequence.

    ``gamma_seq[t]`` is the (agents x arms) pull-indicator matrix of round
    ``t+1`` and ``reward_seq[t]`` the per-agent rewards. Returns a list of
    ``(s_hat, n_hat, u_hat, y_hat)`` tuples, one per round.
    """
    mixing = np.asarray(mixing, dtype=float)
    num_agents = mixing.shape[0]
    access = np.asarray(access_entries, dtype=float)
    ones = np.ones(num_agents)
    states = []
    total = len(gamma_seq)
    for t in range(1, total + 1):
        s_hat = np.zeros_like(access)
        n_hat = np.zeros_like(access)
        for tau in range(1, t + 1):
            propagator = matrix_power(mixing, t - tau)
            gamma = np.asarray(gamma_seq[tau - 1], dtype=float)
            rewards = np.asarray(reward_seq[tau - 1], dtype=float)
            s_hat += propagator @ (gamma * rewards[:, None])
            n_hat += propagator @ gamma
        u_hat = matrix_power(mixing, t) @ access
        y_hat = matrix_power(mixing, t) @ ones
        states.append((s_hat, n_hat, u_hat, y_hat))
    return states


def scripted_pulls(num_agents, num_arms, access_entries, horizon):
    """Deterministic feasible pull script with varied [0, 1] rewards."""
    access = np.asarray(access_entries)
    gamma_seq = []
    reward_seq = []
    for t in range(horizon):
        gamma = np.zeros((num_agents, num_arms))
        rewards = np.zeros(num_agents)
        for agent in range(num_agents):
            accessible = np.flatnonzero(access[agent])
            arm = accessible[(agent + t) % accessible.size]
            gamma[agent, arm] = 1.0
            rewards[agent] = ((agent + 1) * (t + 3) % 7) / 7.0
        gamma_seq.append(gamma)
        reward_seq.append(rewards)
    return gamma_seq, reward_seq
