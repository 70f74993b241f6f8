"""Per-agent state machine for running ratio consensus over a digraph.

Each agent keeps four mass quantities that are mixed through the
column-stochastic weight matrix every round: estimated network
cumulative reward per arm (``s_hat``), estimated network pull count per
arm (``n_hat``), access mass per arm (``u_hat``, seeded from the agent's
access row), and the scalar normalizer mass (``y_hat``, seeded at 1).
Column stochasticity preserves the network-wide totals of all four
exactly, and ratios against ``y_hat`` undo the stationary-distribution
bias that directed, unbalanced mixing would otherwise introduce.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environment import AccessMatrix
from .errors import MalformedInbox
from .graph import WeightMatrix


@dataclass(frozen=True)
class AgentConsensusState:
    s_hat: np.ndarray
    n_hat: np.ndarray
    u_hat: np.ndarray
    y_hat: float

    @property
    def num_arms(self) -> int:
        return self.s_hat.size


@dataclass(frozen=True)
class ConsensusMessage:
    """One pre-scaled share of a sender's state, addressed to one receiver."""

    sender: int
    s_part: np.ndarray
    n_part: np.ndarray
    u_part: np.ndarray
    y_part: float


def init_state(agent: int, access: AccessMatrix) -> AgentConsensusState:
    """Fresh state: zero reward/pull masses, access row as access mass, unit normalizer."""
    num_arms = access.num_arms
    return AgentConsensusState(
        s_hat=np.zeros(num_arms),
        n_hat=np.zeros(num_arms),
        u_hat=access.entries[agent].astype(float),
        y_hat=1.0,
    )


def outgoing_messages(
    state: AgentConsensusState, weights: WeightMatrix, agent: int
) -> dict[int, ConsensusMessage]:
    """Split the agent's state into shares for each out-neighbor plus itself.

    Every share is pre-scaled by the weight the receiver applies to this
    sender. The sender's weight column sums to one, so the shares of
    each quantity add back to the original value exactly.
    """
    column = weights.entries[:, agent]
    shares = {}
    for receiver in np.flatnonzero(column > 0.0):
        w = column[receiver]
        shares[int(receiver)] = ConsensusMessage(
            sender=agent,
            s_part=w * state.s_hat,
            n_part=w * state.n_hat,
            u_part=w * state.u_hat,
            y_part=w * state.y_hat,
        )
    return shares


def apply_round(
    state: AgentConsensusState,
    inbox,
    gamma: np.ndarray,
    reward: float,
    expected_senders,
) -> AgentConsensusState:
    """Advance one synchronous round: sum incoming shares, then add this
    round's own innovation (pull indicator and reward).

    ``inbox`` must hold exactly one message per in-neighbor plus the
    agent's own retained share; anything else raises ``MalformedInbox``,
    which always signals an engine wiring bug. Messages are summed in
    sender order so the update is deterministic.
    """
    inbox = sorted(inbox, key=lambda m: m.sender)
    senders = [m.sender for m in inbox]
    expected = sorted(expected_senders)
    if senders != expected:
        raise MalformedInbox(f"inbox senders {senders} != expected {expected}")

    num_arms = state.num_arms
    s_new = np.zeros(num_arms)
    n_new = np.zeros(num_arms)
    u_new = np.zeros(num_arms)
    y_new = 0.0
    for message in inbox:
        s_new += message.s_part
        n_new += message.n_part
        u_new += message.u_part
        y_new += message.y_part

    gamma = np.asarray(gamma, dtype=float)
    s_new += gamma * reward
    n_new += gamma
    return AgentConsensusState(s_hat=s_new, n_hat=n_new, u_hat=u_new, y_hat=y_new)


def estimates(state: AgentConsensusState, num_agents: int):
    """Ratio estimates from the current state.

    Returns ``(mu_hat, nu_hat, g_hat)``: the empirical-mean estimate per
    arm (pull-mass denominator floored at 1), the tracked network-wide
    pull count, and the tracked generation mass. Requires the normalizer
    mass to be positive, which the mixing dynamics guarantee.
    """
    mu_hat = state.s_hat / np.maximum(state.n_hat, 1.0)
    nu_hat = num_agents * state.n_hat / state.y_hat
    g_hat = num_agents * state.u_hat / state.y_hat
    return mu_hat, nu_hat, g_hat


def synchronous_round(
    states,
    weights: WeightMatrix,
    gammas: np.ndarray,
    rewards: np.ndarray,
) -> list[AgentConsensusState]:
    """Run one network-wide round behind a strict barrier.

    All outgoing shares are produced from the current states before any
    state advances. ``gammas`` is the (agents x arms) pull-indicator
    matrix for this round and ``rewards`` the per-agent rewards.
    """
    num_agents = weights.num_agents
    outboxes = [outgoing_messages(states[i], weights, i) for i in range(num_agents)]
    new_states = []
    for receiver in range(num_agents):
        expected = np.flatnonzero(weights.entries[receiver] > 0.0)
        inbox = [outboxes[sender][receiver] for sender in expected]
        new_states.append(
            apply_round(states[receiver], inbox, gammas[receiver], float(rewards[receiver]), expected)
        )
    return new_states
