"""Arm-selection policies: network-aware cooperative UCB and local UCB1."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Below this tracked pull mass an arm counts as unexplored and gets an
# infinite index, reproducing classical UCB initialization without a
# dedicated init phase.
NU_FLOOR = 1e-9


@dataclass(frozen=True)
class LocalCounters:
    """An agent's own pull counts and reward sums, one slot per arm."""

    pulls: np.ndarray
    reward_sum: np.ndarray

    @classmethod
    def zeros(cls, num_arms: int) -> "LocalCounters":
        return cls(pulls=np.zeros(num_arms, dtype=int), reward_sum=np.zeros(num_arms))


@dataclass(frozen=True)
class IndexBreakdown:
    """One index value split into its mean and exploration-bonus parts."""

    q: float
    mean_part: float
    bonus_part: float
    effective_pulls: float
    effective_mass: float


def a2c_ucb_index(
    mu_hat: float, nu_hat: float, g_hat: float, t: int, alpha: float = 2.0
) -> IndexBreakdown:
    """Cooperative access-aware UCB index for one arm.

    The bonus is ``sqrt(alpha * log(t * g_hat) / nu_hat)`` built from the
    network-tracked pull mass ``nu_hat`` and generation-mass estimate
    ``g_hat``: arms reachable by fewer agents get extra exploration. A
    (numerically) unexplored arm gets an infinite index. The log argument
    is clamped at 1 so the radicand stays nonnegative while the
    generation-mass estimate is still in its early transient.
    """
    if nu_hat <= NU_FLOOR:
        return IndexBreakdown(math.inf, float(mu_hat), math.inf, float(nu_hat), float(g_hat))
    bonus = math.sqrt(alpha * math.log(max(t * g_hat, 1.0)) / nu_hat)
    return IndexBreakdown(
        q=float(mu_hat) + bonus,
        mean_part=float(mu_hat),
        bonus_part=bonus,
        effective_pulls=float(nu_hat),
        effective_mass=float(g_hat),
    )


def a2c_indices(mu_hat, nu_hat, g_hat, t: int, alpha: float) -> np.ndarray:
    """Vectorized version of :func:`a2c_ucb_index`; returns the q values."""
    mu_hat = np.asarray(mu_hat, dtype=float)
    nu_hat = np.asarray(nu_hat, dtype=float)
    g_hat = np.asarray(g_hat, dtype=float)
    explored = nu_hat > NU_FLOOR
    log_term = np.log(np.maximum(t * g_hat, 1.0))
    bonus = np.full(nu_hat.shape, np.inf)
    safe_nu = np.where(explored, nu_hat, 1.0)
    np.copyto(bonus, np.sqrt(alpha * log_term / safe_nu), where=explored)
    return mu_hat + bonus


def ucb1_indices(pulls, reward_sum, t: int, alpha: float) -> np.ndarray:
    """Standard UCB1 indices from local counters only; unpulled arms are infinite."""
    pulls = np.asarray(pulls, dtype=float)
    reward_sum = np.asarray(reward_sum, dtype=float)
    played = pulls > 0
    safe = np.where(played, pulls, 1.0)
    mean = np.where(played, reward_sum / safe, 0.0)
    bonus = np.where(played, np.sqrt(alpha * math.log(t) / safe), np.inf)
    return mean + bonus


def argmax_random_tie(masked_q: np.ndarray, u: float) -> int:
    """Index of the maximum of ``masked_q``; exact ties are broken by the
    uniform draw ``u`` so one draw is consumed per decision regardless of
    whether a tie occurred."""
    candidates = np.flatnonzero(masked_q == masked_q.max())
    pick = min(int(u * candidates.size), candidates.size - 1)
    return int(candidates[pick])


def select_arm_a2c(
    mu_hat,
    nu_hat,
    g_hat,
    accessible: np.ndarray,
    t: int,
    alpha: float,
    rng: np.random.Generator,
) -> int:
    """Accessible arm maximizing the cooperative index at round ``t``.

    ``accessible`` is the agent's boolean access row; estimates must come
    from the consensus state available at decision time. Ties (including
    several infinite indices) are broken uniformly from ``rng``.
    """
    q = a2c_indices(mu_hat, nu_hat, g_hat, t, alpha)
    masked = np.where(np.asarray(accessible, dtype=bool), q, -np.inf)
    return argmax_random_tie(masked, rng.random())


def select_arm_ucb1(
    counters: LocalCounters,
    accessible: np.ndarray,
    t: int,
    alpha: float,
    rng: np.random.Generator,
) -> int:
    """Accessible arm maximizing the local UCB1 index (no communication)."""
    q = ucb1_indices(counters.pulls, counters.reward_sum, t, alpha)
    masked = np.where(np.asarray(accessible, dtype=bool), q, -np.inf)
    return argmax_random_tie(masked, rng.random())


def record_pull(counters: LocalCounters, arm: int, reward: float) -> LocalCounters:
    """Counters after one pull of ``arm`` yielding ``reward``."""
    pulls = counters.pulls.copy()
    reward_sum = counters.reward_sum.copy()
    pulls[arm] += 1
    reward_sum[arm] += reward
    return LocalCounters(pulls=pulls, reward_sum=reward_sum)
