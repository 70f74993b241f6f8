"""Stochastic arm environment, access structure, and ground-truth quantities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InaccessibleArm, IsolatedAgent, OrphanArm

REWARD_MODELS = ("bernoulli", "truncated_uniform")


@dataclass(frozen=True)
class ArmSet:
    """Arms with fixed means in [0, 1] and a bounded reward model."""

    means: np.ndarray
    reward_model: str = "bernoulli"

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float)
        if means.ndim != 1 or means.size < 1:
            raise DimensionMismatch("arm means must be a non-empty vector")
        if np.any(means < 0.0) or np.any(means > 1.0):
            raise ValueError("arm means must lie in [0, 1]")
        if self.reward_model not in REWARD_MODELS:
            raise ValueError(
                f"unknown reward model {self.reward_model!r}; expected one of {REWARD_MODELS}"
            )
        means.setflags(write=False)
        object.__setattr__(self, "means", means)

    @property
    def num_arms(self) -> int:
        return self.means.size


@dataclass(frozen=True)
class AccessMatrix:
    """Binary agent-by-arm matrix; entry (i, k) is 1 iff agent i may pull arm k."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries)
        if entries.ndim != 2:
            raise DimensionMismatch("access matrix must be 2-D (agents x arms)")
        if not np.isin(entries, (0, 1)).all():
            raise ValueError("access matrix entries must be 0 or 1")
        entries = entries.astype(np.int8)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def num_agents(self) -> int:
        return self.entries.shape[0]

    @property
    def num_arms(self) -> int:
        return self.entries.shape[1]

    def arms_for(self, agent: int) -> np.ndarray:
        return np.flatnonzero(self.entries[agent])

    def can_pull(self, agent: int, arm: int) -> bool:
        return bool(self.entries[agent, arm])


@dataclass(frozen=True)
class GroundTruth:
    """Optimal means, per-agent suboptimality gaps, and generation masses.

    ``gaps[i, k]`` is the agent's best accessible mean minus arm ``k``'s
    mean; it is nonnegative exactly on the agent's accessible arms.
    ``generation_mass[k]`` counts the agents able to pull arm ``k``.
    """

    global_opt_mean: float
    global_opt_arm: int
    local_opt_mean: np.ndarray
    local_opt_arm: np.ndarray
    gaps: np.ndarray
    generation_mass: np.ndarray


@dataclass(frozen=True)
class Environment:
    arms: ArmSet
    access: AccessMatrix
    ground_truth: GroundTruth


def build_environment(arms: ArmSet, access: AccessMatrix) -> Environment:
    """Assemble an environment and compute its ground truth exactly.

    Argmax ties resolve to the lowest arm index so the ground truth is
    deterministic.

    Raises
    ------
    DimensionMismatch
        If the access matrix arm count differs from the arm set.
    OrphanArm
        If some arm is accessible to no agent.
    IsolatedAgent
        If some agent has no accessible arms.
    """
    if access.num_arms != arms.num_arms:
        raise DimensionMismatch(
            f"access matrix has {access.num_arms} arm columns but {arms.num_arms} means given"
        )
    entries = access.entries
    column_sums = entries.sum(axis=0)
    if np.any(column_sums < 1):
        orphan = int(np.flatnonzero(column_sums < 1)[0])
        raise OrphanArm(f"arm {orphan} is accessible to no agent", arm=orphan)
    row_sums = entries.sum(axis=1)
    if np.any(row_sums < 1):
        isolated = int(np.flatnonzero(row_sums < 1)[0])
        raise IsolatedAgent(f"agent {isolated} has no accessible arms", agent=isolated)

    means = arms.means
    global_opt_arm = int(np.argmax(means))
    masked = np.where(entries > 0, means[None, :], -np.inf)
    local_opt_arm = np.argmax(masked, axis=1)
    local_opt_mean = means[local_opt_arm]
    gaps = local_opt_mean[:, None] - means[None, :]
    for arr in (local_opt_mean, local_opt_arm, gaps):
        arr.setflags(write=False)
    generation_mass = column_sums.astype(int)
    generation_mass.setflags(write=False)

    truth = GroundTruth(
        global_opt_mean=float(means[global_opt_arm]),
        global_opt_arm=global_opt_arm,
        local_opt_mean=local_opt_mean,
        local_opt_arm=local_opt_arm,
        gaps=gaps,
        generation_mass=generation_mass,
    )
    return Environment(arms=arms, access=access, ground_truth=truth)


def reward_from_uniform(model: str, mean, u):
    """Map uniform [0, 1) draws to rewards; broadcasts over arrays.

    The simulation engine and :func:`pull` share this transform so a
    batched run and a draw-by-draw replay produce identical rewards from
    identical uniform streams.

    Bernoulli thresholds the draw at the mean. The truncated-uniform
    model samples uniformly on ``[mean - w, mean + w]`` with
    ``w = min(mean, 1 - mean)``, the widest symmetric window inside
    [0, 1], so the mean is exact and the support stays bounded.
    """
    mean = np.asarray(mean, dtype=float)
    u = np.asarray(u, dtype=float)
    if model == "bernoulli":
        return np.where(u < mean, 1.0, 0.0)
    if model == "truncated_uniform":
        half_width = np.minimum(mean, 1.0 - mean)
        return mean + (2.0 * u - 1.0) * half_width
    raise ValueError(f"unknown reward model {model!r}")


def pull(env: Environment, agent: int, arm: int, rng: np.random.Generator) -> float:
    """Draw one reward for ``agent`` pulling ``arm``.

    Raises ``InaccessibleArm`` if the access matrix forbids the pull;
    this always signals a policy bug and is never silently allowed.
    """
    if not env.access.can_pull(agent, arm):
        raise InaccessibleArm(f"agent {agent} cannot pull arm {arm}")
    return float(reward_from_uniform(env.arms.reward_model, env.arms.means[arm], rng.random()))
