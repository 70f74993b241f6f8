"""Round orchestration and seeded Monte Carlo batches.

A run advances in strict synchronous rounds: every agent picks an arm
from the consensus state left by the previous round, pulls and records
the reward, and only then does the whole network mix and absorb this
round's innovations behind a barrier. The per-round state update is the
dense matrix form of the message exchange in :mod:`coopbandit.consensus`
(one column-stochastic multiply plus the innovation scatter), which is
algebraically the same update and is cross-checked against the
message-level path in the test suite.

Randomness is drawn from substreams keyed by (seed, run, agent,
purpose), so trajectories are reproducible bit-for-bit and independent
of agent iteration order, execution order, and thread count.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis
from .environment import AccessMatrix, ArmSet, Environment, REWARD_MODELS, build_environment, reward_from_uniform
from .errors import ConfigError
from .graph import DirectedGraph, WeightMatrix, build_weight_matrix, validate_graph
from .policy import a2c_indices, argmax_random_tie, ucb1_indices

POLICIES = ("a2c_ucb", "ucb1_nocomm")

# Substream purposes; one independent stream per (seed, run, agent, purpose).
TIE_STREAM = 0
REWARD_STREAM = 1

_REQUIRED_KEYS = ("num_agents", "num_arms", "edges", "access", "arm_means", "horizon")
_OPTIONAL_KEYS = {
    "reward_model": "bernoulli",
    "alpha": 2.0,
    "policy": "a2c_ucb",
    "runs": 1,
    "seed": 0,
    "trace_every": 0,
}


@dataclass(frozen=True)
class SimConfig:
    """One experiment description; edges and indices are 0-based here,
    while config files use 1-based agent/arm labels."""

    num_agents: int
    num_arms: int
    edges: tuple
    access: np.ndarray
    arm_means: np.ndarray
    reward_model: str
    horizon: int
    alpha: float
    policy: str
    runs: int
    seed: int
    trace_every: int

    def __post_init__(self):
        access = np.asarray(self.access, dtype=np.int8)
        access.setflags(write=False)
        object.__setattr__(self, "access", access)
        means = np.asarray(self.arm_means, dtype=float)
        means.setflags(write=False)
        object.__setattr__(self, "arm_means", means)
        object.__setattr__(self, "edges", tuple((int(j), int(i)) for j, i in self.edges))


def _require_int(raw, key, minimum=None):
    if not isinstance(raw, int) or isinstance(raw, bool):
        raise ConfigError(f"config key {key!r} must be an integer, got {raw!r}")
    if minimum is not None and raw < minimum:
        raise ConfigError(f"config key {key!r} must be >= {minimum}, got {raw}")
    return raw


def config_from_dict(raw: dict) -> SimConfig:
    """Build a validated :class:`SimConfig` from a parsed config document.

    The document uses 1-based agent labels in ``edges`` (``[from, to]``
    meaning a link from the first agent to the second). Unknown keys are
    rejected so typos cannot silently change an experiment.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config document must be a JSON object")
    allowed = set(_REQUIRED_KEYS) | set(_OPTIONAL_KEYS)
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    missing = sorted(k for k in _REQUIRED_KEYS if k not in raw)
    if missing:
        raise ConfigError(f"missing required config keys: {missing}")

    num_agents = _require_int(raw["num_agents"], "num_agents", minimum=1)
    num_arms = _require_int(raw["num_arms"], "num_arms", minimum=1)

    edges = raw["edges"]
    if not isinstance(edges, (list, tuple)):
        raise ConfigError("config key 'edges' must be an array of [from, to] pairs")
    parsed_edges = []
    for edge in edges:
        if not (isinstance(edge, (list, tuple)) and len(edge) == 2):
            raise ConfigError(f"edge {edge!r} is not a [from, to] pair")
        src, dst = edge
        for endpoint in (src, dst):
            if not isinstance(endpoint, int) or isinstance(endpoint, bool):
                raise ConfigError(f"edge {edge!r} endpoints must be integers")
            if not (1 <= endpoint <= num_agents):
                raise ConfigError(
                    f"edge {edge!r} references an agent outside 1..{num_agents}"
                )
        parsed_edges.append((src - 1, dst - 1))

    access = raw["access"]
    try:
        access_arr = np.asarray(access)
    except Exception as exc:  # ragged rows
        raise ConfigError(f"config key 'access' is not a rectangular matrix: {exc}") from None
    if access_arr.shape != (num_agents, num_arms):
        raise ConfigError(
            f"access matrix shape {access_arr.shape} does not match "
            f"({num_agents}, {num_arms})"
        )
    if not np.isin(access_arr, (0, 1)).all():
        raise ConfigError("access matrix entries must be 0 or 1")

    means = np.asarray(raw["arm_means"], dtype=float)
    if means.shape != (num_arms,):
        raise ConfigError(f"arm_means must be a vector of length {num_arms}")
    if np.any(means < 0.0) or np.any(means > 1.0):
        raise ConfigError("arm_means must lie in [0, 1]")

    reward_model = raw.get("reward_model", _OPTIONAL_KEYS["reward_model"])
    if reward_model not in REWARD_MODELS:
        raise ConfigError(
            f"unknown reward_model {reward_model!r}; expected one of {REWARD_MODELS}"
        )

    horizon = _require_int(raw["horizon"], "horizon", minimum=1)
    runs = _require_int(raw.get("runs", _OPTIONAL_KEYS["runs"]), "runs", minimum=1)
    seed = _require_int(raw.get("seed", _OPTIONAL_KEYS["seed"]), "seed", minimum=0)
    trace_every = _require_int(
        raw.get("trace_every", _OPTIONAL_KEYS["trace_every"]), "trace_every", minimum=0
    )

    alpha = raw.get("alpha", _OPTIONAL_KEYS["alpha"])
    if not isinstance(alpha, (int, float)) or isinstance(alpha, bool):
        raise ConfigError(f"config key 'alpha' must be a number, got {alpha!r}")
    if not alpha > 1.0:
        raise ConfigError(f"alpha must be > 1, got {alpha}")

    policy = raw.get("policy", _OPTIONAL_KEYS["policy"])
    if policy not in POLICIES:
        raise ConfigError(f"unknown policy {policy!r}; expected one of {POLICIES}")

    return SimConfig(
        num_agents=num_agents,
        num_arms=num_arms,
        edges=tuple(parsed_edges),
        access=access_arr,
        arm_means=means,
        reward_model=reward_model,
        horizon=horizon,
        alpha=float(alpha),
        policy=policy,
        runs=runs,
        seed=seed,
        trace_every=trace_every,
    )


def load_config(path) -> SimConfig:
    """Parse and validate a JSON config file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw)


def config_to_dict(config: SimConfig) -> dict:
    """Round-trip a config back to the on-disk document form (1-based edges)."""
    return {
        "num_agents": config.num_agents,
        "num_arms": config.num_arms,
        "edges": [[j + 1, i + 1] for j, i in config.edges],
        "access": config.access.astype(int).tolist(),
        "arm_means": config.arm_means.tolist(),
        "reward_model": config.reward_model,
        "horizon": config.horizon,
        "alpha": config.alpha,
        "policy": config.policy,
        "runs": config.runs,
        "seed": config.seed,
        "trace_every": config.trace_every,
    }


def prepare(config: SimConfig):
    """Certify the graph, build the mixing weights, and assemble the environment."""
    graph = validate_graph(DirectedGraph.from_edge_list(config.num_agents, config.edges))
    weights = build_weight_matrix(graph)
    env = build_environment(
        ArmSet(means=config.arm_means, reward_model=config.reward_model),
        AccessMatrix(entries=config.access),
    )
    return graph, weights, env


def agent_substream(seed: int, run_index: int, agent: int, purpose: int) -> np.random.Generator:
    """Independent generator for one (run, agent, purpose) triple under ``seed``."""
    return np.random.default_rng(np.random.SeedSequence((seed, run_index, agent, purpose)))


def _draw_uniforms(seed: int, run_index: int, num_agents: int, horizon: int):
    """Pre-draw the per-round uniforms each agent consumes.

    One tie-break draw and one reward draw per (agent, round), in round
    order, exactly matching a sequential draw-by-draw replay of the same
    substreams.
    """
    tie = np.empty((horizon, num_agents))
    reward = np.empty((horizon, num_agents))
    for agent in range(num_agents):
        tie[:, agent] = agent_substream(seed, run_index, agent, TIE_STREAM).random(horizon)
        reward[:, agent] = agent_substream(seed, run_index, agent, REWARD_STREAM).random(horizon)
    return tie, reward


@dataclass(frozen=True)
class ConsensusTrace:
    """Snapshots of the consensus state and true local counters.

    ``times[m]`` is the round the m-th snapshot was taken after
    (0 is the initial state); all consensus arrays are post-round.
    """

    times: np.ndarray
    s_hat: np.ndarray
    n_hat: np.ndarray
    u_hat: np.ndarray
    y_hat: np.ndarray
    local_pulls: np.ndarray
    local_reward_sums: np.ndarray


@dataclass(frozen=True)
class RoundLog:
    """One round as seen from outside: actions, rewards, and (when a
    snapshot exists for that round) the post-round ratio estimates."""

    t: int
    actions: np.ndarray
    rewards: np.ndarray
    mu_hat: np.ndarray | None = None
    nu_hat: np.ndarray | None = None
    g_hat: np.ndarray | None = None


@dataclass(frozen=True)
class Trajectory:
    policy: str
    run_index: int
    actions: np.ndarray
    rewards: np.ndarray
    trace: ConsensusTrace | None

    @property
    def horizon(self) -> int:
        return self.actions.shape[0]

    @property
    def num_agents(self) -> int:
        return self.actions.shape[1]

    def round_log(self, t: int) -> RoundLog:
        if not 1 <= t <= self.horizon:
            raise IndexError(f"round {t} outside 1..{self.horizon}")
        mu = nu = g = None
        if self.trace is not None:
            where = np.flatnonzero(self.trace.times == t)
            if where.size:
                m = int(where[0])
                num_agents = self.num_agents
                n_hat = self.trace.n_hat[m]
                y = self.trace.y_hat[m][:, None]
                mu = self.trace.s_hat[m] / np.maximum(n_hat, 1.0)
                nu = num_agents * n_hat / y
                g = num_agents * self.trace.u_hat[m] / y
        return RoundLog(
            t=t, actions=self.actions[t - 1], rewards=self.rewards[t - 1],
            mu_hat=mu, nu_hat=nu, g_hat=g,
        )

    def iter_rounds(self):
        for t in range(1, self.horizon + 1):
            yield self.round_log(t)


@dataclass(frozen=True)
class RunResult:
    trajectory: Trajectory
    regret: "analysis.RegretReport"


@dataclass(frozen=True)
class MonteCarloResult:
    """Aggregated regret curves over seeded runs of one policy."""

    policy: str
    runs: int
    horizon: int
    mean_network_regret: np.ndarray
    std_network_regret: np.ndarray
    per_run_network_regret: np.ndarray
    per_run_agent_regret: np.ndarray

    @property
    def final_mean(self) -> float:
        return float(self.mean_network_regret[-1])

    @property
    def final_std(self) -> float:
        return float(self.std_network_regret[-1])


def _select_actions(masked_q: np.ndarray, draws: np.ndarray) -> np.ndarray:
    actions = np.empty(masked_q.shape[0], dtype=np.int32)
    for i in range(masked_q.shape[0]):
        actions[i] = argmax_random_tie(masked_q[i], draws[i])
    return actions


def run_single(config: SimConfig, run_index: int, *, weights: WeightMatrix | None = None) -> RunResult:
    """Execute one seeded trajectory of ``config.horizon`` rounds.

    Deterministic given ``(config, run_index)``. ``weights`` overrides
    the mixing matrix built from the graph; it exists so diagnostics and
    tests can inject a deliberately wrong matrix (e.g. row-stochastic)
    and watch the conservation audit fail.
    """
    _, built_weights, env = prepare(config)
    if weights is None:
        weights = built_weights
    mixing = weights.entries

    num_agents, num_arms = config.num_agents, config.num_arms
    horizon, alpha = config.horizon, config.alpha
    cooperative = config.policy == "a2c_ucb"
    accessible = config.access.astype(bool)
    means = config.arm_means

    tie_u, reward_u = _draw_uniforms(config.seed, run_index, num_agents, horizon)

    s_hat = np.zeros((num_agents, num_arms))
    n_hat = np.zeros((num_agents, num_arms))
    u_hat = config.access.astype(float)
    y_hat = np.ones(num_agents)
    pulls = np.zeros((num_agents, num_arms), dtype=np.int64)
    reward_sums = np.zeros((num_agents, num_arms))

    actions = np.empty((horizon, num_agents), dtype=np.int32)
    rewards = np.empty((horizon, num_agents))

    trace_every = config.trace_every if cooperative else 0
    trace = None
    if trace_every > 0:
        snapshots = 1 + horizon // trace_every
        trace = ConsensusTrace(
            times=np.zeros(snapshots, dtype=np.int64),
            s_hat=np.zeros((snapshots, num_agents, num_arms)),
            n_hat=np.zeros((snapshots, num_agents, num_arms)),
            u_hat=np.zeros((snapshots, num_agents, num_arms)),
            y_hat=np.zeros((snapshots, num_agents)),
            local_pulls=np.zeros((snapshots, num_agents, num_arms), dtype=np.int64),
            local_reward_sums=np.zeros((snapshots, num_agents, num_arms)),
        )
        trace.u_hat[0] = u_hat
        trace.y_hat[0] = y_hat
        snapshot_index = 1

    agent_rows = np.arange(num_agents)
    for t in range(1, horizon + 1):
        if cooperative:
            inv_y = num_agents / y_hat
            mu = s_hat / np.maximum(n_hat, 1.0)
            nu = inv_y[:, None] * n_hat
            g = inv_y[:, None] * u_hat
            q = a2c_indices(mu, nu, g, t, alpha)
        else:
            q = ucb1_indices(pulls, reward_sums, t, alpha)
        masked_q = np.where(accessible, q, -np.inf)
        acts = _select_actions(masked_q, tie_u[t - 1])
        r = reward_from_uniform(config.reward_model, means[acts], reward_u[t - 1])

        actions[t - 1] = acts
        rewards[t - 1] = r
        pulls[agent_rows, acts] += 1
        reward_sums[agent_rows, acts] += r

        if cooperative:
            # Barrier: mix the pre-round state network-wide, then absorb
            # this round's innovations so totals stay exact.
            s_hat = mixing @ s_hat
            n_hat = mixing @ n_hat
            u_hat = mixing @ u_hat
            y_hat = mixing @ y_hat
            s_hat[agent_rows, acts] += r
            n_hat[agent_rows, acts] += 1.0

        if trace is not None and t % trace_every == 0:
            trace.times[snapshot_index] = t
            trace.s_hat[snapshot_index] = s_hat
            trace.n_hat[snapshot_index] = n_hat
            trace.u_hat[snapshot_index] = u_hat
            trace.y_hat[snapshot_index] = y_hat
            trace.local_pulls[snapshot_index] = pulls
            trace.local_reward_sums[snapshot_index] = reward_sums
            snapshot_index += 1

    trajectory = Trajectory(
        policy=config.policy, run_index=run_index,
        actions=actions, rewards=rewards, trace=trace,
    )
    regret = analysis.compute_regret(actions, env)
    return RunResult(trajectory=trajectory, regret=regret)


def aggregate_network_regret(per_run_agent_regret: np.ndarray):
    """Mean and population std of the network regret curve over runs.

    Pure arithmetic over the stacked (runs, agents, rounds) per-agent
    curves; independent of the order runs were executed in.
    """
    per_run_network = per_run_agent_regret.sum(axis=1)
    return per_run_network, per_run_network.mean(axis=0), per_run_network.std(axis=0)


def run_monte_carlo(config: SimConfig, *, threads: int = 1) -> MonteCarloResult:
    """Run ``config.runs`` seeded trajectories and aggregate their regret.

    Run ``r`` uses substreams keyed by ``(config.seed, r)``, so the batch
    is reproducible and the aggregate does not depend on execution order
    or ``threads``.
    """
    indices = range(config.runs)
    if threads > 1 and config.runs > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda r: run_single(config, r), indices))
    else:
        results = [run_single(config, r) for r in indices]

    per_run_agent = np.stack([res.regret.per_agent_regret for res in results])
    per_run_network, mean_curve, std_curve = aggregate_network_regret(per_run_agent)
    return MonteCarloResult(
        policy=config.policy,
        runs=config.runs,
        horizon=config.horizon,
        mean_network_regret=mean_curve,
        std_network_regret=std_curve,
        per_run_network_regret=per_run_network,
        per_run_agent_regret=per_run_agent,
    )
