"""Regret accounting, conservation and tracking audits, and CSV export."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .environment import Environment


@dataclass(frozen=True)
class RegretReport:
    """Cumulative pseudo-regret curves for one trajectory.

    Regret is measured against true means (pseudo-regret), so it never
    depends on realized reward noise. ``network_regret`` sums the
    per-agent curves, each taken against that agent's best *accessible*
    mean. ``learnable_plus_constraint`` measures against the global
    optimum instead; per round it exceeds the network curve by exactly
    ``constraint_loss / horizon``, the unavoidable loss agents pay for
    arms they cannot reach.
    """

    per_agent_regret: np.ndarray
    network_regret: np.ndarray
    constraint_loss: float
    learnable_plus_constraint: np.ndarray


def compute_regret(actions: np.ndarray, env: Environment) -> RegretReport:
    """Pseudo-regret curves for a (rounds x agents) action log."""
    horizon, _ = actions.shape
    truth = env.ground_truth
    means = env.arms.means

    chosen_means = means[actions]
    instant = truth.local_opt_mean[None, :] - chosen_means
    per_agent = np.cumsum(instant, axis=0).T
    network = per_agent.sum(axis=0)

    global_instant = truth.global_opt_mean - chosen_means
    learnable_plus_constraint = np.cumsum(global_instant.sum(axis=1))
    constraint_loss = horizon * float((truth.global_opt_mean - truth.local_opt_mean).sum())

    return RegretReport(
        per_agent_regret=per_agent,
        network_regret=network,
        constraint_loss=constraint_loss,
        learnable_plus_constraint=learnable_plus_constraint,
    )


@dataclass(frozen=True)
class ConservationAudit:
    """Worst deviations of the consensus mass totals from the true ledgers."""

    max_reward_mass_dev: float
    max_pull_mass_dev: float
    max_normalizer_dev: float
    max_access_mass_dev: float
    reward_tol: float
    pull_tol: float
    aux_tol: float

    @property
    def passed(self) -> bool:
        return (
            self.max_reward_mass_dev <= self.reward_tol
            and self.max_pull_mass_dev <= self.pull_tol
            and self.max_normalizer_dev <= self.aux_tol
            and self.max_access_mass_dev <= self.aux_tol
        )


def conservation_audit(
    trace,
    actions: np.ndarray,
    rewards: np.ndarray,
    env: Environment,
    *,
    mass_tol: float = 1e-6,
    aux_tol: float = 1e-9,
) -> ConservationAudit:
    """Check that mixing preserved every network total exactly.

    The true ledgers (cumulative reward and pull count per arm) are
    re-accumulated directly from the action/reward log, a path fully
    independent of the mixing arithmetic, and compared against the
    column sums of the traced consensus state at every snapshot. Also
    checks the normalizer total against the agent count and the access
    mass totals against the generation masses.
    """
    horizon, num_agents = actions.shape
    num_arms = env.arms.num_arms

    per_round_reward = np.zeros((horizon, num_arms))
    per_round_pulls = np.zeros((horizon, num_arms))
    t_index = np.repeat(np.arange(horizon), num_agents)
    arm_index = actions.ravel()
    np.add.at(per_round_reward, (t_index, arm_index), rewards.ravel())
    np.add.at(per_round_pulls, (t_index, arm_index), 1.0)
    reward_ledger = np.vstack([np.zeros(num_arms), np.cumsum(per_round_reward, axis=0)])
    pull_ledger = np.vstack([np.zeros(num_arms), np.cumsum(per_round_pulls, axis=0)])

    times = trace.times
    s_totals = trace.s_hat.sum(axis=1)
    n_totals = trace.n_hat.sum(axis=1)
    y_totals = trace.y_hat.sum(axis=1)
    u_totals = trace.u_hat.sum(axis=1)

    reward_dev = np.abs(s_totals - reward_ledger[times]).max()
    pull_dev = np.abs(n_totals - pull_ledger[times]).max()
    normalizer_dev = np.abs(y_totals - num_agents).max()
    access_dev = np.abs(u_totals - env.ground_truth.generation_mass[None, :]).max()

    return ConservationAudit(
        max_reward_mass_dev=float(reward_dev),
        max_pull_mass_dev=float(pull_dev),
        max_normalizer_dev=float(normalizer_dev),
        max_access_mass_dev=float(access_dev),
        reward_tol=mass_tol,
        pull_tol=mass_tol,
        aux_tol=aux_tol,
    )


@dataclass(frozen=True)
class TrackingReport:
    """How far each agent's mean estimate strays from the Perron-weighted
    network empirical mean, against the theoretical tracking bound."""

    max_abs_error: np.ndarray
    num_checked: int
    num_violations: int
    min_margin: float

    @property
    def passed(self) -> bool:
        return self.num_violations == 0


def tracking_error_report(trace, perron_vector: np.ndarray, error_bound: float) -> TrackingReport:
    """Audit ``|mu_hat - mu_bar| <= 2 c / (n_bar - c)`` at every snapshot.

    ``mu_bar`` is the ratio of Perron-weighted true local reward sums and
    pull counts; the bound is only asserted where the weighted pull count
    exceeds the consensus error bound ``c``, which is exactly where the
    theory makes it meaningful.
    """
    phi = np.asarray(perron_vector, dtype=float)
    pulls = trace.local_pulls.astype(float)
    n_bar = np.einsum("i,mik->mk", phi, pulls)
    s_bar = np.einsum("i,mik->mk", phi, trace.local_reward_sums)

    defined = n_bar > 0.0
    mu_bar = np.where(defined, s_bar / np.where(defined, n_bar, 1.0), 0.0)
    mu_hat = trace.s_hat / np.maximum(trace.n_hat, 1.0)
    error = np.abs(mu_hat - mu_bar[:, None, :])
    error = np.where(defined[:, None, :], error, 0.0)
    max_abs_error = error.max(axis=0)

    checked = n_bar > error_bound
    if not checked.any():
        return TrackingReport(
            max_abs_error=max_abs_error, num_checked=0, num_violations=0, min_margin=math.inf
        )

    bound = np.where(checked, 2.0 * error_bound / np.where(checked, n_bar - error_bound, 1.0), np.inf)
    margins = bound[:, None, :] - error
    checked_full = np.broadcast_to(checked[:, None, :], error.shape)
    num_checked = int(checked_full.sum())
    num_violations = int((margins[checked_full] < 0.0).sum())
    min_margin = float(margins[checked_full].min())
    return TrackingReport(
        max_abs_error=max_abs_error,
        num_checked=num_checked,
        num_violations=num_violations,
        min_margin=min_margin,
    )


@dataclass(frozen=True)
class TheoreticalBound:
    """Per-agent regret ceiling implied by the gap structure and mixing.

    ``skipped_zero_gap`` lists accessible (agent, arm) pairs that tie the
    agent's best mean: the per-arm term is undefined there, and such arms
    contribute no regret anyway.
    """

    per_agent_bound: np.ndarray
    skipped_zero_gap: tuple


def theorem_bound(env: Environment, error_bound: float, alpha: float, horizon: int) -> TheoreticalBound:
    """Evaluate the per-agent expected-regret ceiling.

    For every accessible suboptimal arm with gap ``d`` and generation
    mass ``g``, the agent pays at most
    ``16 * alpha * log(horizon * g) / d + 4 * c + d``, plus the global
    ``2 * horizon**(1 - alpha)`` confidence-failure term.
    """
    truth = env.ground_truth
    num_agents = env.access.num_agents
    bounds = np.zeros(num_agents)
    skipped = []
    for agent in range(num_agents):
        total = 2.0 * horizon ** (1.0 - alpha)
        for arm in env.access.arms_for(agent):
            arm = int(arm)
            if arm == int(truth.local_opt_arm[agent]):
                continue
            gap = float(truth.gaps[agent, arm])
            if gap == 0.0:
                skipped.append((agent, arm))
                continue
            mass = float(truth.generation_mass[arm])
            total += 16.0 * alpha * math.log(horizon * mass) / gap + 4.0 * error_bound + gap
        bounds[agent] = total
    return TheoreticalBound(per_agent_bound=bounds, skipped_zero_gap=tuple(skipped))


def tracking_error_series(trace, perron_vector: np.ndarray):
    """Worst-over-agents-and-arms mean tracking error at each snapshot."""
    phi = np.asarray(perron_vector, dtype=float)
    n_bar = np.einsum("i,mik->mk", phi, trace.local_pulls.astype(float))
    s_bar = np.einsum("i,mik->mk", phi, trace.local_reward_sums)
    defined = n_bar > 0.0
    mu_bar = np.where(defined, s_bar / np.where(defined, n_bar, 1.0), 0.0)
    mu_hat = trace.s_hat / np.maximum(trace.n_hat, 1.0)
    error = np.abs(mu_hat - mu_bar[:, None, :])
    error = np.where(defined[:, None, :], error, 0.0)
    return trace.times.copy(), error.max(axis=(1, 2))


def generation_mass_error(trace, generation_mass: np.ndarray, num_agents: int):
    """Envelope of the generation-mass tracking error at each snapshot."""
    g_hat = num_agents * trace.u_hat / trace.y_hat[:, :, None]
    errors = np.abs(g_hat - generation_mass[None, None, :]).max(axis=(1, 2))
    return trace.times.copy(), errors


def convergence_time(times: np.ndarray, errors: np.ndarray, tol: float):
    """Earliest snapshot time after which the error never exceeds ``tol``."""
    tail_max = np.maximum.accumulate(errors[::-1])[::-1]
    within = np.flatnonzero(tail_max <= tol)
    if within.size == 0:
        return None
    return int(times[within[0]])


def fit_geometric_rate(times: np.ndarray, values: np.ndarray, *, floor: float = 1e-12, min_points: int = 5) -> float:
    """Per-round decay rate fitted to ``values ~ C * rate**t``.

    Points at or below ``floor`` are excluded so the numerical noise
    plateau does not flatten the fit. Returns NaN when too few points
    remain to fit.
    """
    mask = values > floor
    if mask.sum() < min_points:
        return float("nan")
    slope = np.polyfit(times[mask].astype(float), np.log(values[mask]), 1)[0]
    return float(np.exp(slope))


def _format_value(value: float) -> str:
    return f"{value:.9f}"


def _write_text(path: Path, chunks) -> None:
    try:
        with open(path, "w", newline="") as handle:
            handle.writelines(chunks)
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc


def _runs_csv_rows(result):
    yield "policy,run,t,agent,regret,network_regret\n"
    policy = result.policy
    per_agent = result.per_run_agent_regret
    per_network = result.per_run_network_regret
    num_agents = per_agent.shape[1]
    for run in range(result.runs):
        for t in range(1, result.horizon + 1):
            network = _format_value(per_network[run, t - 1])
            for agent in range(num_agents):
                regret = _format_value(per_agent[run, agent, t - 1])
                yield f"{policy},{run},{t},{agent + 1},{regret},{network}\n"


def _aggregate_csv_rows(result):
    yield "policy,t,mean_network_regret,std_network_regret\n"
    for t in range(1, result.horizon + 1):
        mean = _format_value(result.mean_network_regret[t - 1])
        std = _format_value(result.std_network_regret[t - 1])
        yield f"{result.policy},{t},{mean},{std}\n"


def export_csv(out_dir, results, diagnostics=None) -> dict[str, Path]:
    """Write regret curves (per run and aggregated) and optional diagnostics.

    One pair of files per policy result, with fixed 9-decimal formatting
    and LF line endings so identical inputs always produce identical
    bytes. ``diagnostics`` is a mapping of metric name to value.
    Returns the written paths keyed by file name.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    for result in results:
        runs_path = out_dir / f"regret_runs_{result.policy}.csv"
        _write_text(runs_path, _runs_csv_rows(result))
        written[runs_path.name] = runs_path

        aggregate_path = out_dir / f"regret_aggregate_{result.policy}.csv"
        _write_text(aggregate_path, _aggregate_csv_rows(result))
        written[aggregate_path.name] = aggregate_path

    if diagnostics is not None:
        diag_path = out_dir / "diagnostics.csv"
        rows = ["metric,value\n"]
        rows.extend(f"{key},{_format_value(float(value))}\n" for key, value in diagnostics.items())
        _write_text(diag_path, rows)
        written[diag_path.name] = diag_path
    return written
