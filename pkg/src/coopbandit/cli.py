"""Command-line interface: validate configs, run experiments, emit audits.

Exit codes: 0 on success, 2 for invalid configs (including violated
feasibility assumptions), 3 for runtime failures, 4 when a deterministic
audit fails under ``diagnose``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, engine, figures
from .errors import (
    ConfigError,
    CoopBanditError,
    DimensionMismatch,
    InvalidEdge,
    IsolatedAgent,
    NotStronglyConnected,
    OrphanArm,
)
from .graph import mixing_diagnostics

EXIT_OK = 0
EXIT_CONFIG_INVALID = 2
EXIT_RUNTIME_FAILURE = 3
EXIT_AUDIT_FAILURE = 4

_CONFIG_ERROR_TYPES = (
    ConfigError,
    InvalidEdge,
    NotStronglyConnected,
    OrphanArm,
    IsolatedAgent,
    DimensionMismatch,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coopbandit",
        description="Cooperative multi-agent bandit simulator over directed networks "
        "with per-agent arm-access constraints.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_out=True):
        p.add_argument("--config", required=True, help="path to a JSON experiment config")
        if with_out:
            p.add_argument("--out", required=True, help="output directory for CSVs and figures")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--horizon", type=int, default=None, help="override the round count")
        p.add_argument("--alpha", type=float, default=None, help="override the exploration constant")
        p.add_argument(
            "--trace-every", type=int, default=None, dest="trace_every",
            help="override the consensus snapshot period (0 disables)",
        )
        p.add_argument("--quiet", action="store_true", help="suppress the stdout summary")

    validate = sub.add_parser("validate", help="check a config against the feasibility assumptions")
    validate.add_argument("--config", required=True, help="path to a JSON experiment config")
    validate.add_argument("--quiet", action="store_true", help="suppress the stdout report")
    validate.set_defaults(func=cmd_validate)

    run = sub.add_parser("run", help="run seeded Monte Carlo batches and export regret curves")
    add_common(run)
    run.add_argument("--runs", type=int, default=None, help="override the Monte Carlo run count")
    run.add_argument(
        "--policy", choices=("a2c_ucb", "ucb1_nocomm", "both"), default=None,
        help="policy to run (or 'both' for a side-by-side comparison)",
    )
    run.add_argument(
        "--threads", type=int, default=max(1, os.cpu_count() or 1),
        help="worker threads for Monte Carlo runs",
    )
    run.set_defaults(func=cmd_run)

    diagnose = sub.add_parser(
        "diagnose", help="run one fully traced trajectory and audit conservation and tracking"
    )
    add_common(diagnose)
    diagnose.set_defaults(func=cmd_diagnose)
    return parser


def _effective_config(args, policy: str | None = None) -> engine.SimConfig:
    """Config file contents with CLI overrides applied, then re-validated."""
    raw = engine.config_to_dict(engine.load_config(args.config))
    for key in ("seed", "horizon", "alpha", "trace_every"):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    runs = getattr(args, "runs", None)
    if runs is not None:
        raw["runs"] = runs
    if policy is not None:
        raw["policy"] = policy
    return engine.config_from_dict(raw)


def cmd_validate(args) -> int:
    config = engine.load_config(args.config)
    graph, _, env = engine.prepare(config)
    if args.quiet:
        return EXIT_OK

    truth = env.ground_truth
    print(f"graph: {config.num_agents} agents, {len(graph.edges)} directed links, strongly connected")
    print(
        f"access: {config.num_agents} x {config.num_arms} matrix, every arm reachable, "
        "every agent has at least one arm"
    )
    print(f"generation mass per arm: {truth.generation_mass.tolist()}")
    print(f"best mean overall: {truth.global_opt_mean:.6f} (arm {truth.global_opt_arm + 1})")
    for agent in range(config.num_agents):
        arms = [int(a) + 1 for a in env.access.arms_for(agent)]
        gaps = {
            int(a) + 1: round(float(truth.gaps[agent, a]), 6) for a in env.access.arms_for(agent)
        }
        print(
            f"agent {agent + 1}: arms {arms}, best arm {int(truth.local_opt_arm[agent]) + 1} "
            f"(mean {truth.local_opt_mean[agent]:.6f}), gaps {gaps}"
        )
    return EXIT_OK


def _echo_config(out_dir: Path, config: engine.SimConfig) -> None:
    path = out_dir / f"effective_config_{config.policy}.json"
    path.write_text(json.dumps(engine.config_to_dict(config), indent=2) + "\n")


def cmd_run(args) -> int:
    base = engine.load_config(args.config)
    requested = args.policy or base.policy
    policies = list(engine.POLICIES) if requested == "both" else [requested]

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    results = []
    for policy in policies:
        config = _effective_config(args, policy=policy)
        _echo_config(out_dir, config)
        results.append(engine.run_monte_carlo(config, threads=args.threads))

    analysis.export_csv(out_dir, results)
    figures.save_network_regret_figure(results, out_dir / "network_regret.png")
    for result in results:
        figures.save_per_agent_regret_figure(
            result, out_dir / f"per_agent_regret_{result.policy}.png"
        )

    if not args.quiet:
        for result in results:
            print(
                f"{result.policy}: final network regret "
                f"{result.final_mean:.3f} +/- {result.final_std:.3f} "
                f"over {result.runs} runs (T={result.horizon})"
            )
        print(f"outputs written to {out_dir}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    config = _effective_config(args, policy="a2c_ucb")
    if config.trace_every < 1:
        raw = engine.config_to_dict(config)
        raw["trace_every"] = 1
        config = engine.config_from_dict(raw)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _echo_config(out_dir, config)

    _, weights, env = engine.prepare(config)
    diag = mixing_diagnostics(weights)
    result = engine.run_single(config, 0)
    trajectory = result.trajectory
    trace = trajectory.trace

    audit = analysis.conservation_audit(trace, trajectory.actions, trajectory.rewards, env)
    tracking = analysis.tracking_error_report(trace, diag.perron_vector, diag.consensus_error_bound)
    times, mass_err = analysis.generation_mass_error(
        trace, env.ground_truth.generation_mass, config.num_agents
    )
    mass_time = analysis.convergence_time(times, mass_err, 1e-6)
    mass_rate = analysis.fit_geometric_rate(times, mass_err)
    bound = analysis.theorem_bound(env, diag.consensus_error_bound, config.alpha, config.horizon)

    regret = result.regret
    rounds = np.arange(1, config.horizon + 1)
    per_round_constraint = regret.constraint_loss / config.horizon
    identity_dev = float(
        np.abs(
            regret.learnable_plus_constraint
            - (per_round_constraint * rounds + regret.network_regret)
        ).max()
    )
    identity_ok = identity_dev <= 1e-9

    diagnostics = {
        "conservation_max_reward_mass_dev": audit.max_reward_mass_dev,
        "conservation_max_pull_mass_dev": audit.max_pull_mass_dev,
        "conservation_max_normalizer_dev": audit.max_normalizer_dev,
        "conservation_max_access_mass_dev": audit.max_access_mass_dev,
        "conservation_passed": float(audit.passed),
        "tracking_checked": float(tracking.num_checked),
        "tracking_violations": float(tracking.num_violations),
        "tracking_min_margin": tracking.min_margin,
        "tracking_max_error": float(tracking.max_abs_error.max()),
        "contraction_rate": diag.contraction_rate,
        "contraction_coefficient": diag.contraction_coefficient,
        "consensus_error_bound": diag.consensus_error_bound,
        "generation_mass_convergence_time": float(-1 if mass_time is None else mass_time),
        "generation_mass_fitted_rate": mass_rate if not math.isnan(mass_rate) else float("nan"),
        "regret_identity_max_dev": identity_dev,
        "constraint_loss_per_round": per_round_constraint,
    }
    observed_final = regret.per_agent_regret[:, -1]
    for agent in range(config.num_agents):
        diagnostics[f"theorem_bound_agent_{agent + 1}"] = float(bound.per_agent_bound[agent])
        diagnostics[f"observed_regret_agent_{agent + 1}"] = float(observed_final[agent])
        diagnostics[f"theorem_margin_agent_{agent + 1}"] = float(
            bound.per_agent_bound[agent] - observed_final[agent]
        )

    analysis.export_csv(out_dir, [], diagnostics=diagnostics)
    figures.save_generation_mass_error_figure(
        times, mass_err, diag.contraction_rate, out_dir / "generation_mass_error.png"
    )
    track_times, track_err = analysis.tracking_error_series(trace, diag.perron_vector)
    figures.save_tracking_error_figure(track_times, track_err, out_dir / "tracking_error.png")

    passed = audit.passed and tracking.passed and identity_ok
    if not args.quiet:
        print(f"conservation audit: {'pass' if audit.passed else 'FAIL'}")
        print(
            f"  reward mass dev {audit.max_reward_mass_dev:.3e}, pull mass dev "
            f"{audit.max_pull_mass_dev:.3e}, normalizer dev {audit.max_normalizer_dev:.3e}, "
            f"access mass dev {audit.max_access_mass_dev:.3e}"
        )
        print(
            f"tracking audit: {'pass' if tracking.passed else 'FAIL'} "
            f"({tracking.num_violations} violations over {tracking.num_checked} checks)"
        )
        print(f"regret decomposition identity: {'pass' if identity_ok else 'FAIL'} "
              f"(max dev {identity_dev:.3e})")
        print(
            f"mixing: rate {diag.contraction_rate:.4f}, prefactor "
            f"{diag.contraction_coefficient:.4f}, error bound {diag.consensus_error_bound:.4f}"
        )
        conv = "never" if mass_time is None else str(mass_time)
        print(f"generation mass within 1e-6 from round {conv}; fitted decay rate {mass_rate:.4f}")
        print(f"outputs written to {out_dir}")
    if not passed:
        print("diagnose: at least one deterministic audit failed", file=sys.stderr)
        return EXIT_AUDIT_FAILURE
    return EXIT_OK


def _describe_config_error(exc) -> str:
    """User-facing wording with 1-based labels, matching config files."""
    if isinstance(exc, OrphanArm) and exc.arm is not None:
        return f"arm {exc.arm + 1} is accessible to no agent"
    if isinstance(exc, IsolatedAgent) and exc.agent is not None:
        return f"agent {exc.agent + 1} has no accessible arms"
    if isinstance(exc, NotStronglyConnected) and exc.unreachable is not None:
        src, dst = exc.unreachable
        return (
            "graph is not strongly connected: "
            f"no directed path from agent {src + 1} to agent {dst + 1}"
        )
    return str(exc)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERROR_TYPES as exc:
        print(f"invalid configuration: {_describe_config_error(exc)}", file=sys.stderr)
        return EXIT_CONFIG_INVALID
    except CoopBanditError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME_FAILURE
    except OSError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME_FAILURE


if __name__ == "__main__":
    sys.exit(main())
