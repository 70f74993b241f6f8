"""Matplotlib renderers for the report path; every figure goes to a file."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_POLICY_LABELS = {
    "a2c_ucb": "A2C-UCB (cooperative)",
    "ucb1_nocomm": "UCB1 (no communication)",
}


def _label(policy: str) -> str:
    return _POLICY_LABELS.get(policy, policy)


def save_network_regret_figure(results, path) -> Path:
    """Mean network cumulative regret per policy with a 2-standard-error band."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for result in results:
        t = np.arange(1, result.horizon + 1)
        mean = result.mean_network_regret
        stderr = result.std_network_regret / np.sqrt(result.runs)
        ax.plot(t, mean, label=_label(result.policy))
        ax.fill_between(t, mean - 2 * stderr, mean + 2 * stderr, alpha=0.2)
    ax.set_xlabel("round")
    ax.set_ylabel("network cumulative regret")
    ax.set_title("Network regret (mean over runs, ±2 SE)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_per_agent_regret_figure(result, path) -> Path:
    """Mean cumulative regret per agent for one policy."""
    path = Path(path)
    mean_per_agent = result.per_run_agent_regret.mean(axis=0)
    t = np.arange(1, result.horizon + 1)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for agent in range(mean_per_agent.shape[0]):
        ax.plot(t, mean_per_agent[agent], label=f"agent {agent + 1}")
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative regret")
    ax.set_title(f"Per-agent regret, {_label(result.policy)}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_generation_mass_error_figure(times, errors, rate, path) -> Path:
    """Generation-mass tracking error envelope against the measured mixing rate."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    positive = errors > 0
    ax.semilogy(times[positive], errors[positive], label="max |g_hat - g|")
    if positive.any():
        t0 = times[positive][0]
        guide = errors[positive][0] * rate ** (times[positive] - t0).astype(float)
        ax.semilogy(times[positive], guide, "--", label=f"rate {rate:.3f} guide")
    ax.set_xlabel("round")
    ax.set_ylabel("error")
    ax.set_title("Generation-mass estimate convergence")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_tracking_error_figure(times, max_errors, path) -> Path:
    """Worst agent-vs-network mean tracking error over time."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(times, max_errors)
    ax.set_xlabel("round")
    ax.set_ylabel("max |mu_hat - mu_bar|")
    ax.set_title("Consensus mean tracking error")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
