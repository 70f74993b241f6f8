"""Directed communication topology, mixing weights, and spectral diagnostics.

Agents are indexed ``0 .. num_agents-1``. An edge ``(j, i)`` means agent
``i`` receives from agent ``j``. Every agent implicitly listens to itself:
self-loops are always assumed and never stored in the edge set or counted
in the neighbor sets.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidEdge, NoConvergence, NotStronglyConnected


@dataclass(frozen=True)
class DirectedGraph:
    """Agent set plus directed communication edges (sender, receiver)."""

    num_agents: int
    edges: frozenset
    certified: bool = False

    def __post_init__(self):
        # Dedupe and strip self-loops; they are implicit everywhere.
        cleaned = frozenset((int(j), int(i)) for j, i in self.edges if int(j) != int(i))
        object.__setattr__(self, "edges", cleaned)

    @classmethod
    def from_edge_list(cls, num_agents, edges) -> "DirectedGraph":
        return cls(num_agents=int(num_agents), edges=frozenset(tuple(e) for e in edges))

    def out_neighbors(self, agent: int) -> list[int]:
        return sorted(i for j, i in self.edges if j == agent)

    def in_neighbors(self, agent: int) -> list[int]:
        return sorted(j for j, i in self.edges if i == agent)

    def out_degree(self, agent: int) -> int:
        return sum(1 for j, _ in self.edges if j == agent)

    def out_degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_agents, dtype=int)
        for j, _ in self.edges:
            deg[j] += 1
        return deg


@dataclass(frozen=True)
class WeightMatrix:
    """Column-stochastic mixing matrix.

    ``entries[i, j]`` is the share of sender ``j``'s state taken by
    receiver ``i``; each sender splits its state evenly over its
    out-neighbors and itself, so every column sums to one and the
    network-wide total of any mixed quantity is preserved.
    """

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def num_agents(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class MixingDiagnostics:
    """Spectral summary of a mixing matrix.

    ``perron_vector`` is the positive right eigenvector of the weight
    matrix at eigenvalue one, normalized to sum to one. On the zero-sum
    (disagreement) subspace the matrix contracts: ``contraction_rate``
    (rho) and ``contraction_coefficient`` (sigma) satisfy
    ``||P^t x||_inf <= sigma * rho^t * ||x||_inf`` for zero-sum ``x``
    over the measured horizon. ``consensus_error_bound`` (c_P) is the
    resulting uniform bound ``sigma * ||I - phi 1^T||_inf / (1 - rho)``
    on how far any agent's running estimate can drift from the
    Perron-weighted network aggregate; it is 0 for a single agent.
    """

    perron_vector: np.ndarray
    contraction_rate: float
    contraction_coefficient: float
    consensus_error_bound: float


def validate_graph(graph: DirectedGraph) -> DirectedGraph:
    """Certify that every agent can reach every other agent.

    Returns a copy of the graph carrying the certificate. A single agent
    with no edges is vacuously strongly connected.

    Raises
    ------
    InvalidEdge
        If an edge endpoint lies outside ``0 .. num_agents-1``.
    NotStronglyConnected
        With a witness pair ``(source, destination)`` that has no
        directed path.
    """
    n = graph.num_agents
    if n < 1:
        raise ValueError(f"graph needs at least one agent, got {n}")
    for j, i in graph.edges:
        if not (0 <= j < n and 0 <= i < n):
            raise InvalidEdge(f"edge ({j}, {i}) is outside agents 0..{n - 1}")

    succ = [[] for _ in range(n)]
    for j, i in graph.edges:
        succ[j].append(i)

    for src in range(n):
        seen = {src}
        stack = [src]
        while stack:
            node = stack.pop()
            for nxt in succ[node]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if len(seen) < n:
            dst = min(set(range(n)) - seen)
            raise NotStronglyConnected(
                f"not strongly connected: no directed path from agent {src} to agent {dst}",
                unreachable=(src, dst),
            )
    return replace(graph, certified=True)


def build_weight_matrix(graph: DirectedGraph) -> WeightMatrix:
    """Build the column-stochastic mixing matrix from out-degrees.

    Sender ``j`` weights everything it shares (including the share it
    keeps for itself) by ``1 / (1 + out_degree(j))``.
    """
    if not graph.certified:
        raise ValueError("graph must be certified by validate_graph() first")
    n = graph.num_agents
    deg = graph.out_degrees()
    entries = np.zeros((n, n))
    for j in range(n):
        entries[j, j] = 1.0 / (1.0 + deg[j])
    for j, i in graph.edges:
        entries[i, j] = 1.0 / (1.0 + deg[j])
    return WeightMatrix(entries)


def mixing_diagnostics(
    weights: WeightMatrix,
    horizon: int = 50,
    *,
    power_tol: float = 1e-13,
    max_power_iter: int = 200_000,
) -> MixingDiagnostics:
    """Measure the Perron vector and disagreement contraction of ``weights``.

    The Perron vector comes from power iteration (residual below
    ``power_tol`` in max norm). The contraction rate rho is the
    second-largest eigenvalue modulus, clipped into (0, 1). The
    prefactor sigma is the smallest constant such that the operator norm
    of ``P^t - phi 1^T`` stays below ``sigma * rho^t`` for ``t`` up to
    ``horizon``, which bounds ``||P^t x||_inf`` for every zero-sum ``x``,
    not just sampled ones.

    Raises ``NoConvergence`` if power iteration misses ``power_tol``
    within ``max_power_iter`` steps.
    """
    entries = weights.entries
    n = entries.shape[0]

    phi = np.full(n, 1.0 / n)
    residual = np.abs(entries @ phi - phi).max()
    iterations = 0
    while residual > power_tol:
        if iterations >= max_power_iter:
            raise NoConvergence(
                f"power iteration residual {residual:.3e} above {power_tol:.1e} "
                f"after {max_power_iter} steps"
            )
        phi = entries @ phi
        phi /= phi.sum()
        residual = np.abs(entries @ phi - phi).max()
        iterations += 1

    eigenvalues = np.linalg.eigvals(entries)
    perron_idx = int(np.argmin(np.abs(eigenvalues - 1.0)))
    rest = np.delete(eigenvalues, perron_idx)
    rho_raw = float(np.abs(rest).max()) if rest.size else 0.0
    rho = min(max(rho_raw, 1e-6), 1.0 - 1e-12)

    deviation = np.eye(n) - np.outer(phi, np.ones(n))
    # ||P^t - phi 1^T||_inf decays at rate rho; sigma is the worst prefactor
    # seen before the sequence hits numerical floor.
    sigma = 1.0
    disagreement_op = entries - np.outer(phi, np.ones(n))
    power = np.eye(n)
    for t in range(1, horizon + 1):
        power = disagreement_op @ power
        norm_t = float(np.abs(power).sum(axis=1).max())
        if norm_t < 1e-13:
            break
        sigma = max(sigma, norm_t / rho**t)

    deviation_norm = float(np.abs(deviation).sum(axis=1).max())
    error_bound = sigma * deviation_norm / (1.0 - rho)

    phi = phi.copy()
    phi.setflags(write=False)
    return MixingDiagnostics(
        perron_vector=phi,
        contraction_rate=rho,
        contraction_coefficient=sigma,
        consensus_error_bound=error_bound,
    )
