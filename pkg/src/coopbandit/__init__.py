"""Cooperative multi-agent bandits over directed networks with arm-access constraints.

A deterministic, seeded simulator and analysis library. Agents pull only
the arms they can access, exchange running mass-preserving consensus
statistics over a strongly connected digraph, and select arms with a
network-aware UCB index; a no-communication UCB1 baseline is included
for comparison.
"""

from .analysis import (
    ConservationAudit,
    RegretReport,
    TheoreticalBound,
    TrackingReport,
    compute_regret,
    conservation_audit,
    export_csv,
    theorem_bound,
    tracking_error_report,
)
from .consensus import (
    AgentConsensusState,
    ConsensusMessage,
    apply_round,
    estimates,
    init_state,
    outgoing_messages,
    synchronous_round,
)
from .engine import (
    MonteCarloResult,
    RoundLog,
    RunResult,
    SimConfig,
    Trajectory,
    config_from_dict,
    config_to_dict,
    load_config,
    prepare,
    run_monte_carlo,
    run_single,
)
from .environment import (
    AccessMatrix,
    ArmSet,
    Environment,
    GroundTruth,
    build_environment,
    pull,
    reward_from_uniform,
)
from .errors import (
    ConfigError,
    CoopBanditError,
    DimensionMismatch,
    InaccessibleArm,
    InvalidEdge,
    IsolatedAgent,
    MalformedInbox,
    NoConvergence,
    NotStronglyConnected,
    OrphanArm,
)
from .graph import (
    DirectedGraph,
    MixingDiagnostics,
    WeightMatrix,
    build_weight_matrix,
    mixing_diagnostics,
    validate_graph,
)
from .policy import (
    IndexBreakdown,
    LocalCounters,
    a2c_ucb_index,
    record_pull,
    select_arm_a2c,
    select_arm_ucb1,
)

__version__ = "0.1.0"
