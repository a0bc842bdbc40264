"""Timing toolkit for periodic sensor-to-actuator pipelines: worst-case
end-to-end reaction/freshness analysis, budget and period synthesis, and a
deterministic scheduling simulator for validating the bounds."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    ChannelSpec,
    ConfigError,
    Pipe,
    PipetimeError,
    TaskGraph,
    TaskSpec,
    Terminal,
    TimingConstraint,
    aggregate_io_sizes,
    dump_config,
    load_config,
    load_config_file,
    validate_provisioned,
)
from .analysis import (  # noqa: F401
    AnalysisError,
    AnalysisResult,
    BoundaryWait,
    Mode,
    PriorityCase,
    chain_freshness,
    chain_reaction,
    pair_freshness,
    pair_reaction,
    pipe_latency,
    provisioned_latency,
    reaction_increment,
    sched_latency,
    transfer_time,
)
from .synthesis import (  # noqa: F401
    InfeasibleError,
    LinearInequality,
    SynthesisResult,
    compute_budgets,
    derive_inequalities,
    response_time_check,
    rms_bound_check,
    solve_periods,
)
from .simulator import (  # noqa: F401
    FourSlotRegister,
    ServerState,
    SimReport,
    SimulationError,
    measure,
    run,
    sporadic_replenish,
)
