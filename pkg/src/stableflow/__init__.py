"""Stable flows on networks with monotone piecewise-linear vertex mappings."""

from .model import (
    Capacity,
    Edge,
    EdgeKey,
    Flow,
    FlowCheck,
    INFINITE,
    ModelError,
    Network,
    PLMapping,
    Rational,
    as_capacity,
    as_rational,
    check_flow,
    flow_in,
    flow_out,
    flow_value,
    zero_flow,
)
from .stability import (
    BlockingPath,
    Germ,
    StabilityReport,
    default_max_len,
    find_blocking_path,
    is_stable,
)
from .reduction import (
    Reduction,
    find_cycle,
    is_acyclic,
    pullback_flow,
    to_acyclic,
    to_single_segment,
)
from .scarf import (
    LayeredTranslation,
    ScarfInstance,
    build_scarf,
    dominating_row,
    edge_col,
    feasibility_violations,
    flow_to_scarf,
    layered_flow_to_scarf,
    scarf_to_flow,
    scarf_to_layered_flow,
    scarf_to_network,
    slack_col,
    undominated_columns,
    vertex_bound,
)
from .solver import (
    AugmentPlan,
    SolveResult,
    SolverError,
    SolverState,
    find_walk,
    init_state,
    plan_cycle,
    plan_path,
    run,
    run_state,
    snapshot_state,
    step,
)
from .pipeline import PipelineReport, ProbeReport, complexity_probe, solve

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
