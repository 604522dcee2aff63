"""Sleeping-model CONGEST simulator and awake-efficient MIS algorithms."""

from .engine import (
    Action,
    Bits,
    ExecutionTrace,
    Graph,
    NodeProgram,
    RunConfig,
    default_bit_budget,
    message_bits,
    run_simulation,
    worst_case_awake,
)
from .graphs import (
    IdAssignment,
    assign_random_ids,
    build_graph,
    default_id_bound,
    gen_gnp,
    gen_structured,
    random_connected,
)
from .vtree import CommTree, common_round, communication_set, tree_depth, wake_schedule
from .harness import (
    MisCheck,
    RunMetrics,
    check_mis,
    component_sizes,
    residual_sparsity_experiment,
    run_algorithm,
    scaling_study,
    sequential_lfmis,
    shattering_experiment,
)
from .mis import (
    AwakeMisParams,
    BatchAssignment,
    awake_mis,
    awake_mis_config,
    ldt_mis_round,
    luby_baseline,
    sample_batch,
    vt_mis,
)

__version__ = "0.1.0"
