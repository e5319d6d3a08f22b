"""Throughput-optimal broadcast scheduling on wireless DAGs.

Exact rational broadcast-capacity computation over link activations and
cuts, the max-weight deficit policy and its tree-based and randomized
baselines, and a deterministic slot simulator with compiled and pure
numpy backends.
"""

from .netmodel import (
    Arborescence,
    CyclicGraph,
    Edge,
    Network,
    NetworkError,
    NotConnected,
    NotDag,
    NotUnitCapacity,
    ProperCut,
    SizeLimit,
    SourceHasInEdges,
    TooManyNodes,
    enumerate_arborescences,
    enumerate_proper_cuts,
    is_arborescence,
    make_cut,
    max_disjoint_trees_bruteforce,
    network,
    receiver_cuts,
    validate_dag,
)
from .interference import (
    ActivationSet,
    ActivationVector,
    EmptyActivationSet,
    InvalidExplicitVector,
    TooManyActivations,
    activation_value,
    build_activation_set,
    max_weight_activation,
)
from .exactlp import Infeasible, Unbounded, solve_max
from .capacity import (
    CapacityReport,
    InvalidTree,
    best_tree_subsets,
    compute_capacity,
    compute_tree_capacity,
    cut_value,
    disjoint_tree_count,
    frac_str,
)
from .policies import (
    DeficitView,
    PistarPolicy,
    PolicyDecision,
    RandPolicy,
    RateTooHigh,
    SystemState,
    TreePolicy,
    TreeState,
    compute_deficits,
    decision_ranges,
    initial_state,
    pirand_build,
    pirand_step,
    pistar_decide,
    pistar_update,
    pitree_admit,
    pitree_decide,
    pitree_forward,
    tree_initial_state,
)
from .scenarios import (
    BUILTIN_NAMES,
    ParseError,
    Scenario,
    UnknownScenario,
    ValidationError,
    builtin,
    load_scenario,
    resolve,
    resolve_trees,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
)
from .simengine import (
    RunMetrics,
    TraceData,
    Unreachable,
    check_idle_link,
    check_trace,
    construct_path,
    deficit_series,
    draw_arrivals,
    packets_to_csv,
    resolve_backend,
    run,
    stability_slope_test,
    telescoping_check,
    trace_from_csv,
    trace_to_csv,
)

__version__ = "0.1.0"
