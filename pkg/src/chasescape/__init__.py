"""Chase-escape dynamics on Gilbert random geometric graphs.

A malware infection starts at the origin of a Poisson ad-hoc network and
spreads to susceptible neighbors; white-knight nodes patch infected
neighbors and convert them, chasing the infection.  The package bundles
the event-driven simulator (compiled kernel with a pure-Python fallback),
closed-form analytics, exact chain/tree reference models, and replicated
sweep experiments.
"""

__version__ = "0.1.0"

from ._engine import BACKEND
from .analytics import (SpeedSolution, closed_node_prob, critical_speed,
                        expected_saw_count, local_survival_bounds,
                        open_node_lower_bound, reflection_decay, rho,
                        speed_constant, tree_critical_rate)
from .dynamics import (DynamicState, EventRecord, NodeState, OutcomeClass,
                       RateParams, SimOutcome, Simulator, StopPolicy,
                       StopReason, classify, init_state, run, run_recorded,
                       step)
from .errors import AbsorbedError, ParameterError, UnsupportedTopologyError
from .experiments import (LocalSurvivalResult, PercolationResult, SawRow,
                          SweepRow, SweepSpec, SweepTable,
                          connective_constant_experiment,
                          local_survival_experiment, percolation_consistency,
                          run_sweep)
from .geometry import (BoxSpec, ClusterReport, GilbertGraph, Mark,
                       PointConfiguration, SawCount, Topology, ball_volume,
                       build_gilbert, cluster_of, config_from_json,
                       config_to_json, configuration_from_points, count_saws,
                       estimate_theta, load_configuration, sample_configuration,
                       sample_ppp, save_configuration, thin_marks)
from .reference_models import (ChainConfig, TreeConfig, chain_reach_prob,
                               chain_survival_oracle, simulate_chain,
                               simulate_tree, simulate_tree_eager)
from .rng import derive_stream

__all__ = [
    "__version__", "BACKEND",
    # analytics
    "SpeedSolution", "closed_node_prob", "critical_speed", "expected_saw_count",
    "local_survival_bounds", "open_node_lower_bound", "reflection_decay", "rho",
    "speed_constant", "tree_critical_rate",
    # dynamics
    "DynamicState", "EventRecord", "NodeState", "OutcomeClass", "RateParams",
    "SimOutcome", "Simulator", "StopPolicy", "StopReason", "classify",
    "init_state", "run", "run_recorded", "step",
    # errors
    "AbsorbedError", "ParameterError", "UnsupportedTopologyError",
    # experiments
    "LocalSurvivalResult", "PercolationResult", "SawRow", "SweepRow",
    "SweepSpec", "SweepTable", "connective_constant_experiment",
    "local_survival_experiment", "percolation_consistency", "run_sweep",
    # geometry
    "BoxSpec", "ClusterReport", "GilbertGraph", "Mark", "PointConfiguration",
    "SawCount", "Topology", "ball_volume", "build_gilbert", "cluster_of",
    "config_from_json", "config_to_json", "configuration_from_points",
    "count_saws", "estimate_theta", "load_configuration", "sample_configuration",
    "sample_ppp", "save_configuration", "thin_marks",
    # reference models
    "ChainConfig", "TreeConfig", "chain_reach_prob", "chain_survival_oracle",
    "simulate_chain", "simulate_tree", "simulate_tree_eager",
    # rng
    "derive_stream",
]
