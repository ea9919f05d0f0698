"""Energy accounting, energy-aware routing and dependency analysis for simulated sensor networks."""

from .energy import (
    CONSTITUENTS,
    ConstituentLedger,
    EdmFlowParams,
    EdmModel,
    RadioParams,
    RankDeficiencyError,
    apply_consumption,
    edm_fit,
    edm_flows,
    edm_predict,
    harvest,
    rx_energy,
    tx_energy,
)
from .network import UNREACHABLE, DeploymentConfig, NetworkGraph, Node, Position, build_graph, deploy_random
from .routing import DDTM, PDTM, CostMethod, RoutingTree, build_routing_tree, dijkstra
from .simulation import ExperimentRecord, SimConfig, compare_methods, run_experiment, run_timeslot

__version__ = "0.1.0"
