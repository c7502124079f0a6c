"""Foothold lattice, mode-transition graph, edge weights and A* search."""

from .experience import Converged, ExperienceStore, Failed, edge_key
from .graph import GraphConfig, GraphError, ModeGraph, build_graph, start_mode
from .lattice import FootholdLattice, LatticeError, build_lattice
from .pipeline import PlannerConfig, PlanningProblem, plan, prepare, torso_path
from .search import EdgeCosts, NoPath, edge_costs, search
from .types import (
    FEET,
    GAIT_ORDER,
    EdgeWeightTerms,
    FootId,
    Mode,
    ModeFamily,
    PlanResult,
    SearchStats,
    TorsoPath,
    TransitionEdge,
    nominal_stance,
)
from .weights import DEFAULT_LAMBDA, QUERY_WEIGHT, MaskContext, edge_weight, steppability_weight
