"""Collision-avoidance toolkit: safe waypoint projection onto generalized
Voronoi cells with set-membership estimation and a deterministic
multi-agent simulator."""

from .errors import (
    DimensionMismatchError,
    EmptySetError,
    InconsistentMeasurementError,
    NumericFailureError,
    ScenarioError,
    VoroprojError,
)
from .estimation import EstimateBank, Measurement, apply_margin, fuse, predict
from .geometry import (
    Ellipsoid,
    ObstacleRegion,
    Polyhedron,
    atom_distance,
    atom_membership,
    minkowski_bound,
    support_function,
)
from .projection import (
    INFEASIBLE,
    NUMERIC,
    UNSAFE,
    ProjectionProblem,
    ProjectionResult,
    build_problem,
    inflate_for_dynamics,
    solve_projection,
)
from .sim import AgentSpec, Scenario, TraceRecord, check_collisions, run
from .voronoi import CellSpec, DualConstraint, cell_membership, maximize_dual

__version__ = "0.1.0"

__all__ = [
    "AgentSpec",
    "CellSpec",
    "DimensionMismatchError",
    "DualConstraint",
    "Ellipsoid",
    "EmptySetError",
    "EstimateBank",
    "INFEASIBLE",
    "InconsistentMeasurementError",
    "Measurement",
    "NUMERIC",
    "NumericFailureError",
    "ObstacleRegion",
    "Polyhedron",
    "ProjectionProblem",
    "ProjectionResult",
    "Scenario",
    "ScenarioError",
    "TraceRecord",
    "UNSAFE",
    "VoroprojError",
    "apply_margin",
    "atom_distance",
    "atom_membership",
    "build_problem",
    "cell_membership",
    "check_collisions",
    "fuse",
    "inflate_for_dynamics",
    "maximize_dual",
    "minkowski_bound",
    "predict",
    "run",
    "solve_projection",
    "support_function",
]
