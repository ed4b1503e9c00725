"""Discrete-time isoholonomic optimal control of the planar Purcell swimmer."""

from . import se2
from .errors import (
    Diverged,
    FixedPointDiverged,
    InjectivityRadius,
    ShapeOutOfDomain,
    Singular,
    SingularJacobian,
)
from .integrator import DiscretizationParams, StateTrajectory, cost, holonomy, rollout, step
from .pmp import Costates, PMPReport, pmp_residuals
from .solver import ProblemSpec, Solution, SolverConfig, solve, solve_direct, solve_shooting, verify
from .swimmer import SwimmerGeometry, connection, drag_assembly

__all__ = [
    "se2",
    "Diverged",
    "FixedPointDiverged",
    "InjectivityRadius",
    "ShapeOutOfDomain",
    "Singular",
    "SingularJacobian",
    "DiscretizationParams",
    "StateTrajectory",
    "cost",
    "holonomy",
    "rollout",
    "step",
    "Costates",
    "PMPReport",
    "pmp_residuals",
    "ProblemSpec",
    "Solution",
    "SolverConfig",
    "solve",
    "solve_direct",
    "solve_shooting",
    "verify",
    "SwimmerGeometry",
    "connection",
    "drag_assembly",
]
