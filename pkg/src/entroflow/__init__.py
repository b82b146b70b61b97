"""Solver for conserved phase separation coupled to an entropy balance.

The temperature equation is written for the logarithm of the temperature,
the phase equation is a viscous Cahn-Hilliard equation with a convex
potential given by a maximal monotone graph.  Both are regularized
(Yosida approximation of the graph and of the logarithm), discretized by
lumped P1 finite elements in 1D and advanced by an implicit scheme whose
steps are solved by a contraction fixed point.
"""

from ._backend import BACKEND
from .discretization import Mesh
from .errors import (ConfigError, EntroflowError, InvariantViolation, PreconditionError,
                     SolverFailure, StepFailure)
from .graphs import GraphSpec, LatentHeat
from .model import BoundaryAndData, PhysParams, State
from .stepper import Problem, StepReport, Trajectory, advance, run, step_guard

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Mesh", "GraphSpec", "LatentHeat", "PhysParams", "BoundaryAndData", "State",
    "Problem", "StepReport", "Trajectory", "advance", "run", "step_guard",
    "EntroflowError", "SolverFailure", "StepFailure", "InvariantViolation",
    "PreconditionError", "ConfigError",
]
