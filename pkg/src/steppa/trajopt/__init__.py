"""Transition trajectory optimisation on a point-mass model with point feet."""

from .problem import TOConfig, TransitionError, TransitionProblem, build_problem, friction_generators
from .sdf import MeshObstacle, SphereObstacle
from .solver import (
    Solution,
    SolveStatus,
    initial_guess,
    linear_model,
    objective_and_gradient,
    objective_terms,
    residuals,
    solve,
)


def solve_transition(source, dest, scene, config: TOConfig | None = None) -> Solution:
    return solve(build_problem(source, dest, scene, config))
