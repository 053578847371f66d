"""Open billiards in R^n among spheres and ellipsoids.

Periodic orbits, the largest Lyapunov exponent from the curvature of
convex fronts, and how that exponent moves under smooth deformations of
the obstacles.
"""

from .deformation import DeformationFamily, DeformationRule
from .dynamics import PhaseState, Trajectory, billiard_step, reflect, trace
from .errors import (ConfigError, DomainError, EscapeError, GrazingError, NumericalError,
                     OracleError, SolverError)
from .geometry import Obstacle, ellipsoid, outward_normal, ray_intersect, shape_operator, sphere
from .lyapunov import (benettin_oracle, continuity_modulus, derivative_study, estimate_lambda1,
                       lambda1_bracket, per_bounce_derivative, sweep_alpha)
from .orbits import PeriodicOrbit, find_periodic_orbit, length_functional, refine_orbit
from .scene import Scene, SceneBounds, check_no_eclipse, geometric_bounds

__version__ = "0.1.0"

__all__ = [
    "DeformationFamily", "DeformationRule", "PhaseState", "Trajectory", "billiard_step", "reflect",
    "trace", "ConfigError", "DomainError", "EscapeError", "GrazingError", "NumericalError",
    "OracleError", "SolverError", "Obstacle", "ellipsoid", "outward_normal", "ray_intersect",
    "shape_operator", "sphere", "benettin_oracle", "continuity_modulus", "derivative_study",
    "estimate_lambda1", "lambda1_bracket", "per_bounce_derivative", "sweep_alpha", "PeriodicOrbit",
    "find_periodic_orbit", "length_functional", "refine_orbit", "Scene", "SceneBounds",
    "check_no_eclipse", "geometric_bounds",
]
