"""QoS-aware 3D placement of UAV base stations.

2D coverage placement with a genetic algorithm or a baseline, then altitudes
from the path-loss-optimal elevation angle.
"""
__version__ = "0.1.0"

from .channel import ChannelConfig, Environment, environment, max_radius, path_loss, theta_max
from .errors import InfeasibleModelError, NoOptimalAngleError, ValidationError
from .ga import GaParams, run as run_ga
from .placement import Placement, Solution, assign, exact_small_solver
from .scenario import Scenario, generate, perturb_locations

__all__ = [
    "ChannelConfig", "Environment", "environment", "max_radius", "path_loss", "theta_max",
    "InfeasibleModelError", "NoOptimalAngleError", "ValidationError",
    "GaParams", "run_ga", "Placement", "Solution", "assign", "exact_small_solver",
    "Scenario", "generate", "perturb_locations",
]
