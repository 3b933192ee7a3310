"""
Farthest-distance bounds and estimators over intersections of Euclidean balls.

The largest distance from a reference point ``C0`` to ``Q = cap_k B(C_k, r_k)``
is bracketed by a difference-of-convex minimisation, tracked through a
two-sided sequence of ball intersections and estimated by seeded Monte Carlo.
"""

__version__ = "0.1.0"

from .errors import BallmaxError  # noqa: E402
from .geometry import Ball, BallSet, Instance, h_value, g_value, qset_at  # noqa: E402
from .dc_solver import SolverOpts, DcSolution, minimize_dc  # noqa: E402
from .classifier import Classification, classify, certify_interval  # noqa: E402
from .sequence import element_at, procedure_a  # noqa: E402
from .estimator import procedure_b, procedure_b_from, volume_bisect  # noqa: E402
from .oracle2d import farthest_2d  # noqa: E402

__all__ = [
    "BallmaxError", "Ball", "BallSet", "Instance", "h_value", "g_value", "qset_at",
    "SolverOpts", "DcSolution", "minimize_dc", "Classification", "classify", "certify_interval",
    "element_at", "procedure_a", "procedure_b", "procedure_b_from", "volume_bisect", "farthest_2d",
]
