"""Expected-time mobile search planning over guard sets."""
from .estimators import GuardPlacer, SearchPlanner
from .geometry import PolygonalEnvironment, Region, shortest_path_matrix, visibility_region
from .gspt import GsptInstance, build_instance, objective
from .milaps import milaps_replan_solve, milaps_solve, parse_method, replan_schedule, solve_ets
from .model import EtsProblem, TargetDistribution, TravelTimeModel, evaluate_et
from .placement import GuardSet, guard_metrics, place_guards
from .solver import ms_gvns

__version__ = "0.1.0"

__all__ = [
    "EtsProblem",
    "GsptInstance",
    "GuardPlacer",
    "GuardSet",
    "PolygonalEnvironment",
    "Region",
    "SearchPlanner",
    "TargetDistribution",
    "TravelTimeModel",
    "build_instance",
    "evaluate_et",
    "guard_metrics",
    "milaps_replan_solve",
    "milaps_solve",
    "ms_gvns",
    "objective",
    "parse_method",
    "place_guards",
    "replan_schedule",
    "shortest_path_matrix",
    "solve_ets",
    "visibility_region",
]
