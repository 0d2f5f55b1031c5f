"""Estimator-style wrappers around the planning pipeline.

The planners follow the familiar ``fit`` / ``get_params`` / ``set_params``
protocol: hyperparameters are constructor arguments, ``fit`` takes a problem
and stores results in attributes with a trailing underscore.
"""
from __future__ import annotations

import math
import numbers

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .geometry import shortest_path_matrix
from .milaps import MethodError, parse_method, solve_ets
from .model import EtsProblem
from .placement import METHODS, GuardSet, guard_metrics, place_guards


def check_problem(problem) -> EtsProblem:
    if not isinstance(problem, EtsProblem):
        raise TypeError(f"expected an EtsProblem, got {type(problem).__name__}")
    return problem


def check_positive(value, name: str, allow_none: bool = False):
    if value is None and allow_none:
        return None
    if not isinstance(value, numbers.Real) or not math.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_placement_method(method: str) -> str:
    if method not in METHODS:
        raise ValueError(f"placement method must be one of {METHODS}, got {method!r}")
    return method


def check_method(method: str):
    try:
        return parse_method(method)
    except MethodError as exc:
        raise ValueError(str(exc)) from exc


def check_guards(problem: EtsProblem, guards) -> GuardSet | None:
    if guards is None or isinstance(guards, GuardSet):
        return guards
    pts = np.asarray(guards, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
        raise ValueError("guards must be an (n, 2) array of points")
    if not np.allclose(pts[0], problem.start):
        raise ValueError("the first guard must be the start configuration")
    return GuardSet.from_points(problem, pts)


class GuardPlacer(BaseEstimator):
    """Place guards covering ``1 - epsilon`` of the target mass.

    Attributes after ``fit``: ``guard_set_``, ``guards_`` (array of points),
    ``n_guards_`` and ``overlap_``.
    """

    def __init__(self, method: str = "ReflexGreedy", seed: int = 0):
        self.method = method
        self.seed = seed

    def fit(self, problem, y=None):
        problem = check_problem(problem)
        check_placement_method(self.method)
        self.guard_set_ = place_guards(problem, self.method, self.seed)
        self.guards_ = self.guard_set_.points
        self.n_guards_, self.overlap_ = guard_metrics(self.guard_set_)
        return self


class SearchPlanner(BaseEstimator):
    """Plan a search route with any named method (Milaps variants or greedy baselines).

    ``t_max`` defaults to a tenth of a second per guard. After ``fit`` the
    planner exposes ``route_``, ``perm_``, ``et_``, ``covered_prob_``,
    ``trace_`` (time and GSPT objective of each recorded solution) and the full
    ``report_``.
    """

    def __init__(self, method: str = "Milaps-DisGreedy", t_max: float | None = None, seed: int = 0,
                 virtual_time: bool = False, placement: str = "ReflexGreedy", objective: str = "ETS"):
        self.method = method
        self.t_max = t_max
        self.seed = seed
        self.virtual_time = virtual_time
        self.placement = placement
        self.objective = objective

    def fit(self, problem, guards=None):
        problem = check_problem(problem)
        config = check_method(self.method)
        t_max = check_positive(self.t_max, "t_max", allow_none=True)
        check_placement_method(self.placement)
        if self.objective not in ("ETS", "D-ETS"):
            raise ValueError("objective must be 'ETS' or 'D-ETS'")
        gs = check_guards(problem, guards)
        if gs is None:
            gs = place_guards(problem, self.placement, self.seed)
        matrix = shortest_path_matrix(problem.env, gs.guards)
        rep = solve_ets(problem, config, seed=self.seed, t_max=t_max, virtual_time=self.virtual_time,
                        guards=gs, matrix=matrix, objective=self.objective)
        self.report_ = rep
        self.guard_set_ = gs
        self.route_ = rep.route
        self.perm_ = np.asarray(rep.result.perm)
        self.et_ = rep.et
        self.covered_prob_ = rep.covered_prob
        self.trace_ = np.column_stack([rep.result.times, rep.result.gspt_costs])
        return self

    def score(self, problem=None, y=None) -> float:
        """Negative expected time of the fitted route (higher is better)."""
        check_is_fitted(self, "et_")
        return -self.et_
