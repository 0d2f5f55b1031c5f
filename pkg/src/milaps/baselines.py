"""Utility-greedy D-ETS baselines: one-step (UGreedy-1) and lookahead (UGreedy-A)."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .geometry import Region
from .gspt import build_instance, objective
from .milaps import MilapsResult, assemble_route
from .model import EtsProblem, region_mass
from .placement import GuardSet
from .weights import WeightAssignment, greedy_key, step_costs_from


@dataclass
class GreedyState:
    """Partial route with the target mass each remaining guard would still reveal."""

    order: list[int]
    residual: dict[int, Region]
    mass: dict[int, float]
    time: float = 0.0
    partial_et: float = 0.0
    found: float = 0.0

    @property
    def remaining(self) -> list[int]:
        return sorted(self.residual)


def _initial_state(problem: EtsProblem, gs: GuardSet, start: int) -> GreedyState:
    base = gs.vis_regions[start]
    found = region_mass(problem.targets, base) / problem.targets.total_mass
    residual, mass = {}, {}
    for v in range(len(gs)):
        if v == start:
            continue
        r = gs.vis_regions[v] - base
        residual[v] = r
        mass[v] = region_mass(problem.targets, r)
    return GreedyState([start], residual, mass, found=found)


def _advance(problem: EtsProblem, gs: GuardSet, inst, s: GreedyState, v: int, cost: float) -> GreedyState:
    seen = gs.vis_regions[v]
    residual, mass = {}, {}
    for u, r in s.residual.items():
        if u == v:
            continue
        if not r.is_empty and r.geom.intersects(seen.geom):
            r = r - seen
            mass[u] = region_mass(problem.targets, r)
        else:
            mass[u] = s.mass[u]
        residual[u] = r
    t = s.time + cost
    p = s.mass[v] / problem.targets.total_mass
    return GreedyState(s.order + [v], residual, mass, t, s.partial_et + t * p, s.found + p)


def _ranked(inst, s: GreedyState) -> list[tuple[int, float]]:
    """Remaining guards with their step cost, best utility first (ties to lower index)."""
    cand = np.asarray(s.remaining)
    cost = step_costs_from(inst, s.order, cand)
    keyed = sorted(zip(cand, cost), key=lambda vc: (greedy_key(s.mass[int(vc[0])], vc[1]), -vc[0]), reverse=True)
    return [(int(v), float(c)) for v, c in keyed]


def _leaf_value(problem, s: GreedyState) -> float:
    return s.partial_et + s.time * max(0.0, 1.0 - s.found)


def _lookahead(problem, gs, inst, s: GreedyState, depth: int, beam: int) -> tuple[float, int]:
    best = (math.inf, -1)
    for v, c in _ranked(inst, s)[:beam]:
        child = _advance(problem, gs, inst, s, v, c)
        if depth > 1 and child.residual:
            val, _ = _lookahead(problem, gs, inst, child, depth - 1, beam)
        else:
            val = _leaf_value(problem, child)
        if val < best[0]:
            best = (val, v)
    return best


def lookahead_depth(branching: int, budget: int) -> int:
    """Largest depth whose full tree with this branching fits in ``budget`` nodes."""
    if branching <= 1:
        return 1
    d = 0
    while branching ** (d + 1) <= budget:
        d += 1
    return max(1, d)


def _run(problem: EtsProblem, gs: GuardSet, matrix, t_max: float | None, beam: int, budget: int) -> MilapsResult:
    t0 = time.perf_counter()
    inst = build_instance(gs.guards, matrix, problem.time_model, problem.start_heading)
    s = _initial_state(problem, gs, inst.start)
    while s.residual:
        if len(s.residual) == 1:
            (v, c), = _ranked(inst, s)
        else:
            b = min(beam, budget, len(s.residual))
            if b <= 1:
                v, c = _ranked(inst, s)[0]
            else:
                _, v = _lookahead(problem, gs, inst, s, min(lookahead_depth(b, budget), len(s.residual)), b)
                c = dict(_ranked(inst, s))[v]
        s = _advance(problem, gs, inst, s, v, c)
    perm = np.asarray(s.order, dtype=int)
    elapsed = time.perf_counter() - t0
    n = len(gs)
    return MilapsResult(
        perms=[perm],
        times=[elapsed],
        gspt_costs=[objective(inst, perm)],
        routes=[assemble_route(matrix, perm)],
        best=0,
        inst=inst,
        weights=WeightAssignment("Const", np.ones(n), tuple(Region.empty() for _ in range(n))),
        elapsed=elapsed,
        timeout=t_max is not None and elapsed > 2 * t_max,
    )


def ugreedy1(problem: EtsProblem, gs: GuardSet, matrix, t_max: float | None = None) -> MilapsResult:
    """Repeatedly move to the guard revealing the most new mass per unit of time."""
    return _run(problem, gs, matrix, t_max, beam=1, budget=1)


def ugreedyA(problem: EtsProblem, gs: GuardSet, matrix, node_budget: int = 64, beam: int = 4,
             t_max: float | None = None) -> MilapsResult:
    """Greedy with a beam-limited lookahead tree of about ``node_budget`` nodes.

    The depth adapts to the current branching factor ``min(beam, remaining)``;
    leaves are compared by the partial expected time plus the leaf time
    charged to all still-unseen mass.
    """
    if node_budget < 1:
        raise ValueError("node_budget must be positive")
    return _run(problem, gs, matrix, t_max, beam=beam, budget=node_budget)
