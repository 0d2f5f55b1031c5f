"""Static GSPT vertex weights and their weight-defining regions."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from shapely.geometry import Polygon

from .geometry import Point, Region
from .gspt import GsptInstance
from .model import TargetDistribution, region_mass
from .placement import GuardSet

WTYPES = ("Const", "Vis", "DisSplit", "DisMaxW", "DisGreedy")
WEIGHT_FLOOR = 1e-9


@dataclass(frozen=True, eq=False)
class WeightAssignment:
    wtype: str
    weights: np.ndarray
    regions: tuple[Region, ...]
    order: tuple[int, ...] | None = None

    def __len__(self):
        return len(self.weights)


def floor_weights(masses, total_mass: float) -> np.ndarray:
    """Clamp masses from below so that every GSPT weight stays positive."""
    return np.maximum(np.asarray(masses, dtype=float), WEIGHT_FLOOR * total_mass)


def region_weights(regions: Sequence[Region], targets: TargetDistribution) -> np.ndarray:
    return floor_weights([region_mass(targets, r) for r in regions], targets.total_mass)


def weights_const(n: int) -> WeightAssignment:
    return WeightAssignment("Const", np.ones(n), tuple(Region.empty() for _ in range(n)))


def weights_vis(gs: GuardSet, targets: TargetDistribution) -> WeightAssignment:
    """Each guard's view minus the start's view; overlaps between guards remain."""
    base = gs.vis_regions[0]
    regions = tuple(r - base for r in gs.vis_regions)
    return WeightAssignment("Vis", region_weights(regions, targets), regions)


def halfplane(u: Point, v: Point, bounds) -> Region:
    """Points at least as close to ``u`` as to ``v``, cut to a box around ``bounds``."""
    u, v = np.asarray(u, float), np.asarray(v, float)
    x0, y0, x1, y1 = bounds
    big = 2.0 * (math.hypot(x1 - x0, y1 - y0) + np.abs(np.concatenate([u, v])).max() + 1.0)
    diff = u - v
    norm = float(np.hypot(*diff))
    if norm == 0.0:
        return Region.empty()
    n = diff / norm
    t = np.array([-n[1], n[0]])
    m = (u + v) / 2
    pts = [m + big * t, m + big * t + big * n, m - big * t + big * n, m - big * t]
    return Region(Polygon(pts))


def weights_dissplit(gs: GuardSet, targets: TargetDistribution, order: Sequence[int] | None = None,
                     bounds=None) -> WeightAssignment:
    """Pairwise fair split of overlapping views along perpendicular bisectors."""
    n = len(gs)
    o = list(range(n)) if order is None else [int(k) for k in order]
    if sorted(o) != list(range(n)):
        raise ValueError("order must be a permutation of the guards")
    if bounds is None:
        bounds = _bounds(gs)
    X = list(gs.vis_regions)
    pts = gs.guards
    for a in range(n):
        u = o[a]
        for b in range(a + 1, n):
            v = o[b]
            if X[u].is_empty or X[v].is_empty or not X[u].geom.intersects(X[v].geom):
                continue
            X[u] = X[u] - (halfplane(pts[v], pts[u], bounds) & X[v])
            X[v] = X[v] - (halfplane(pts[u], pts[v], bounds) & X[u])
    return WeightAssignment("DisSplit", region_weights(X, targets), tuple(X), tuple(o))


def _bounds(gs: GuardSet):
    boxes = np.array([r.geom.bounds for r in gs.vis_regions if not r.is_empty] or [(0, 0, 1, 1)])
    return boxes[:, 0].min(), boxes[:, 1].min(), boxes[:, 2].max(), boxes[:, 3].max()


def greedy_key(mass: float, cost: float) -> tuple:
    """Sort key (larger is better) of the utility mass / cost.

    Candidates that reveal nothing rank below every candidate with positive
    mass and among themselves prefer the cheaper one.
    """
    if mass > 0:
        return (1, mass / max(cost, 1e-12))
    return (0, -cost)


def step_costs_from(inst: GsptInstance, order: Sequence[int], cand: np.ndarray) -> np.ndarray:
    """Turning plus travel cost of appending each candidate to a partial order."""
    prev = order[-1]
    cost = inst.d[prev, cand].copy()
    if len(order) == 1:
        cost += inst.start_cost[cand]
    elif inst.has_turning:
        k = len(cand)
        cost += inst.theta(np.full(k, order[-2]), np.full(k, prev), cand)
    return cost


def weights_dis_utility(inst: GsptInstance, gs: GuardSet, targets: TargetDistribution,
                        variant: str = "DisGreedy") -> WeightAssignment:
    """Disjoint regions from a greedy ordering by utility.

    ``DisMaxW`` picks the largest remaining mass, ``DisGreedy`` the largest
    mass per unit of travel and turning time from the previous pick.
    """
    if variant not in ("DisMaxW", "DisGreedy"):
        raise ValueError(f"unknown utility variant {variant!r}")
    n = len(gs)
    s = inst.start
    X = list(gs.vis_regions)
    for v in range(n):
        if v != s:
            X[v] = X[v] - X[s]
    mass = np.array([region_mass(targets, r) for r in X])
    order = [s]
    left = [v for v in range(n) if v != s]
    while left:
        cand = np.asarray(left)
        if variant == "DisMaxW":
            keys = [(1, mass[v]) if mass[v] > 0 else (0, 0.0) for v in cand]
        else:
            cost = step_costs_from(inst, order, cand)
            keys = [greedy_key(mass[v], c) for v, c in zip(cand, cost)]
        best = max(range(len(cand)), key=lambda k: (keys[k], -cand[k]))
        pick = int(cand[best])
        order.append(pick)
        left.remove(pick)
        xp = X[pick]
        if xp.is_empty:
            continue
        for v in left:
            if not X[v].is_empty and X[v].geom.intersects(xp.geom):
                X[v] = X[v] - xp
                mass[v] = region_mass(targets, X[v])
    return WeightAssignment(variant, region_weights(X, targets), tuple(X), tuple(order))


def assign_weights(wtype: str, inst: GsptInstance, gs: GuardSet, targets: TargetDistribution) -> WeightAssignment:
    if wtype == "Const":
        return weights_const(len(gs))
    if wtype == "Vis":
        return weights_vis(gs, targets)
    if wtype == "DisSplit":
        return weights_dissplit(gs, targets)
    if wtype in ("DisMaxW", "DisGreedy"):
        return weights_dis_utility(inst, gs, targets, wtype)
    raise ValueError(f"unknown weight type {wtype!r}; expected one of {WTYPES}")
