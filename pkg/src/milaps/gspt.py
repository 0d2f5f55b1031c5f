"""Graph search problem with turning: instances, latencies and the objective."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .geometry import PathEntry, turn_angle
from .model import TravelTimeModel


@dataclass(frozen=True, eq=False)
class GsptInstance:
    """Complete graph with vertex weights, start costs, travel costs and turning.

    Turning costs are never tabulated. ``theta(h, u, v)`` is derived from the
    arrival direction of the ``h -> u`` path and the departure direction of the
    ``u -> v`` path, both stored per pair as unit vectors.
    """

    d: np.ndarray
    w: np.ndarray
    start: int = 0
    start_cost: np.ndarray | None = None
    out_vec: np.ndarray | None = None
    in_vec: np.ndarray | None = None
    t_ang: float = 0.0
    symmetric: bool = True
    labels: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.w)
        d = np.asarray(self.d, dtype=float)
        if d.shape != (n, n):
            raise ValueError("cost matrix shape does not match the number of weights")
        w = np.asarray(self.w, dtype=float)
        if np.any(w <= 0):
            raise ValueError("vertex weights must be positive")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "w", w)
        sc = np.zeros(n) if self.start_cost is None else np.asarray(self.start_cost, dtype=float)
        object.__setattr__(self, "start_cost", sc)
        if self.labels is None:
            object.__setattr__(self, "labels", np.arange(n))
        if not 0 <= self.start < n:
            raise ValueError("start vertex out of range")

    @property
    def n(self) -> int:
        return len(self.w)

    @property
    def has_turning(self) -> bool:
        return self.t_ang > 0 and self.out_vec is not None

    @property
    def gsp(self) -> bool:
        return not np.any(self.start_cost) and not self.has_turning

    @property
    def tdp(self) -> bool:
        return self.gsp and bool(np.all(self.w == self.w[0]))

    def theta(self, h, u, v):
        """Turning cost at ``u`` on the way ``h -> u -> v`` (vectorized)."""
        if not self.has_turning:
            return np.zeros(np.broadcast(np.asarray(h), np.asarray(u), np.asarray(v)).shape)
        return self.t_ang * turn_angle(self.in_vec[h, u], self.out_vec[u, v])

    def with_weights(self, w) -> "GsptInstance":
        return replace(self, w=np.asarray(w, dtype=float))

    def without_turning(self) -> "GsptInstance":
        return replace(self, start_cost=np.zeros(self.n), t_ang=0.0)

    def subgraph(self, vertices: Sequence[int], start: int, w=None, start_cost=None) -> "GsptInstance":
        """Instance induced by ``vertices`` (local indices) with a new start vertex."""
        idx = np.asarray(vertices, dtype=int)
        pos = {int(v): k for k, v in enumerate(idx)}
        if start not in pos:
            raise ValueError("start vertex must belong to the subgraph")
        sub = np.ix_(idx, idx)
        return GsptInstance(
            d=self.d[sub],
            w=self.w[idx] if w is None else w,
            start=pos[start],
            start_cost=start_cost,
            out_vec=None if self.out_vec is None else self.out_vec[sub],
            in_vec=None if self.in_vec is None else self.in_vec[sub],
            t_ang=self.t_ang,
            symmetric=self.symmetric,
            labels=self.labels[idx],
        )

    def arrival_start_cost(self, prev: int, cur: int) -> np.ndarray:
        """Start costs for a sensor standing at ``cur`` having arrived from ``prev``."""
        v = np.arange(self.n)
        return self.theta(np.full(self.n, prev), np.full(self.n, cur), v)


def build_instance(guards, matrix: Sequence[Sequence[PathEntry]], tm: TravelTimeModel,
                   start_heading: float | None = None, w=None) -> GsptInstance:
    """GSPT instance over the guards; guard 0 is the start vertex."""
    n = len(matrix)
    if guards is not None and len(getattr(guards, "guards", guards)) != n:
        raise ValueError("matrix does not cover every guard")
    d = np.empty((n, n))
    out_vec = np.zeros((n, n, 2))
    in_vec = np.zeros((n, n, 2))
    for u in range(n):
        for v in range(n):
            e = matrix[u][v]
            d[u, v] = tm.t_lin * e.length + tm.t_ang * e.interior_turn
            out_vec[u, v] = e.out_vec
            in_vec[u, v] = e.in_vec
    sc = np.zeros(n)
    if start_heading is not None and tm.t_ang > 0:
        head = np.array([math.cos(start_heading), math.sin(start_heading)])
        sc = tm.t_ang * turn_angle(np.broadcast_to(head, (n, 2)), out_vec[0])
    return GsptInstance(
        d=d,
        w=np.ones(n) if w is None else w,
        start=0,
        start_cost=sc,
        out_vec=out_vec,
        in_vec=in_vec,
        t_ang=tm.t_ang,
        symmetric=True,
    )


def check_permutation(inst: GsptInstance, perm) -> np.ndarray:
    p = np.asarray(perm, dtype=int)
    if p.shape != (inst.n,) or p[0] != inst.start or len(np.unique(p)) != inst.n or p.min() < 0 or p.max() >= inst.n:
        raise ValueError("not a permutation of the vertices starting at the start vertex")
    return p


def step_costs(inst: GsptInstance, perm) -> np.ndarray:
    """Travel plus turning cost of each step of ``perm``; entry 0 is zero."""
    p = np.asarray(perm, dtype=int)
    xi = np.zeros(len(p))
    if len(p) < 2:
        return xi
    xi[1:] = inst.d[p[:-1], p[1:]]
    xi[1] += inst.start_cost[p[1]]
    if len(p) > 2:
        xi[2:] += inst.theta(p[:-2], p[1:-1], p[2:])
    return xi


def latencies(inst: GsptInstance, perm) -> np.ndarray:
    return np.cumsum(step_costs(inst, perm))


def objective(inst: GsptInstance, perm) -> float:
    """Weighted latency sum of the permutation (start vertex excluded)."""
    p = np.asarray(perm, dtype=int)
    if len(p) < 2:
        return 0.0
    return float(np.dot(latencies(inst, p)[1:], inst.w[p[1:]]))
