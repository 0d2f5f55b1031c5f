"""Expected-time search problem: travel-time model, target mass, sensing, ET."""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import (
    UNBOUNDED,
    GeometryError,
    Point,
    PolygonalEnvironment,
    Region,
    turn_angle,
    visibility_region,
)

GUARD_TOL = 1e-6


@dataclass(frozen=True)
class TravelTimeModel:
    t_lin: float = 1.0
    t_ang: float = 0.0

    def __post_init__(self):
        if self.t_lin < 0 or self.t_ang < 0:
            raise ValueError("t_lin and t_ang must be nonnegative")
        if self.t_lin == 0 and self.t_ang == 0:
            raise ValueError("t_lin and t_ang cannot both be zero")


@dataclass(frozen=True)
class TargetDistribution:
    """Object location prior as positively weighted target regions."""

    regions: tuple[tuple[float, Region], ...]

    def __post_init__(self):
        if not self.regions:
            raise ValueError("at least one target region is required")
        for p, _ in self.regions:
            if not p > 0:
                raise ValueError("target weights must be positive")
        if not self.total_mass > 0:
            raise ValueError("target distribution has zero total mass")

    @classmethod
    def uniform(cls, env: PolygonalEnvironment) -> "TargetDistribution":
        return cls(((1.0, Region.from_environment(env)),))

    @property
    def total_mass(self) -> float:
        return float(sum(p * r.area for p, r in self.regions))

    @property
    def is_uniform_single(self) -> bool:
        return len(self.regions) == 1


def region_mass(targets: TargetDistribution, x: Region) -> float:
    """Weighted target area inside ``x``."""
    if x.is_empty:
        return 0.0
    return float(sum(p * (r & x).area for p, r in targets.regions))


def probability(targets: TargetDistribution, x: Region) -> float:
    return region_mass(targets, x) / targets.total_mass


@dataclass(frozen=True, eq=False)
class EtsProblem:
    env: PolygonalEnvironment
    targets: TargetDistribution
    start: Point
    r_vis: float = UNBOUNDED
    r_fp: float = 0.0
    time_model: TravelTimeModel = field(default_factory=TravelTimeModel)
    start_heading: float | None = None
    epsilon: float = 1e-5

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.r_fp < 0:
            raise ValueError("r_fp must be nonnegative")
        if not self.r_vis > self.r_fp:
            raise ValueError("r_vis must exceed r_fp")
        if not self.env.contains(self.start):
            raise GeometryError("start configuration not in free space")
        object.__setattr__(self, "start", (float(self.start[0]), float(self.start[1])))
        object.__setattr__(self, "_vis_cache", {})
        object.__setattr__(self, "_vis_lock", threading.Lock())

    def visibility(self, q: Point) -> Region:
        """Cached visibility region of configuration ``q``."""
        key = (float(q[0]), float(q[1]))
        cache = self._vis_cache
        hit = cache.get(key)
        if hit is None:
            hit = visibility_region(self.env, key, self.r_vis)
            with self._vis_lock:
                cache.setdefault(key, hit)
        return hit

    @property
    def map_diagonal(self) -> float:
        return math.hypot(self.env.width, self.env.height)

    @property
    def d_sens(self) -> float:
        return sensing_spacing(self.r_vis, self.env.width, self.env.height)


@dataclass(frozen=True)
class SensingSequence:
    configs: tuple[Point, ...]
    params: tuple[float, ...]

    def __post_init__(self):
        if len(self.configs) != len(self.params):
            raise ValueError("configs and params must have equal length")
        if any(b <= a for a, b in zip(self.params, self.params[1:])):
            raise ValueError("sensing parameters must be strictly increasing")

    def __len__(self):
        return len(self.configs)


def _polyline(path) -> np.ndarray:
    v = np.asarray(path, dtype=float).reshape(-1, 2)
    if len(v) == 0:
        raise ValueError("path must have at least one vertex")
    return v


def _cumulative(path: np.ndarray, start_heading: float | None = None):
    """Arc length and turning accumulated up to each vertex (turn at a vertex excluded)."""
    seg = np.diff(path, axis=0)
    lens = np.hypot(seg[:, 0], seg[:, 1])
    cum_len = np.concatenate([[0.0], np.cumsum(lens)])
    units = np.zeros_like(seg)
    nz = lens > 0
    units[nz] = seg[nz] / lens[nz, None]
    turns = np.zeros(len(path))
    if len(units) > 1:
        turns[1:-1] = turn_angle(units[:-1], units[1:])
    cum_turn = np.zeros(len(path))
    # turn made at vertex k is paid after arriving there
    cum_turn[1:] = np.cumsum(turns[:-1])
    if start_heading is not None and len(units):
        head = (math.cos(start_heading), math.sin(start_heading))
        cum_turn[1:] += float(turn_angle(head, units[0]))
    return cum_len, cum_turn


def travel_time(tm: TravelTimeModel, path, upto: float = 1.0, start_heading: float | None = None) -> float:
    """Time to travel the arc-length fraction ``upto`` of a polyline.

    Turning at a vertex counts only once the sensor moves past it.
    """
    if not 0.0 <= upto <= 1.0:
        raise ValueError("path parameter must lie in [0, 1]")
    return float(times_at(tm, path, [upto], start_heading)[0])


def times_at(tm: TravelTimeModel, path, params: Sequence[float], start_heading: float | None = None) -> np.ndarray:
    v = _polyline(path)
    cum_len, cum_turn = _cumulative(v, start_heading)
    total = cum_len[-1]
    s = np.asarray(params, dtype=float) * total
    # a sample sitting on a vertex must not pay the turn made there
    k = np.searchsorted(cum_len, s - 1e-12 * max(total, 1.0), side="left")
    k = np.clip(k, 0, len(cum_turn) - 1)
    return tm.t_lin * s + tm.t_ang * cum_turn[k]


def sensing_spacing(r_vis: float, width: float, height: float) -> float:
    """Maximum distance between consecutive sensing samples along a path."""
    return min(r_vis / 2, math.hypot(width, height) / 100)


def ets_sensing_policy(path, r_vis: float, width: float, height: float) -> SensingSequence:
    """Equidistant sampling of every segment, endpoints included."""
    return sample_polyline(path, sensing_spacing(r_vis, width, height))


def sample_polyline(path, spacing: float) -> SensingSequence:
    v = _polyline(path)
    cum_len, _ = _cumulative(v)
    total = cum_len[-1]
    if total == 0.0:
        return SensingSequence((tuple(v[0]),), (0.0,))
    pts = [tuple(v[0])]
    s = [0.0]
    for k in range(len(v) - 1):
        seg_len = cum_len[k + 1] - cum_len[k]
        if seg_len == 0.0:
            continue
        m = max(1, math.ceil(seg_len / spacing - 1e-12))
        for j in range(1, m + 1):
            f = j / m
            p = v[k] + f * (v[k + 1] - v[k]) if j < m else v[k + 1]
            pts.append((float(p[0]), float(p[1])))
            s.append(cum_len[k] + f * seg_len if j < m else cum_len[k + 1])
    params = [x / total for x in s]
    params[-1] = 1.0
    return SensingSequence(tuple(pts), tuple(params))


def dets_sensing_policy(path, guards: Sequence[Point]) -> SensingSequence:
    """Sense once at each guard, on its first visit along the path."""
    v = _polyline(path)
    cum_len, _ = _cumulative(v)
    total = cum_len[-1]
    g = np.asarray(guards, dtype=float).reshape(-1, 2)
    first = []
    missing = []
    for idx, p in enumerate(g):
        hit = np.nonzero(np.hypot(v[:, 0] - p[0], v[:, 1] - p[1]) <= GUARD_TOL)[0]
        if len(hit) == 0:
            missing.append(idx)
        else:
            first.append((int(hit[0]), idx))
    if missing:
        raise ValueError(f"guards never visited by the path: {missing}")
    # several guards at one vertex sense together at the first of them
    first.sort()
    configs, params, seen_vertices = [], [], set()
    for k, idx in first:
        if k in seen_vertices:
            continue
        seen_vertices.add(k)
        configs.append(tuple(map(float, g[idx])))
        params.append(cum_len[k] / total if total > 0 else 0.0)
    return SensingSequence(tuple(configs), tuple(params))


@dataclass(frozen=True)
class EtResult:
    et: float
    covered_prob: float
    detection_probs: tuple[float, ...]
    times: tuple[float, ...]


def evaluate_et(problem: EtsProblem, path, sensing: SensingSequence) -> EtResult:
    """Expected detection time for a path under a discrete sensing sequence.

    The object is detected at the first sensing configuration whose view
    contains it; mass never seen contributes nothing to the expectation.
    """
    for c in sensing.configs:
        if not problem.env.contains(c):
            raise GeometryError("sensing configuration not in free space")
    times = times_at(problem.time_model, path, sensing.params, problem.start_heading)
    total = problem.targets.total_mass
    seen = Region.empty()
    probs = []
    et = 0.0
    for t, c in zip(times, sensing.configs):
        new = problem.visibility(c) - seen
        p = region_mass(problem.targets, new) / total
        probs.append(p)
        et += float(t) * p
        if not new.is_empty:
            seen = seen | new
    covered = region_mass(problem.targets, seen) / total
    return EtResult(et, min(covered, 1.0), tuple(probs), tuple(float(t) for t in times))
