"""Guard placement (the sensor placement step) and guard-set metrics."""
from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np
import shapely

from .geometry import Point, Region, union_all
from .model import EtsProblem, region_mass

METHODS = ("ReflexGreedy", "IRS")


class PlacementError(RuntimeError):
    """The coverage target could not be met within the sample budget."""

    def __init__(self, coverage: float, target: float):
        super().__init__(f"coverage target {target:.6g} unreachable; achieved {coverage:.6g}")
        self.coverage = coverage
        self.target = target


@dataclass(frozen=True, eq=False)
class GuardSet:
    guards: tuple[Point, ...]
    vis_regions: tuple[Region, ...]

    def __post_init__(self):
        if len(self.guards) != len(self.vis_regions):
            raise ValueError("one visibility region per guard is required")
        if not self.guards:
            raise ValueError("a guard set contains at least the start")

    def __len__(self):
        return len(self.guards)

    @property
    def points(self) -> np.ndarray:
        return np.asarray(self.guards, dtype=float).reshape(-1, 2)

    @classmethod
    def from_points(cls, problem: EtsProblem, points) -> "GuardSet":
        pts = tuple((float(x), float(y)) for x, y in points)
        return cls(pts, tuple(problem.visibility(p) for p in pts))


def guard_metrics(gs: GuardSet) -> tuple[int, float]:
    """Guard count and overlap ratio of the guards' visibility regions."""
    total = sum(r.area for r in gs.vis_regions)
    union = union_all(gs.vis_regions).area
    if union <= 0:
        return len(gs), 0.0
    return len(gs), max(0.0, total / union - 1.0)


def uniform_points(region: Region, k: int, rng) -> np.ndarray:
    """``k`` points drawn uniformly from a polygonal region by rejection."""
    comps = [shapely.get_geometry(region.geom, i) for i in range(shapely.get_num_geometries(region.geom))]
    comps = [c for c in comps if c.area > 0]
    if not comps or k <= 0:
        return np.empty((0, 2))
    areas = np.array([c.area for c in comps])
    which = rng.choice(len(comps), size=k, p=areas / areas.sum())
    out = np.empty((k, 2))
    for ci in np.unique(which):
        need = int(np.sum(which == ci))
        poly = comps[ci]
        shapely.prepare(poly)
        x0, y0, x1, y1 = poly.bounds
        got = []
        for _ in range(1000):
            m = max(16, 2 * need)
            cand = np.column_stack([rng.uniform(x0, x1, m), rng.uniform(y0, y1, m)])
            got.extend(cand[shapely.contains_xy(poly, cand[:, 0], cand[:, 1])])
            if len(got) >= need:
                break
        if len(got) < need:
            # extremely thin part: fall back to its representative point
            rp = poly.representative_point()
            got.extend([(rp.x, rp.y)] * (need - len(got)))
        out[which == ci] = np.asarray(got[:need])
    return out


class _Cover:
    """Incremental coverage bookkeeping shared by the placement methods."""

    def __init__(self, problem: EtsProblem):
        self.problem = problem
        self.total = problem.targets.total_mass
        self.target = (1.0 - problem.epsilon) * self.total
        self.support = union_all(r for _, r in problem.targets.regions)
        self.guards: list[Point] = [problem.start]
        self.regions: list[Region] = [problem.visibility(problem.start)]
        self.seen = self.regions[0]
        self.mass = region_mass(problem.targets, self.seen)

    @property
    def done(self) -> bool:
        return self.mass >= self.target * (1.0 - 1e-12)

    def gain(self, vis: Region) -> float:
        return region_mass(self.problem.targets, vis - self.seen)

    def add(self, p: Point, vis: Region) -> None:
        self.guards.append((float(p[0]), float(p[1])))
        self.regions.append(vis)
        self.seen = self.seen | vis
        self.mass = region_mass(self.problem.targets, self.seen)

    def uncovered(self) -> Region:
        return self.support - self.seen

    def sample_uncovered(self, rng, budget: int) -> None:
        for _ in range(budget):
            if self.done:
                return
            pts = uniform_points(self.uncovered(), 1, rng)
            if len(pts) == 0:
                break
            p = (float(pts[0, 0]), float(pts[0, 1]))
            vis = self.problem.visibility(p)
            if self.gain(vis) > 0:
                self.add(p, vis)
        if not self.done:
            raise PlacementError(self.mass / self.total, 1.0 - self.problem.epsilon)

    def result(self) -> GuardSet:
        return GuardSet(tuple(self.guards), tuple(self.regions))


def _reflex_greedy(problem: EtsProblem, rng, budget: int) -> GuardSet:
    cov = _Cover(problem)
    if cov.done:
        return cov.result()
    env = problem.env
    scale = 1e-6 * max(1.0, env.width, env.height)
    pool = [env.interior_point_near(tuple(v), scale) for v in env.reflex_vertices]
    k = max(64, 4 * len(env.reflex_vertices))
    pool += [tuple(map(float, p)) for p in uniform_points(Region.from_environment(env), k, rng)]
    vis = [problem.visibility(p) for p in pool]
    # lazy greedy: gains only shrink as coverage grows
    heap = [(-cov.gain(v), i) for i, v in enumerate(vis)]
    heapq.heapify(heap)
    while heap and not cov.done:
        neg, i = heapq.heappop(heap)
        if neg >= 0:
            break
        g = cov.gain(vis[i])
        if heap and (-g, i) > heap[0]:
            heapq.heappush(heap, (-g, i))
            continue
        if g > 0:
            cov.add(pool[i], vis[i])
    cov.sample_uncovered(rng, budget)
    return cov.result()


def _irs(problem: EtsProblem, rng, budget: int) -> GuardSet:
    cov = _Cover(problem)
    cov.sample_uncovered(rng, budget)
    return cov.result()


def place_guards(problem: EtsProblem, method: str = "ReflexGreedy", seed=0, budget: int = 100_000) -> GuardSet:
    """Generate a guard set covering at least ``1 - epsilon`` of the target mass.

    ``ReflexGreedy`` reduces a pool of reflex vertices and uniform samples by
    greedy weighted set cover; ``IRS`` repeatedly samples a point in the
    still-uncovered target region. Guard 0 is always the start.
    """
    if problem.r_fp != 0:
        raise ValueError("guard placement requires a point sensor (r_fp = 0)")
    rng = np.random.default_rng(seed)
    if method == "ReflexGreedy":
        return _reflex_greedy(problem, rng, budget)
    if method == "IRS":
        return _irs(problem, rng, budget)
    raise ValueError(f"unknown placement method {method!r}; expected one of {METHODS}")
