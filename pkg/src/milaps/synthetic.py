"""Synthetic environments and problems for tests, demos and benchmarks."""
from __future__ import annotations

import math

import numpy as np
from shapely.geometry import Polygon, box

from .geometry import PolygonalEnvironment, Region
from .model import EtsProblem, TargetDistribution, TravelTimeModel


def random_environment(rng, width: float = 20.0, height: float = 20.0, n_holes: int = 6,
                       min_size: float = 1.0, max_size: float = 4.0, margin: float = 1.0) -> PolygonalEnvironment:
    """Rectangle with pairwise separated random obstacles (rotated boxes or triangles)."""
    rng = np.random.default_rng(rng)
    holes: list[Polygon] = []
    for _ in range(200 * max(n_holes, 1)):
        if len(holes) >= n_holes:
            break
        cx = rng.uniform(margin + max_size / 2, width - margin - max_size / 2)
        cy = rng.uniform(margin + max_size / 2, height - margin - max_size / 2)
        a, b = rng.uniform(min_size, max_size, 2)
        rot = rng.uniform(0, math.pi)
        if rng.random() < 0.3:
            ang = rot + np.array([0, 2 * math.pi / 3, 4 * math.pi / 3])
            pts = np.column_stack([cx + a / 2 * np.cos(ang), cy + a / 2 * np.sin(ang)])
        else:
            c, s = math.cos(rot), math.sin(rot)
            local = np.array([[-a, -b], [a, -b], [a, b], [-a, b]]) / 2
            pts = local @ np.array([[c, s], [-s, c]]) + (cx, cy)
        poly = Polygon(pts)
        if any(poly.distance(h) < margin for h in holes):
            continue
        if not box(margin / 2, margin / 2, width - margin / 2, height - margin / 2).contains(poly):
            continue
        holes.append(poly)
    outer = [(0.0, 0.0), (width, 0.0), (width, height), (0.0, height)]
    return PolygonalEnvironment(outer, [list(h.exterior.coords)[:-1] for h in holes])


def u_corridor(length: float = 10.0, width: float = 2.0) -> PolygonalEnvironment:
    """U-shaped corridor: two parallel arms joined at the bottom."""
    L, w = length, width
    outer = [(0, 0), (3 * w, 0), (3 * w, L), (2 * w, L), (2 * w, w), (w, w), (w, L), (0, L)]
    return PolygonalEnvironment(outer)


def comb_corridor(teeth: int = 4, tooth: float = 6.0, width: float = 1.5) -> PolygonalEnvironment:
    """A main hallway with ``teeth`` dead-end side corridors; rich in sharp turns."""
    w = width
    outer = [(0.0, 0.0)]
    x = 0.0
    total = (2 * teeth + 1) * w
    outer.append((total, 0.0))
    outer.append((total, w))
    for k in range(teeth):
        right = total - (2 * k + 1) * w
        left = right - w
        outer += [(right, w), (right, w + tooth), (left, w + tooth), (left, w)]
    outer.append((x, w))
    pts = []
    for p in outer:
        if not pts or pts[-1] != p:
            pts.append(p)
    return PolygonalEnvironment(pts)


def uniform_problem(env: PolygonalEnvironment, start, r_vis: float = math.inf, t_lin: float = 1.0,
                    t_ang: float = 0.0, epsilon: float = 1e-5, start_heading: float | None = None) -> EtsProblem:
    return EtsProblem(
        env=env,
        targets=TargetDistribution.uniform(env),
        start=start,
        r_vis=r_vis,
        time_model=TravelTimeModel(t_lin, t_ang),
        start_heading=start_heading,
        epsilon=epsilon,
    )


def random_problem(rng, n_holes: int = 6, size: float = 20.0, r_vis: float = math.inf,
                   t_ang: float = 0.0, epsilon: float = 1e-5) -> EtsProblem:
    """Random map with a uniform prior and a random free start."""
    rng = np.random.default_rng(rng)
    env = random_environment(rng, size, size, n_holes)
    poly = env.polygon
    while True:
        p = (float(rng.uniform(0, size)), float(rng.uniform(0, size)))
        if poly.buffer(-0.25).contains(Polygon.from_bounds(p[0] - 1e-3, p[1] - 1e-3, p[0] + 1e-3, p[1] + 1e-3)):
            break
    return uniform_problem(env, p, r_vis=r_vis, t_ang=t_ang, epsilon=epsilon)


def weighted_targets(env: PolygonalEnvironment, rng, k: int = 3) -> TargetDistribution:
    """Background mass plus ``k`` heavier random boxes."""
    rng = np.random.default_rng(rng)
    x0, y0, x1, y1 = env.bounds
    regions = [(1.0, Region.from_environment(env))]
    for _ in range(k):
        cx, cy = rng.uniform(x0, x1), rng.uniform(y0, y1)
        s = rng.uniform(1, 3)
        r = Region(box(cx - s, cy - s, cx + s, cy + s)) & Region.from_environment(env)
        if not r.is_empty:
            regions.append((float(rng.uniform(2, 5)), r))
    return TargetDistribution(tuple(regions))
