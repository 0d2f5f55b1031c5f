"""Independent reference implementations used only by the tests.

Nothing here calls into the optimized code paths of the package: objectives
are recomputed with plain loops, shortest paths come from a dense grid,
visibility is checked by explicit segment intersection tests and expected
times are rebuilt from raw shapely geometry.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
import shapely
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from milaps.gspt import GsptInstance


# ------------------------------------------------------------ GSPT objective

def unit_angle(a, b) -> float:
    """Absolute angle between two direction vectors, in [0, pi]."""
    cross = a[0] * b[1] - a[1] * b[0]
    dot = a[0] * b[0] + a[1] * b[1]
    return abs(math.atan2(cross, dot))


def ref_turn(inst: GsptInstance, h: int, u: int, v: int) -> float:
    if inst.t_ang <= 0 or inst.out_vec is None:
        return 0.0
    return inst.t_ang * unit_angle(inst.in_vec[h][u], inst.out_vec[u][v])


def ref_latencies(inst: GsptInstance, perm) -> list[float]:
    p = [int(k) for k in perm]
    lat = [0.0]
    for k in range(1, len(p)):
        u, v = p[k - 1], p[k]
        turn = float(inst.start_cost[v]) if k == 1 else ref_turn(inst, p[k - 2], u, v)
        lat.append(lat[-1] + turn + float(inst.d[u][v]))
    return lat


def ref_objective(inst: GsptInstance, perm) -> float:
    lat = ref_latencies(inst, perm)
    return sum(lat[k] * float(inst.w[int(perm[k])]) for k in range(1, len(lat)))


def tdp_latency_sum(d, perm) -> float:
    """Classic delivery-man cost: sum over stops of the full path length to them."""
    p = [int(k) for k in perm]
    total = 0.0
    for i in range(1, len(p)):
        total += sum(float(d[p[j - 1]][p[j]]) for j in range(1, i + 1))
    return total


def exhaustive_optimum(inst: GsptInstance, objective=ref_objective) -> tuple[float, tuple[int, ...]]:
    s = inst.start
    rest = [v for v in range(inst.n) if v != s]
    best = (math.inf, ())
    for tail in itertools.permutations(rest):
        perm = (s,) + tail
        c = objective(inst, perm)
        if c < best[0]:
            best = (c, perm)
    return best


def move_2string(perm, i, j, x, y) -> list[int]:
    """Swap the string of length x after position i with the one of length y after j."""
    p = list(perm)
    if i == j:
        return p
    if i > j:
        i, j, x, y = j, i, y, x
    a = p[i + 1:i + 1 + x]
    b = p[j + 1:j + 1 + y]
    return p[:i + 1] + b + p[i + 1 + x:j + 1] + a + p[j + 1 + y:]


def move_2opt(perm, i, j) -> list[int]:
    p = list(perm)
    return p[:i] + p[i:j + 1][::-1] + p[j + 1:]


def random_instance(rng, n: int, turning: bool = True, weights: bool = True) -> GsptInstance:
    """Symmetric instance from random points; turning derived from random path directions.

    Each unordered pair gets a departure and an arrival direction; the reverse
    path departs against the arrival and arrives against the departure, which
    is what makes the turning cost symmetric.
    """
    pts = rng.uniform(0, 10, (n, 2))
    d = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
    out = np.zeros((n, n, 2))
    inn = np.zeros((n, n, 2))
    for u in range(n):
        for v in range(u + 1, n):
            a, b = rng.uniform(-math.pi, math.pi, 2)
            out[u, v] = (math.cos(a), math.sin(a))
            inn[u, v] = (math.cos(b), math.sin(b))
            out[v, u] = -inn[u, v]
            inn[v, u] = -out[u, v]
    w = rng.uniform(0.1, 5.0, n) if weights else np.ones(n)
    if not turning:
        return GsptInstance(d=d, w=w)
    return GsptInstance(d=d, w=w, start_cost=rng.uniform(0, 1, n), out_vec=out, in_vec=inn,
                        t_ang=float(rng.uniform(0.1, 2.0)))


# ------------------------------------------------------------ segments

def _rings(env):
    return [np.asarray(env.outer, float)] + [np.asarray(h, float) for h in env.holes]


def boundary_segments(env) -> tuple[np.ndarray, np.ndarray]:
    a, b = [], []
    for r in _rings(env):
        a.append(r)
        b.append(np.roll(r, -1, axis=0))
    return np.concatenate(a), np.concatenate(b)


def _orient(p, q, r):
    return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])


def segments_cross(p, q, a, b, eps: float = 1e-12) -> np.ndarray:
    """Proper crossings of segments p-q with a-b (touching does not count)."""
    d1 = _orient(a, b, p)
    d2 = _orient(a, b, q)
    d3 = _orient(p, q, a)
    d4 = _orient(p, q, b)
    return (d1 * d2 < -eps) & (d3 * d4 < -eps)


def point_in_env(env, pts) -> np.ndarray:
    """Even-odd ray casting against every ring."""
    pts = np.atleast_2d(np.asarray(pts, float))
    inside = np.zeros(len(pts), dtype=bool)
    for r in _rings(env):
        x0, y0 = r[:, 0], r[:, 1]
        x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
        px, py = pts[:, 0:1], pts[:, 1:2]
        cond = (y0 > py) != (y1 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
        inside ^= (np.sum(cond & (px < xs), axis=1) % 2).astype(bool)
    return inside


def segment_clear(env, p, q, samples: int = 64) -> bool:
    """True if p-q crosses no boundary edge and its samples stay in free space."""
    a, b = boundary_segments(env)
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    if segments_cross(p[None], q[None], a, b).any():
        return False
    t = np.linspace(0.02, 0.98, samples)[:, None]
    return bool(point_in_env(env, p + t * (q - p)).all())


# ------------------------------------------------------------ grid shortest path

def grid_shortest_length(env, s, t, h: float = 0.1, reach: int = 3) -> float:
    """Shortest s-t length over a dense grid with a wide (any-angle-ish) stencil.

    ``s`` and ``t`` must lie on grid nodes. Edges are kept only if they cross
    no boundary segment and their midpoint is free.
    """
    x0, y0, x1, y1 = env.polygon.bounds
    xs = np.arange(x0, x1 + h / 2, h)
    ys = np.arange(y0, y1 + h / 2, h)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    nodes = np.column_stack([gx.ravel(), gy.ravel()])
    free = point_in_env(env, nodes)
    a, b = boundary_segments(env)
    nx, ny = len(xs), len(ys)
    rows, cols, wts = [], [], []
    idx = np.arange(len(nodes)).reshape(nx, ny)
    for dx in range(-reach, reach + 1):
        for dy in range(0, reach + 1):
            if (dy == 0 and dx <= 0) or math.gcd(abs(dx), dy) != 1:
                continue
            lo, hi = max(0, -dx), nx - max(0, dx)
            i0 = idx[lo:hi, 0:ny - dy].ravel()
            i1 = idx[lo + dx:hi + dx, dy:ny].ravel()
            ok = free[i0] & free[i1]
            i0, i1 = i0[ok], i1[ok]
            p, q = nodes[i0], nodes[i1]
            bad = np.zeros(len(i0), dtype=bool)
            for k in range(len(a)):
                bad |= segments_cross(p, q, a[k][None], b[k][None], eps=0.0)
            bad |= ~point_in_env(env, (p + q) / 2)
            keep = ~bad
            rows.append(i0[keep])
            cols.append(i1[keep])
            wts.append(np.full(keep.sum(), h * math.hypot(dx, dy)))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    g = coo_matrix((np.concatenate(wts), (r, c)), shape=(len(nodes),) * 2).tocsr()
    si = int(np.argmin(np.hypot(*(nodes - np.asarray(s)).T)))
    ti = int(np.argmin(np.hypot(*(nodes - np.asarray(t)).T)))
    return float(dijkstra(g, directed=False, indices=si)[ti])


# ------------------------------------------------------------ expected time

def _mass(problem, geom) -> float:
    return sum(p * shapely.intersection(r.geom, geom).area for p, r in problem.targets.regions)


def reverse_clip_et(problem, times, configs) -> tuple[float, float, list[float]]:
    """Expected time rebuilt from raw geometry, walking the sequence backwards.

    The newly seen region of config i is its view minus the union of all
    earlier views; the masses are cross-checked by inclusion-exclusion
    against the growth of the cumulative union.
    """
    views = [problem.visibility(c).geom for c in configs]
    total = problem.targets.total_mass
    probs = [0.0] * len(views)
    for i in range(len(views) - 1, -1, -1):
        earlier = shapely.union_all(views[:i]) if i else shapely.Polygon()
        new = shapely.difference(views[i], earlier)
        probs[i] = _mass(problem, new) / total
        grow = (_mass(problem, shapely.union_all(views[:i + 1])) - (_mass(problem, earlier) if i else 0.0)) / total
        assert abs(grow - probs[i]) <= 1e-6 * max(1.0, abs(grow)), "inclusion-exclusion mismatch"
    et = sum(t * p for t, p in zip(times, probs))
    covered = _mass(problem, shapely.union_all(views)) / total
    return et, covered, probs


def ref_times(t_lin, t_ang, path, params, start_heading=None) -> list[float]:
    """Time to reach each path parameter, walking the polyline segment by segment."""
    v = [tuple(map(float, p)) for p in path]
    segs = [(v[k], v[k + 1]) for k in range(len(v) - 1)]
    lens = [math.dist(a, b) for a, b in segs]
    total = sum(lens)
    out = []
    for prm in params:
        target = prm * total
        walked, turned, heading = 0.0, 0.0, None
        if start_heading is not None:
            heading = (math.cos(start_heading), math.sin(start_heading))
        for (a, b), ln in zip(segs, lens):
            if ln == 0.0:
                continue
            if walked >= target - 1e-12 * max(total, 1.0):
                break
            u = ((b[0] - a[0]) / ln, (b[1] - a[1]) / ln)
            if heading is not None:
                turned += unit_angle(heading, u)
            heading = u
            walked += min(ln, target - walked)
        out.append(t_lin * target + t_ang * turned)
    return out


# ------------------------------------------------------------ greedy ordering

def ref_greedy_order(problem, gs, inst) -> list[int]:
    """Utility-greedy order with scalar bookkeeping on raw shapely geometry."""
    s = inst.start
    base = gs.vis_regions[s].geom
    resid = {v: shapely.difference(gs.vis_regions[v].geom, base) for v in range(len(gs)) if v != s}
    order = [s]
    while resid:
        best = None
        for v in sorted(resid):
            m = _mass(problem, resid[v])
            if len(order) == 1:
                cost = float(inst.start_cost[v]) + float(inst.d[s][v])
            else:
                cost = ref_turn(inst, order[-2], order[-1], v) + float(inst.d[order[-1]][v])
            key = (1, m / max(cost, 1e-12)) if m > 0 else (0, -cost)
            if best is None or key > best[0]:
                best = (key, v)
        pick = best[1]
        order.append(pick)
        taken = resid.pop(pick)
        for v in resid:
            resid[v] = shapely.difference(resid[v], taken)
    return order


def exhaustive_optimum_vec(inst: GsptInstance) -> float:
    """Optimal GSPT cost over every permutation, evaluated as one array program."""
    s = inst.start
    rest = [v for v in range(inst.n) if v != s]
    if not rest:
        return 0.0
    tails = np.array(list(itertools.permutations(rest)), dtype=int)
    perms = np.hstack([np.full((len(tails), 1), s), tails])
    d = np.asarray(inst.d, float)
    step = d[perms[:, :-1], perms[:, 1:]]
    if inst.t_ang > 0 and inst.out_vec is not None:
        step[:, 0] += np.asarray(inst.start_cost)[perms[:, 1]]
        if perms.shape[1] > 2:
            h, u, v = perms[:, :-2], perms[:, 1:-1], perms[:, 2:]
            a = np.asarray(inst.in_vec)[h, u]
            b = np.asarray(inst.out_vec)[u, v]
            cross = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
            dot = a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]
            step[:, 1:] += inst.t_ang * np.abs(np.arctan2(cross, dot))
    lat = np.cumsum(step, axis=1)
    return float((lat * np.asarray(inst.w)[perms[:, 1:]]).sum(axis=1).min())
