"""Polygonal environments, regions, visibility and guard-to-guard shortest paths.

Clipping and area are delegated to shapely; visibility polygons are computed by
an angular ray sweep over the environment vertices and shortest paths by
Dijkstra over the visibility graph of the guards and the reflex vertices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import shapely
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from shapely.geometry import LineString, MultiPolygon, Point as _ShPoint, Polygon
from shapely.geometry.base import BaseGeometry

Point = tuple[float, float]

TOL = 1e-9
UNBOUNDED = math.inf
_RAY_EPS = 1e-10


class GeometryError(ValueError):
    pass


class UnreachableError(GeometryError):
    def __init__(self, u: int, v: int):
        super().__init__(f"guards {u} and {v} are not mutually reachable")
        self.pair = (u, v)


def _signed_area(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _clean_ring(ring: Iterable[Sequence[float]]) -> np.ndarray:
    pts = np.asarray([(float(p[0]), float(p[1])) for p in ring], dtype=float)
    if len(pts) > 1 and np.allclose(pts[0], pts[-1], atol=TOL, rtol=0):
        pts = pts[:-1]
    keep = [0]
    for k in range(1, len(pts)):
        if np.hypot(*(pts[k] - pts[keep[-1]])) > TOL:
            keep.append(k)
    pts = pts[keep]
    if len(pts) < 3:
        raise GeometryError("ring needs at least three distinct vertices")
    if not np.all(np.isfinite(pts)):
        raise GeometryError("ring coordinates must be finite")
    return pts


@dataclass(frozen=True, eq=False)
class PolygonalEnvironment:
    """Free space of a point sensor: one outer ring minus disjoint holes.

    Rings are normalized on construction so that the outer boundary is
    counterclockwise and holes are clockwise (free space always on the left).
    """

    outer: np.ndarray
    holes: tuple[np.ndarray, ...] = ()

    def __init__(self, outer, holes=()):
        o = _clean_ring(outer)
        if _signed_area(o) < 0:
            o = o[::-1].copy()
        hs = []
        for h in holes:
            h = _clean_ring(h)
            if _signed_area(h) > 0:
                h = h[::-1].copy()
            hs.append(h)
        object.__setattr__(self, "outer", o)
        object.__setattr__(self, "holes", tuple(hs))
        poly = self.polygon
        if not poly.is_valid:
            raise GeometryError(f"invalid environment: {shapely.is_valid_reason(poly)}")
        if not isinstance(poly, Polygon) or len(poly.interiors) != len(hs):
            raise GeometryError("holes must lie strictly inside the outer boundary")

    def __eq__(self, other):
        if not isinstance(other, PolygonalEnvironment):
            return NotImplemented
        return (
            np.array_equal(self.outer, other.outer)
            and len(self.holes) == len(other.holes)
            and all(np.array_equal(a, b) for a, b in zip(self.holes, other.holes))
        )

    __hash__ = object.__hash__

    @cached_property
    def polygon(self) -> Polygon:
        return Polygon(self.outer, [h for h in self.holes])

    @cached_property
    def _prepared(self) -> Polygon:
        p = shapely.Polygon(self.polygon)
        shapely.prepare(p)
        return p

    @property
    def rings(self) -> tuple[np.ndarray, ...]:
        return (self.outer,) + self.holes

    @cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        a = np.concatenate([r for r in self.rings])
        b = np.concatenate([np.roll(r, -1, axis=0) for r in self.rings])
        return a, b

    @cached_property
    def vertices(self) -> np.ndarray:
        return np.concatenate([r for r in self.rings])

    @cached_property
    def reflex_vertices(self) -> np.ndarray:
        out = []
        for r in self.rings:
            prev = np.roll(r, 1, axis=0)
            nxt = np.roll(r, -1, axis=0)
            e1 = r - prev
            e2 = nxt - r
            cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
            out.append(r[cross < -TOL])
        return np.concatenate(out) if out else np.empty((0, 2))

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return self.polygon.bounds

    @property
    def width(self) -> float:
        b = self.bounds
        return b[2] - b[0]

    @property
    def height(self) -> float:
        b = self.bounds
        return b[3] - b[1]

    @property
    def area(self) -> float:
        return self.polygon.area

    def contains(self, p: Point) -> bool:
        """True if ``p`` lies in the closed free space (boundary within TOL)."""
        pt = _ShPoint(p)
        return bool(self._prepared.covers(pt) or self.polygon.distance(pt) <= TOL)

    def interior_point_near(self, p: Point, offset: float | None = None) -> Point:
        """Return ``p`` if strictly interior, else a point pushed slightly inside."""
        pt = _ShPoint(p)
        if self._prepared.contains(pt) and self.polygon.exterior.distance(pt) > TOL and all(
            shapely.LinearRing(h).distance(pt) > TOL for h in self.holes
        ):
            return (float(p[0]), float(p[1]))
        if not self.contains(p):
            raise GeometryError("query point not in free space")
        scale = offset if offset is not None else 1e-7 * max(1.0, self.width, self.height)
        best = None
        for k in range(32):
            a = 2 * math.pi * k / 32 + 0.0123
            c = (p[0] + scale * math.cos(a), p[1] + scale * math.sin(a))
            cp = _ShPoint(c)
            if self._prepared.contains(cp):
                dist = self.polygon.boundary.distance(cp)
                if best is None or dist > best[0]:
                    best = (dist, c)
        if best is None:
            raise GeometryError("query point not in free space")
        return best[1]

    def segment_free(self, p: Point, q: Point) -> bool:
        return bool(self._prepared.covers(LineString([p, q])))


class Region:
    """A (possibly empty, possibly disconnected) polygonal set with holes."""

    __slots__ = ("geom",)

    def __init__(self, geom: BaseGeometry | None = None):
        self.geom = _polygonal(geom)

    @classmethod
    def empty(cls) -> "Region":
        return cls(None)

    @classmethod
    def from_parts(cls, parts: Iterable[tuple[Sequence[Point], Sequence[Sequence[Point]]]]) -> "Region":
        polys = [Polygon(shell, holes) for shell, holes in parts]
        if not polys:
            return cls.empty()
        return cls(shapely.union_all(polys))

    @classmethod
    def from_environment(cls, env: PolygonalEnvironment) -> "Region":
        return cls(env.polygon)

    @property
    def parts(self) -> list[tuple[list[Point], list[list[Point]]]]:
        return [
            (list(p.exterior.coords)[:-1], [list(h.coords)[:-1] for h in p.interiors])
            for p in _components(self.geom)
        ]

    @property
    def area(self) -> float:
        return float(self.geom.area)

    @property
    def is_empty(self) -> bool:
        return self.geom.is_empty

    def __and__(self, other: "Region") -> "Region":
        return clip(self, other, "intersect")

    def __or__(self, other: "Region") -> "Region":
        return clip(self, other, "union")

    def __sub__(self, other: "Region") -> "Region":
        return clip(self, other, "difference")

    def __repr__(self):
        return f"Region(parts={len(_components(self.geom))}, area={self.area:.6g})"


def _components(geom: BaseGeometry) -> list[Polygon]:
    if geom is None or geom.is_empty:
        return []
    if isinstance(geom, Polygon):
        return [geom]
    if isinstance(geom, MultiPolygon):
        return list(geom.geoms)
    out = []
    for g in getattr(geom, "geoms", []):
        out.extend(_components(g))
    return out


def _polygonal(geom: BaseGeometry | None, min_area: float = 0.0) -> BaseGeometry:
    comps = [p for p in _components(geom) if p.area > min_area]
    if not comps:
        return Polygon()
    if len(comps) == 1:
        return comps[0]
    return MultiPolygon(comps)


def area(r: Region) -> float:
    return r.area


def clip(a: Region, b: Region, op: str) -> Region:
    """Boolean set operation on regions.

    ``op`` is one of ``"intersect"``, ``"union"``, ``"difference"``. The
    difference is the closure of the set difference. Slivers smaller than
    ``1e-9`` of the operands' joint bounding-box area are dropped.
    """
    ga, gb = a.geom, b.geom
    if op == "intersect":
        if ga.is_empty or gb.is_empty:
            return Region.empty()
        g = shapely.intersection(ga, gb)
    elif op == "union":
        if ga.is_empty:
            return Region(gb)
        if gb.is_empty:
            return Region(ga)
        g = shapely.union(ga, gb)
    elif op == "difference":
        if ga.is_empty:
            return Region.empty()
        if gb.is_empty:
            return Region(ga)
        g = shapely.difference(ga, gb)
    else:
        raise ValueError(f"unknown clip operation {op!r}")
    joint = [x for x in (ga, gb) if not x.is_empty]
    xmin = min(x.bounds[0] for x in joint)
    ymin = min(x.bounds[1] for x in joint)
    xmax = max(x.bounds[2] for x in joint)
    ymax = max(x.bounds[3] for x in joint)
    r = Region.__new__(Region)
    r.geom = _polygonal(g, 1e-9 * (xmax - xmin) * (ymax - ymin))
    return r


def union_all(regions: Iterable[Region]) -> Region:
    geoms = [r.geom for r in regions if not r.is_empty]
    if not geoms:
        return Region.empty()
    return Region(shapely.union_all(geoms))


def d_circ(r_vis: float) -> float:
    """Maximum chord spacing used when sampling visibility arcs of radius ``r_vis``."""
    return max(math.pi * r_vis / 32, min(math.pi * r_vis / 8, math.pi / 2))


def disc_polygon(center: Point, r: float) -> Polygon:
    n = max(3, math.ceil(2 * math.pi * r / d_circ(r) - 1e-9))
    a = 2 * math.pi * np.arange(n) / n
    return Polygon(np.column_stack([center[0] + r * np.cos(a), center[1] + r * np.sin(a)]))


def _ray_hits(env: PolygonalEnvironment, q: np.ndarray, angles: np.ndarray) -> np.ndarray:
    a, b = env.edges
    e = b - a
    d = np.column_stack([np.cos(angles), np.sin(angles)])
    aq = a - q
    denom = d[:, None, 0] * e[None, :, 1] - d[:, None, 1] * e[None, :, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (aq[None, :, 0] * e[None, :, 1] - aq[None, :, 1] * e[None, :, 0]) / denom
        s = (aq[None, :, 0] * d[:, None, 1] - aq[None, :, 1] * d[:, None, 0]) / denom
    ok = (np.abs(denom) > 1e-15) & (t > 0) & (s >= -1e-12) & (s <= 1 + 1e-12)
    t = np.where(ok, t, np.inf)
    tmin = t.min(axis=1)
    return q + d * tmin[:, None]


def visibility_region(env: PolygonalEnvironment, q: Point, r_vis: float = UNBOUNDED) -> Region:
    """Closed region of the environment seen from ``q`` within range ``r_vis``.

    Boundary points are accepted and evaluated from a point nudged inside.
    For finite ranges the circular arcs are replaced by chords no longer than
    :func:`d_circ`.
    """
    if not r_vis > 0:
        raise GeometryError("visibility radius must be positive")
    qq = np.asarray(env.interior_point_near(q), dtype=float)
    verts = env.vertices
    ang = np.arctan2(verts[:, 1] - qq[1], verts[:, 0] - qq[0])
    rays = np.sort(np.concatenate([ang - _RAY_EPS, ang + _RAY_EPS]))
    hits = _ray_hits(env, qq, rays)
    poly = Polygon(hits)
    if not poly.is_valid:
        poly = shapely.make_valid(poly)
    geom = shapely.intersection(poly, env.polygon)
    if math.isfinite(r_vis):
        geom = shapely.intersection(geom, disc_polygon(tuple(qq), r_vis))
    comps = _components(geom)
    if not comps:
        return Region.empty()
    # keep the star-shaped component around q
    qpt = _ShPoint(qq)
    best = min(comps, key=lambda p: (p.distance(qpt), -p.area))
    return Region(best)


@dataclass(frozen=True)
class PathEntry:
    """A polyline between two guards with its length and turning summary."""

    vertices: np.ndarray
    length: float
    interior_turn: float
    out_vec: tuple[float, float]
    in_vec: tuple[float, float]

    @property
    def out_dir(self) -> float:
        return math.atan2(self.out_vec[1], self.out_vec[0])

    @property
    def in_dir(self) -> float:
        return math.atan2(self.in_vec[1], self.in_vec[0])

    @property
    def is_degenerate(self) -> bool:
        return len(self.vertices) < 2

    def reversed(self) -> "PathEntry":
        return PathEntry(
            vertices=self.vertices[::-1].copy(),
            length=self.length,
            interior_turn=self.interior_turn,
            out_vec=(-self.in_vec[0], -self.in_vec[1]),
            in_vec=(-self.out_vec[0], -self.out_vec[1]),
        )

    @classmethod
    def from_vertices(cls, pts: Sequence[Point]) -> "PathEntry":
        v = np.asarray(pts, dtype=float).reshape(-1, 2)
        keep = [0]
        for k in range(1, len(v)):
            if np.hypot(*(v[k] - v[keep[-1]])) > TOL:
                keep.append(k)
        v = v[keep]
        if len(v) < 2:
            return cls(v, 0.0, 0.0, (0.0, 0.0), (0.0, 0.0))
        seg = np.diff(v, axis=0)
        lens = np.hypot(seg[:, 0], seg[:, 1])
        units = seg / lens[:, None]
        turn = float(np.sum(turn_angle(units[:-1], units[1:]))) if len(units) > 1 else 0.0
        return cls(v, float(lens.sum()), turn, tuple(units[0]), tuple(units[-1]))


def turn_angle(u, v):
    """Absolute heading change in [0, pi] between direction vectors ``u`` and ``v``.

    Zero vectors (degenerate paths) yield zero. Exactly symmetric under
    reversal: ``turn_angle(u, v) == turn_angle(-v, -u)``.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cross = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    dot = u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1]
    return np.arctan2(np.abs(cross), dot)


def shortest_path_matrix(env: PolygonalEnvironment, guards: Sequence[Point]) -> list[list[PathEntry]]:
    """All-pairs Euclidean shortest paths between guards.

    Paths bend only at reflex vertices of the environment. Entry ``[v][u]``
    is the exact reversal of ``[u][v]``.
    """
    g = np.asarray(guards, dtype=float).reshape(-1, 2)
    n = len(g)
    for k, p in enumerate(g):
        if not env.contains(tuple(p)):
            raise GeometryError(f"guard {k} not in free space")
    nodes = np.concatenate([g, env.reflex_vertices]) if len(env.reflex_vertices) else g
    m = len(nodes)
    iu, ju = np.triu_indices(m, k=1)
    lines = shapely.linestrings(np.stack([nodes[iu], nodes[ju]], axis=1))
    free = shapely.covers(env._prepared, lines)
    lens = np.hypot(*(nodes[iu] - nodes[ju]).T)
    iu, ju, lens = iu[free], ju[free], lens[free]
    # zero-length edges would vanish from a sparse matrix
    lens = np.maximum(lens, 1e-300)
    graph = csr_matrix((np.concatenate([lens, lens]), (np.concatenate([iu, ju]), np.concatenate([ju, iu]))), shape=(m, m))
    dist, pred = dijkstra(graph, directed=False, indices=np.arange(n), return_predecessors=True)
    out: list[list[PathEntry | None]] = [[None] * n for _ in range(n)]
    for u in range(n):
        out[u][u] = PathEntry(g[u : u + 1].copy(), 0.0, 0.0, (0.0, 0.0), (0.0, 0.0))
        for v in range(u + 1, n):
            if not np.isfinite(dist[u, v]):
                raise UnreachableError(u, v)
            chain = [v]
            while chain[-1] != u:
                chain.append(pred[u, chain[-1]])
            entry = PathEntry.from_vertices(nodes[chain[::-1]])
            out[u][v] = entry
            out[v][u] = entry.reversed()
    return out  # type: ignore[return-value]
