"""Guard-based search planning: decoupled ETS solving, Milaps and replanning."""
from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import PathEntry, Region, shortest_path_matrix, union_all
from .gspt import GsptInstance, build_instance, latencies, objective
from .model import EtsProblem, evaluate_et, ets_sensing_policy, region_mass
from .placement import GuardSet, guard_metrics, place_guards
from .solver import ms_gvns
from .weights import WTYPES, WeightAssignment, assign_weights, floor_weights


# ---------------------------------------------------------------- schedule

def round_half_away(x: float) -> int:
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


@dataclass(frozen=True)
class ReplanSchedule:
    n: int
    cnt: int
    coeff: float
    flags: tuple[bool, ...]

    @property
    def indices(self) -> tuple[int, ...]:
        """1-based guard positions after which the tail is re-optimized."""
        return tuple(i + 1 for i, f in enumerate(self.flags) if f)

    @property
    def realized(self) -> int:
        return sum(self.flags)


def replan_schedule(n: int, cnt: int, coeff: float = 1.0) -> ReplanSchedule:
    """Replanning flags for a route over ``n`` guards (start excluded).

    With period ``T0 = (n + 1) / sum_{j=0..cnt} coeff**j`` the k-th step sits at
    the rounded partial sum ``sum_{j=0..k} T0 * coeff**j`` and is kept while it
    does not exceed ``n``.
    """
    if n < 1 or cnt < 1 or not coeff >= 1:
        raise ValueError("replan_schedule requires n >= 1, cnt >= 1 and coeff >= 1")
    t0 = (n + 1) / sum(coeff**j for j in range(cnt + 1))
    flags = [False] * n
    acc = t0
    for k in range(1, n + 1):
        acc += t0 * coeff**k
        i = round_half_away(acc)
        if i > n:
            break
        if i >= 1:
            flags[i - 1] = True
    return ReplanSchedule(n, cnt, float(coeff), tuple(flags))


# ---------------------------------------------------------------- methods

_MILAPS = re.compile(
    r"^Milaps-(?P<wtype>Const|Vis|DisSplit|DisMaxW|DisGreedy)"
    r"(?:-R(?P<cnt>[1-9]\d*)(?:-(?P<coeff>\d+(?:\.\d+)?))?(?:-(?P<sens>ETS|D-ETS))?)?"
    r"(?P<plus>\+)?$"
)


class MethodError(ValueError):
    pass


@dataclass(frozen=True)
class MilapsConfig:
    """Parsed method name.

    ``kind`` is ``"milaps"``, ``"ugreedy1"`` or ``"ugreedyA"``; the replanning
    fields are ``None`` unless the name carries an ``-R`` suffix.
    """

    name: str
    kind: str = "milaps"
    wtype: str = "DisGreedy"
    cnt: int | None = None
    coeff: float = 1.0
    sens: str = "D-ETS"
    plus: bool = False

    @property
    def replanning(self) -> bool:
        return self.cnt is not None


def parse_method(name: str) -> MilapsConfig:
    if name == "UGreedy-1":
        return MilapsConfig(name, kind="ugreedy1")
    if name == "UGreedy-A":
        return MilapsConfig(name, kind="ugreedyA")
    m = _MILAPS.match(name)
    if not m:
        raise MethodError(f"unknown method {name!r}")
    cnt = m.group("cnt")
    coeff = float(m.group("coeff")) if m.group("coeff") else 1.0
    if coeff < 1:
        raise MethodError("the replanning period multiplier must be at least 1")
    if cnt is not None and m.group("wtype") == "Const":
        raise MethodError("replanning needs non-constant weights")
    return MilapsConfig(
        name,
        wtype=m.group("wtype"),
        cnt=int(cnt) if cnt else None,
        coeff=coeff,
        sens=m.group("sens") or "D-ETS",
        plus=bool(m.group("plus")),
    )


def method_names(wtypes: Sequence[str] = WTYPES) -> list[str]:
    """Every method variant evaluated in the benchmark suite."""
    out = ["UGreedy-1", "UGreedy-A"]
    for w in wtypes:
        out += [f"Milaps-{w}", f"Milaps-{w}+"]
        if w != "Const":
            for suffix in ("-R8-1.25", "-R8-1.25-ETS", "-R4", "-R8-1.25-D-ETS"):
                out += [f"Milaps-{w}{suffix}", f"Milaps-{w}{suffix}+"]
    return out


# ---------------------------------------------------------------- routes

def assemble_route(matrix: Sequence[Sequence[PathEntry]], perm) -> np.ndarray:
    """Concatenate the stored guard-to-guard paths; junction vertices appear once."""
    p = [int(k) for k in perm]
    if len(p) == 1:
        return np.asarray(matrix[p[0]][p[0]].vertices, dtype=float).reshape(-1, 2)
    parts = [np.asarray(matrix[p[0]][p[1]].vertices, dtype=float)]
    for u, v in zip(p[1:], p[2:]):
        parts.append(np.asarray(matrix[u][v].vertices, dtype=float)[1:])
    return np.concatenate(parts)


def detection_masses(problem: EtsProblem, regions: Sequence[Region]) -> np.ndarray:
    """Target mass newly revealed by each region of a sequence."""
    seen = Region.empty()
    out = np.zeros(len(regions))
    for k, r in enumerate(regions):
        new = r - seen
        out[k] = region_mass(problem.targets, new)
        if not new.is_empty:
            seen = seen | new
    return out


def dets_objective(problem: EtsProblem, gs: GuardSet, inst: GsptInstance, perm) -> float:
    """Expected detection time when sensing only at first guard visits."""
    p = np.asarray(perm, dtype=int)
    masses = detection_masses(problem, [gs.vis_regions[k] for k in p])
    return float(np.dot(latencies(inst, p), masses) / problem.targets.total_mass)


def ets_objective(problem: EtsProblem, route) -> tuple[float, float]:
    """(ET, covered probability) of a route under the equidistant sensing policy."""
    env = problem.env
    res = evaluate_et(problem, route, ets_sensing_policy(route, problem.r_vis, env.width, env.height))
    return res.et, res.covered_prob


# ---------------------------------------------------------------- milaps

@dataclass
class MilapsResult:
    """Recorded solutions of one run; ``best`` indexes the returned one."""

    perms: list[np.ndarray]
    times: list[float]
    gspt_costs: list[float]
    routes: list[np.ndarray]
    best: int
    inst: GsptInstance
    weights: WeightAssignment
    dets: list[float] | None = None
    ets: list[float] | None = None
    replans: int = 0
    elapsed: float = 0.0
    timeout: bool = False
    eval_inst: GsptInstance | None = None

    @property
    def timing_inst(self) -> GsptInstance:
        """Instance carrying the true travel and turning costs."""
        return self.inst if self.eval_inst is None else self.eval_inst

    @property
    def route(self) -> np.ndarray:
        return self.routes[self.best]

    @property
    def perm(self) -> np.ndarray:
        return self.perms[self.best]


def _prepare(problem: EtsProblem, gs: GuardSet, matrix, wtype: str, turning: bool = True):
    true = build_instance(gs.guards, matrix, problem.time_model, problem.start_heading)
    base = true if turning else true.without_turning()
    wa = assign_weights(wtype, base, gs, problem.targets)
    return base.with_weights(wa.weights), wa, (None if turning else true)


def milaps_solve(problem: EtsProblem, gs: GuardSet, matrix, config: MilapsConfig, t_max: float,
                 seed=None, virtual_time: bool = False, select_dets: bool | None = None,
                 turning: bool = True) -> MilapsResult:
    """Solve D-ETS over ``gs`` with static weights and Ms-GVNS.

    Every incumbent is kept. The last one is returned unless ``select_dets``
    (by default the ``+`` flag) asks for the one with the lowest D-ETS value.
    ``turning=False`` optimizes as if turning were free.
    """
    if config.replanning:
        return milaps_replan_solve(problem, gs, matrix, config, t_max, seed, virtual_time, select_dets, turning)
    inst, wa, true = _prepare(problem, gs, matrix, config.wtype, turning)
    trace = ms_gvns(inst, t_max, seed=seed, virtual_time=virtual_time)
    res = MilapsResult(
        perms=[e.perm for e in trace],
        times=[e.time for e in trace],
        gspt_costs=[e.cost for e in trace],
        routes=[assemble_route(matrix, e.perm) for e in trace],
        best=len(trace) - 1,
        inst=inst,
        weights=wa,
        elapsed=trace.elapsed,
        eval_inst=true,
    )
    _select(problem, gs, res, config.plus if select_dets is None else select_dets)
    return res


def _select(problem, gs, res: MilapsResult, by_dets: bool) -> None:
    if by_dets:
        res.dets = [dets_objective(problem, gs, res.timing_inst, p) for p in res.perms]
        res.best = int(np.argmin(res.dets))


def milaps_replan_solve(problem: EtsProblem, gs: GuardSet, matrix, config: MilapsConfig, t_max: float,
                        seed=None, virtual_time: bool = False, select_dets: bool | None = None,
                        turning: bool = True) -> MilapsResult:
    """Milaps whose route tail is re-optimized with updated weights on a schedule."""
    if config.wtype == "Const":
        raise MethodError("replanning needs non-constant weights")
    inst, wa, true = _prepare(problem, gs, matrix, config.wtype, turning)
    n = len(gs) - 1
    if n < 1:
        return milaps_solve(problem, gs, matrix, MilapsConfig(config.name, wtype=config.wtype, plus=config.plus),
                            t_max, seed, virtual_time, select_dets, turning)
    sched = replan_schedule(n, config.cnt, config.coeff)
    t_step = t_max / (1 + sched.realized)
    trace = ms_gvns(inst, t_step, seed=seed, virtual_time=virtual_time)
    rng = np.random.default_rng(seed)
    perms = [e.perm for e in trace]
    times = [e.time for e in trace]
    clock_total = trace.elapsed
    cur = perms[-1].copy()
    X = list(wa.regions)
    alive = np.ones(n + 1, dtype=bool)
    b = inst.start
    total = problem.targets.total_mass
    env = problem.env
    for r in range(1, n + 1):
        a = int(cur[r])
        alive[b] = False
        if config.sens == "ETS":
            leg = matrix[b][a].vertices
            samples = ets_sensing_policy(leg, problem.r_vis, env.width, env.height).configs
            seen = union_all(problem.visibility(q) for q in samples)
        else:
            seen = gs.vis_regions[a]
        for v in np.flatnonzero(alive):
            if not X[v].is_empty and X[v].geom.intersects(seen.geom):
                X[v] = X[v] - seen
        if sched.flags[r - 1]:
            verts = np.flatnonzero(alive)
            w = floor_weights([region_mass(problem.targets, X[v]) for v in verts], total)
            sub = inst.subgraph(verts, a, w=w, start_cost=inst.arrival_start_cost(b, a)[verts])
            sub_trace = ms_gvns(sub, t_step, seed=rng.integers(2**32), virtual_time=virtual_time)
            cur = cur.copy()
            cur[r:] = sub.labels[sub_trace.best.perm]
            clock_total += sub_trace.elapsed
            perms.append(cur.copy())
            times.append(clock_total)
        b = a
    res = MilapsResult(
        perms=perms,
        times=times,
        gspt_costs=[objective(inst, p) for p in perms],
        routes=[assemble_route(matrix, p) for p in perms],
        best=len(perms) - 1,
        inst=inst,
        weights=wa,
        replans=sched.realized,
        elapsed=clock_total,
        eval_inst=true,
    )
    _select(problem, gs, res, config.plus if select_dets is None else select_dets)
    return res


# ---------------------------------------------------------------- decoupling

@dataclass
class EtsReport:
    """Outcome of the full pipeline for one problem and method."""

    method: str
    guards: GuardSet
    matrix: list
    result: MilapsResult
    route: np.ndarray
    et: float
    covered_prob: float
    n_guards: int
    overlap: float
    t_max: float
    timings: dict = field(default_factory=dict)


def default_t_max(n_guards: int) -> float:
    return n_guards / 10.0


def solve_ets(problem: EtsProblem, method: str | MilapsConfig = "Milaps-DisGreedy", placement: str = "ReflexGreedy",
              seed=0, t_max: float | None = None, virtual_time: bool = False, guards: GuardSet | None = None,
              matrix=None, objective: str = "ETS", turning: bool = True) -> EtsReport:
    """Place guards, plan over them and report the route's objective.

    ``objective`` is ``"ETS"`` (equidistant sensing along the route) or
    ``"D-ETS"`` (sensing at first guard visits). With the ``+`` flag every
    recorded route is scored under that objective and the best one is
    returned; otherwise the last one.
    """
    if objective not in ("ETS", "D-ETS"):
        raise ValueError("objective must be 'ETS' or 'D-ETS'")
    from .baselines import ugreedy1, ugreedyA

    config = parse_method(method) if isinstance(method, str) else method
    timings = {}
    t0 = time.perf_counter()
    gs = guards if guards is not None else place_guards(problem, placement, seed)
    timings["placement"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    if matrix is None:
        matrix = shortest_path_matrix(problem.env, gs.guards)
    timings["paths"] = time.perf_counter() - t0
    budget = default_t_max(len(gs)) if t_max is None else t_max
    if not budget > 0:
        budget = 0.1
    t0 = time.perf_counter()
    if config.kind == "ugreedy1":
        res = ugreedy1(problem, gs, matrix, t_max=budget)
    elif config.kind == "ugreedyA":
        res = ugreedyA(problem, gs, matrix, t_max=budget)
    else:
        res = milaps_solve(problem, gs, matrix, config, budget, seed, virtual_time, select_dets=False, turning=turning)
    timings["solve"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    plus = config.plus and config.kind == "milaps"
    if objective == "D-ETS":
        res.dets = [dets_objective(problem, gs, res.timing_inst, p) for p in res.perms]
        if plus:
            res.best = int(np.argmin(res.dets))
        et = res.dets[res.best]
        cov = min(1.0, region_mass(problem.targets, union_all(gs.vis_regions)) / problem.targets.total_mass)
    elif plus:
        scored = [ets_objective(problem, r) for r in res.routes]
        res.ets = [s[0] for s in scored]
        res.best = int(np.argmin(res.ets))
        et, cov = scored[res.best]
    else:
        et, cov = ets_objective(problem, res.route)
    timings["evaluate"] = time.perf_counter() - t0
    n_g, o_g = guard_metrics(gs)
    return EtsReport(config.name, gs, matrix, res, res.route, et, cov, n_g, o_g, budget, timings)
