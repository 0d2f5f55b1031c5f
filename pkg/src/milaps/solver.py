"""Anytime multi-start GVNS for GSPT.

Each restart builds a greedy permutation, descends with VND over 2opt,
relocations of strings of length 1 to 3 and adjacent-free swaps, then shakes
with random 2string moves of growing intensity. Every strict improvement of the
global incumbent is recorded with its timestamp.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .gspt import GsptInstance, objective
from .localsearch import (
    apply_2opt,
    apply_2string,
    build_aux,
    delta_2opt_many,
    delta_2string_many,
    twoopt_moves,
    twostring_moves,
)


class WallClock:
    def __init__(self):
        self._t0 = time.perf_counter()

    def tick(self, n: int = 1) -> None:
        pass

    def elapsed(self) -> float:
        return time.perf_counter() - self._t0


class VirtualClock:
    """Deterministic clock advancing with the amount of evaluation work done.

    One unit of work is one move-delta evaluation or one permutation position
    processed by a rebuild; ``scan_overhead`` units are charged per batch.
    """

    def __init__(self, seconds_per_unit: float = 5e-7, scan_overhead: int = 500):
        self.seconds_per_unit = seconds_per_unit
        self.scan_overhead = scan_overhead
        self.units = 0

    def tick(self, n: int = 1) -> None:
        self.units += int(n) + self.scan_overhead

    def elapsed(self) -> float:
        return self.units * self.seconds_per_unit


def make_clock(virtual: bool):
    return VirtualClock() if virtual else WallClock()


@dataclass
class TraceEntry:
    perm: np.ndarray
    cost: float
    time: float


@dataclass
class SolutionTrace:
    entries: list[TraceEntry] = field(default_factory=list)
    elapsed: float = 0.0

    def record(self, perm, cost: float, t: float) -> bool:
        if self.entries and not cost < self.entries[-1].cost:
            return False
        self.entries.append(TraceEntry(np.array(perm, dtype=int), float(cost), float(t)))
        return True

    @property
    def best(self) -> TraceEntry:
        return self.entries[-1]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def greedy_initial(inst: GsptInstance, randomization: float = 0.0, rng=None) -> np.ndarray:
    """Build a permutation by repeatedly appending the lowest cost-to-weight vertex.

    With ``randomization > 0`` the next vertex is drawn uniformly among the
    ``ceil(randomization * remaining)`` best candidates.
    """
    n = inst.n
    perm = [inst.start]
    left = np.ones(n, dtype=bool)
    left[inst.start] = False
    rng = np.random.default_rng(rng)
    for pos in range(1, n):
        cand = np.flatnonzero(left)
        prev = perm[-1]
        cost = inst.d[prev, cand]
        if pos == 1:
            cost = cost + inst.start_cost[cand]
        elif inst.has_turning:
            cost = cost + inst.theta(np.full(len(cand), perm[-2]), np.full(len(cand), prev), cand)
        ratio = cost / inst.w[cand]
        order = np.argsort(ratio, kind="stable")
        if randomization > 0:
            k = max(1, math.ceil(randomization * len(cand)))
            pick = cand[order[rng.integers(k)]]
        else:
            pick = cand[order[0]]
        perm.append(int(pick))
        left[pick] = False
    return np.asarray(perm, dtype=int)


def _neighborhoods(n: int):
    yield "2opt", twoopt_moves(n)
    for length in (1, 2, 3):
        yield "2string", twostring_moves(n, length, 0)
    yield "2string", twostring_moves(n, 1, 1)


def _full_delta_2opt(inst, perm, base, I, J):
    return np.array([objective(inst, apply_2opt(perm, i, j)) - base for i, j in zip(I, J)])


def vnd(inst: GsptInstance, perm, clock=None, deadline: float = math.inf) -> np.ndarray:
    """Variable neighborhood descent with first improvement in scan order.

    Returns a local optimum with respect to every neighborhood, or the current
    permutation when ``deadline`` passes on ``clock``.
    """
    clock = clock or VirtualClock()
    p = np.asarray(perm, dtype=int).copy()
    n = len(p)
    if n < 3:
        return p
    hoods = list(_neighborhoods(n))
    aux = build_aux(inst, p)
    clock.tick(n)
    k = 0
    while k < len(hoods):
        if clock.elapsed() >= deadline:
            break
        kind, moves = hoods[k]
        if len(moves[0]) == 0:
            k += 1
            continue
        if kind == "2opt":
            if inst.symmetric:
                deltas = delta_2opt_many(aux, *moves)
            else:
                deltas = _full_delta_2opt(inst, p, aux.cost, *moves)
        else:
            deltas = delta_2string_many(aux, *moves)
        clock.tick(len(deltas))
        better = np.flatnonzero(deltas < -1e-10 * (1.0 + abs(aux.cost)))
        if len(better) == 0:
            k += 1
            continue
        m = better[0]
        if kind == "2opt":
            p = apply_2opt(p, moves[0][m], moves[1][m])
        else:
            p = apply_2string(p, *(int(a[m]) for a in moves))
        aux = build_aux(inst, p)
        clock.tick(n)
        k = 0
    return p


def shake(perm, intensity: int, rng) -> np.ndarray:
    """Apply ``intensity`` random 2string moves with string lengths in 1..3."""
    p = np.asarray(perm, dtype=int).copy()
    n = len(p)
    if n < 4:
        return p
    kinds = [(x, y) for x in (1, 2, 3) for y in (0, 1, 2, 3) if len(twostring_moves(n, x, y)[0])]
    for _ in range(intensity):
        x, y = kinds[rng.integers(len(kinds))]
        moves = twostring_moves(n, x, y)
        m = rng.integers(len(moves[0]))
        p = apply_2string(p, *(int(a[m]) for a in moves))
    return p


@dataclass
class GvnsConfig:
    k_max: int = 5
    restart_randomization: float = 0.2


def ms_gvns(inst: GsptInstance, t_max: float, seed=None, virtual_time: bool = False,
            config: GvnsConfig | None = None, clock=None) -> SolutionTrace:
    """Multi-start GVNS; returns every strictly improving incumbent with its time."""
    if not t_max > 0:
        raise ValueError("t_max must be positive")
    cfg = config or GvnsConfig()
    clock = clock or make_clock(virtual_time)
    rng = np.random.default_rng(seed)
    trace = SolutionTrace()
    n = inst.n
    if n <= 2:
        p = greedy_initial(inst)
        trace.record(p, objective(inst, p), clock.elapsed())
        trace.elapsed = clock.elapsed()
        return trace
    restart = 0
    while True:
        r = 0.0 if restart == 0 else cfg.restart_randomization
        cur = greedy_initial(inst, r, rng)
        clock.tick(n * n)
        if restart == 0:
            trace.record(cur, objective(inst, cur), clock.elapsed())
        cur = vnd(inst, cur, clock, t_max)
        cur_cost = objective(inst, cur)
        trace.record(cur, cur_cost, clock.elapsed())
        fails, k = 0, 1
        while fails < cfg.k_max and clock.elapsed() < t_max:
            cand = vnd(inst, shake(cur, k, rng), clock, t_max)
            cand_cost = objective(inst, cand)
            if cand_cost < cur_cost - 1e-10 * (1.0 + abs(cur_cost)):
                cur, cur_cost = cand, cand_cost
                trace.record(cur, cur_cost, clock.elapsed())
                fails, k = 0, 1
            else:
                fails += 1
                k = k % cfg.k_max + 1
        restart += 1
        if clock.elapsed() >= t_max or n <= 3:
            break
    trace.elapsed = clock.elapsed()
    return trace
