"""Auxiliary prefix structures and constant-time move deltas for GSPT local search.

For a fixed permutation the prefix arrays below let the exact objective change
of a ``2string`` or ``2opt`` move be evaluated in O(1). All delta functions are
vectorized over move parameters; the scalar wrappers validate the parameter
domain and evaluate a single move through the same code path.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .gspt import GsptInstance, step_costs


class MoveDomainError(ValueError):
    pass


@dataclass
class Aux:
    """Prefix structures of a permutation.

    ``delta`` are latencies, ``gamma`` prefix weight sums, ``omega`` weighted
    latencies, ``f`` their prefix sums and ``psi`` prefix sums of weighted
    turning at each interior position.
    """

    inst: GsptInstance
    perm: np.ndarray
    w: np.ndarray
    delta: np.ndarray
    gamma: np.ndarray
    omega: np.ndarray
    f: np.ndarray
    psi: np.ndarray

    @property
    def n(self) -> int:
        return len(self.perm)

    @property
    def cost(self) -> float:
        return float(self.f[-1])

    def _pos(self, k):
        return self.perm.take(k, mode="clip")

    def theta(self, i, j, k):
        """Turning term at position ``j`` between positions ``i`` and ``k``.

        ``i == -1`` denotes the start cost of the vertex at position ``k``.
        """
        i = np.asarray(i)
        tk = self._pos(k)
        if self.inst.has_turning:
            t = self.inst.theta(self._pos(i), self._pos(j), tk)
        else:
            t = np.zeros(np.broadcast(i, np.asarray(j), np.asarray(k)).shape)
        return np.where(i == -1, self.inst.start_cost[tk], t)

    def xi(self, i, j, k):
        return self.theta(i, j, k) + self.inst.d[self._pos(j), self._pos(k)]

    def at(self, arr, k):
        return arr.take(k, mode="clip")


def build_aux(inst: GsptInstance, perm) -> Aux:
    p = np.asarray(perm, dtype=int)
    n = len(p)
    w = inst.w[p].copy()
    delta = np.cumsum(step_costs(inst, p))
    gamma = np.cumsum(np.where(np.arange(n) == 0, 0.0, w))
    omega = delta * w
    omega[0] = 0.0
    f = np.cumsum(omega)
    psi = np.zeros(n)
    if n > 2:
        mid = np.arange(1, n - 1)
        inc = w[mid] * (inst.theta(p[mid - 1], p[mid], p[mid + 1]) if inst.has_turning else 0.0)
        psi[1:-1] = np.cumsum(inc)
    return Aux(inst, p, w, delta, gamma, omega, f, psi)


def delta_2string_many(aux: Aux, i, j, x, y) -> np.ndarray:
    """Objective change of ``2string(i, j, x, y)`` for arrays of moves with ``i < j``."""
    i, j, x, y = (np.asarray(a, dtype=int) for a in (i, j, x, y))
    n = aux.n
    D = lambda k: aux.at(aux.delta, k)  # noqa: E731
    G = lambda k: aux.at(aux.gamma, k)  # noqa: E731
    W = lambda k: aux.at(aux.w, k)  # noqa: E731
    O = lambda k: aux.at(aux.omega, k)  # noqa: E731
    xi = aux.xi
    ix = i + x
    jy = j + y
    sel = np.select

    l1 = np.where(y == 0, 0.0, D(i) + xi(i - 1, i, j + 1))
    l2 = l1 + np.where(y <= 1, 0.0, xi(i, j + 1, j + 2) - D(j + 2))
    l3 = l2 + sel(
        [ix == j, y == 0, y == 1],
        [0.0, D(i) + xi(i - 1, i, ix + 1), xi(i, jy, ix + 1)],
        D(jy) + xi(jy - 1, jy, ix + 1),
    )
    l4 = l3 + sel(
        [ix + 1 >= j, y == 0],
        [0.0, xi(i, ix + 1, ix + 2) - D(ix + 2)],
        xi(jy, ix + 1, ix + 2) - D(ix + 2),
    )
    l5 = l4 + sel(
        [x == 0, (y == 1) & (ix == j), ix == j, (y == 0) & (ix + 1 == j), ix + 1 == j],
        [0.0, xi(i, jy, i + 1), D(jy) + xi(jy - 1, jy, i + 1), xi(i, j, i + 1), xi(jy, j, i + 1)],
        D(j) + xi(j - 1, j, i + 1),
    )
    l6 = l5 + sel(
        [x <= 1, ix == j],
        [0.0, xi(jy, i + 1, i + 2) - D(i + 2)],
        xi(j, i + 1, i + 2) - D(i + 2),
    )
    l7 = l6 + sel(
        [jy == n - 1, (ix + 1 == j) & (x == 0), x == 0, (ix == j) & (x == 1), x == 1],
        [0.0, xi(jy, j, jy + 1), D(j) + xi(j - 1, j, jy + 1), xi(jy, ix, jy + 1), xi(j, ix, jy + 1)],
        D(ix) + xi(ix - 1, ix, jy + 1),
    )
    l8 = l7 + sel(
        [jy + 1 >= n - 1, x == 0],
        [0.0, xi(j, jy + 1, jy + 2) - D(jy + 2)],
        xi(ix, jy + 1, jy + 2) - D(jy + 2),
    )
    total = (
        np.where(y == 0, 0.0, l1 * W(j + 1) - O(j + 1))
        + np.where(y <= 1, 0.0, l2 * (G(jy) - G(j + 1)))
        + np.where(ix == j, 0.0, l3 * W(ix + 1) - O(ix + 1))
        + np.where(ix + 1 >= j, 0.0, l4 * (G(j) - G(ix + 1)))
        + np.where(x == 0, 0.0, l5 * W(i + 1) - O(i + 1))
        + np.where(x <= 1, 0.0, l6 * (G(ix) - G(i + 1)))
        + np.where(jy == n - 1, 0.0, l7 * W(jy + 1) - O(jy + 1))
        + np.where(jy + 1 >= n - 1, 0.0, l8 * (G(n - 1) - G(jy + 1)))
    )
    # moves that leave the permutation unchanged
    identity = ((x == 0) & (y == 0)) | ((y == 0) & (ix == j)) | ((x == 0) & (i == j))
    return np.where(identity, 0.0, total)


def delta_2opt_many(aux: Aux, i, j) -> np.ndarray:
    """Objective change of ``2opt(i, j)`` for arrays of moves; symmetric instances only."""
    if not aux.inst.symmetric:
        raise MoveDomainError("the constant-time 2opt delta requires a symmetric instance")
    i, j = np.asarray(i, dtype=int), np.asarray(j, dtype=int)
    n = aux.n
    D = lambda k: aux.at(aux.delta, k)  # noqa: E731
    G = lambda k: aux.at(aux.gamma, k)  # noqa: E731
    F = lambda k: aux.at(aux.f, k)  # noqa: E731
    P = lambda k: aux.at(aux.psi, k)  # noqa: E731
    W = lambda k: aux.at(aux.w, k)  # noqa: E731
    xi, th = aux.xi, aux.theta
    l1 = xi(i - 2, i - 1, j)
    l2 = l1 + th(i - 1, j, j - 1)
    l3 = l2 - xi(i - 2, i - 1, i) - th(i - 1, i, i + 1) + xi(i + 1, i, j + 1) - xi(j - 1, j, j + 1)
    l4 = l3 + np.where(j == n - 2, 0.0, th(i, j + 1, j + 2) - th(j, j + 1, j + 2))
    head = (
        2 * F(i - 1)
        + W(j) * (D(i - 1) + l1 + D(j))
        + P(i - 1)
        - P(j - 1)
        + (D(i - 1) + l2 + D(j)) * (G(j - 1) - G(i - 1))
    )
    tail = np.where(
        j == n - 1,
        -2 * F(n - 1),
        W(j + 1) * (2 * D(j + 1) + l3) + l4 * (G(n - 1) - G(j + 1)) - 2 * F(j + 1),
    )
    return head + tail


def check_2string(n: int, i: int, j: int, x: int, y: int) -> tuple[int, int, int, int]:
    """Validate a 2string parameter tuple and return it with ``i <= j``."""
    if not (0 <= x <= n - 1 and 0 <= y <= n - 1 and x + y <= n - 1):
        raise MoveDomainError(f"string lengths x={x}, y={y} out of range for n={n}")
    if not (0 <= i <= n - x - 1 and 0 <= j <= n - y - 1):
        raise MoveDomainError(f"positions i={i}, j={j} out of range")
    if not (j - i >= x or i - j >= y):
        raise MoveDomainError("strings overlap")
    if i > j:
        i, j, x, y = j, i, y, x
    return i, j, x, y


def delta_2string(aux: Aux, i: int, j: int, x: int, y: int) -> float:
    i, j, x, y = check_2string(aux.n, i, j, x, y)
    if i == j:
        return 0.0
    return float(delta_2string_many(aux, [i], [j], [x], [y])[0])


def check_2opt(n: int, i: int, j: int) -> None:
    if not (1 <= i <= n - 2 and i + 1 <= j <= n - 1):
        raise MoveDomainError(f"2opt positions i={i}, j={j} out of range for n={n}")


def delta_2opt(aux: Aux, i: int, j: int) -> float:
    check_2opt(aux.n, i, j)
    return float(delta_2opt_many(aux, [i], [j])[0])


def apply_2string(perm, i: int, j: int, x: int, y: int) -> np.ndarray:
    p = np.asarray(perm)
    i, j, x, y = check_2string(len(p), i, j, x, y)
    if i == j:
        return p.copy()
    return np.concatenate([p[: i + 1], p[j + 1 : j + y + 1], p[i + x + 1 : j + 1], p[i + 1 : i + x + 1], p[j + y + 1 :]])


def apply_2opt(perm, i: int, j: int) -> np.ndarray:
    p = np.asarray(perm).copy()
    check_2opt(len(p), i, j)
    p[i : j + 1] = p[i : j + 1][::-1]
    return p


@lru_cache(maxsize=256)
def twoopt_moves(n: int) -> tuple[np.ndarray, np.ndarray]:
    if n < 3:
        return np.empty(0, int), np.empty(0, int)
    i, j = np.triu_indices(n, k=1)
    keep = i >= 1
    return i[keep], j[keep]


@lru_cache(maxsize=1024)
def twostring_moves(n: int, x: int, y: int) -> tuple[np.ndarray, ...]:
    """All non-identity moves with fixed string lengths, normalized to ``i < j``."""
    out = []
    for a, b in {(x, y), (y, x)}:
        if a + b > n - 1:
            continue
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        i, j = i.ravel(), j.ravel()
        ok = (i < j) & (i <= n - a - 1) & (j <= n - b - 1) & (j - i >= a)
        if b == 0:
            ok &= j - i != a
        if a == 0 and b == 0:
            continue
        out.append((i[ok], j[ok], np.full(ok.sum(), a), np.full(ok.sum(), b)))
    if not out:
        e = np.empty(0, int)
        return e, e, e, e
    return tuple(np.concatenate(c) for c in zip(*out))
