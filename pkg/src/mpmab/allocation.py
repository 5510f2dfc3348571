"""Oracle allocations: top-N selection, maximum-weight matching and regret accounting."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

# Edges whose reduced cost exceeds this (relative to the weight scale) cannot
# appear in any optimal matching.
_TIE_TOL = 1e-9


@dataclass(frozen=True)
class Assignment:
    """Injective user -> channel map; ``channels[i]`` is the channel of user ``i``."""

    channels: tuple[int, ...]
    value: float

    def as_dict(self) -> dict[int, int]:
        return dict(enumerate(self.channels))


def top_n(means: Sequence[float], n: int) -> Assignment:
    """The ``n`` best channels in decreasing order of mean, ties to the lower index.

    ``n`` larger than the number of channels saturates: every channel is returned.
    """
    order = sorted(range(len(means)), key=lambda c: (-means[c], c))
    chosen = tuple(order[: max(0, n)])
    return Assignment(chosen, math.fsum(means[c] for c in chosen))


def _min_cost_assignment(cost: list[list[float]]):
    """Shortest-augmenting-path Hungarian method for an n x m cost matrix, n <= m.

    Returns (row -> column list, row potentials, column potentials) with the
    column potentials non-positive and zero on never-used columns.
    """
    n = len(cost)
    m = len(cost[0]) if n else 0
    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    p = [0] * (m + 1)  # p[j]: row matched to column j (1-based), 0 = free
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            row = cost[i0 - 1]
            ui0 = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, m + 1):
                if not used[j]:
                    cur = row[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    assign = [-1] * n
    for j in range(1, m + 1):
        if p[j]:
            assign[p[j] - 1] = j - 1
    return assign, u[1:], v[1:]


def _best_value(weights: list[list[float]], rows: list[int], cols: list[int]) -> float:
    if not rows:
        return 0.0
    cost = [[-weights[i][c] for c in cols] for i in rows]
    assign, _, _ = _min_cost_assignment(cost)
    return sum(weights[i][cols[assign[k]]] for k, i in enumerate(rows))


def hungarian(weights) -> Assignment:
    """Maximum-weight injective assignment of the rows (users) to columns (channels).

    Among maximizers the lexicographically smallest user -> channel map is
    returned, so identical inputs always yield identical assignments.
    """
    w = [[float(x) for x in row] for row in weights]
    n = len(w)
    if n == 0:
        return Assignment((), 0.0)
    k = len(w[0])
    if any(len(row) != k for row in w):
        raise ValueError("weight matrix rows must have equal length")
    if n > k:
        raise ValueError(f"cannot assign {n} users injectively to {k} channels")
    if not all(math.isfinite(x) for row in w for x in row):
        raise ValueError("weights must be finite")

    assign, u, v = _min_cost_assignment([[-x for x in row] for row in w])
    scale = max(1.0, max(abs(x) for row in w for x in row))
    tol = _TIE_TOL * scale
    best = sum(w[i][assign[i]] for i in range(n))

    # Lexicographic tie-break: only edges with zero reduced cost can belong to
    # another optimal matching, so most rows need no extra solve.
    used: set[int] = set()
    remaining = best
    for i in range(n):
        current = assign[i]
        for c in range(current):
            if c in used or (-w[i][c] - u[i] - v[c]) > tol:
                continue
            rows = list(range(i + 1, n))
            cols = [j for j in range(k) if j not in used and j != c]
            rest = _best_value(w, rows, cols)
            if w[i][c] + rest >= remaining - tol:
                # Re-solve the tail so later rows follow an optimal completion.
                cost = [[-w[r][j] for j in cols] for r in rows]
                sub, _, _ = _min_cost_assignment(cost) if rows else ([], None, None)
                for idx, r in enumerate(rows):
                    assign[r] = cols[sub[idx]]
                assign[i] = c
                break
        used.add(assign[i])
        remaining -= w[i][assign[i]]

    channels = tuple(assign)
    return Assignment(channels, math.fsum(w[i][c] for i, c in enumerate(channels)))


def matching_value(weights) -> float:
    """Optimal total weight; a matrix with more rows than columns is solved transposed."""
    w = [list(map(float, row)) for row in weights]
    if not w:
        return 0.0
    if len(w) > len(w[0]):
        w = [list(col) for col in zip(*w)]
    return hungarian(w).value


def pseudo_regret_step(oracle_value: float, achieved_means: Sequence[float]) -> float:
    """Per-slot pseudo-regret increment.

    ``achieved_means`` holds, for every collision-free data transmission of the
    slot, the expected reward of that user on that channel. Sensing, idle,
    signaling and colliding users contribute nothing.
    """
    inc = oracle_value - math.fsum(achieved_means)
    return 0.0 if abs(inc) < 1e-12 else inc
