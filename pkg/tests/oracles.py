"""Reference implementations the tests compare against.

Written independently of the package (no shared helpers), slower and
simpler on purpose.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import total_ordering

import numpy as np


@total_ordering
@dataclass(frozen=True)
class Cost:
    """Exact path cost ``a + b * sqrt(2)`` with integer ``a``, ``b``."""

    a: int = 0
    b: int = 0

    def __add__(self, other: "Cost") -> "Cost":
        return Cost(self.a + other.a, self.b + other.b)

    def _sign_of_diff(self, other: "Cost") -> int:
        x, y = self.a - other.a, self.b - other.b
        if x >= 0 and y >= 0:
            return 0 if x == 0 and y == 0 else 1
        if x <= 0 and y <= 0:
            return -1
        # opposite signs: compare x^2 with 2 y^2 (sqrt(2) is irrational, never equal)
        return 1 if (x > 0) == (x * x > 2 * y * y) else -1

    def __lt__(self, other: "Cost") -> bool:
        return self._sign_of_diff(other) < 0

    def __float__(self) -> float:
        return self.a + self.b * math.sqrt(2.0)


STRAIGHT = Cost(1, 0)
DIAGONAL = Cost(0, 1)


def grid_moves(occ: np.ndarray, i: int, j: int):
    """8-neighbours of a free cell; a diagonal needs both orthogonal cells free."""
    n, m = occ.shape
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            a, b = i + di, j + dj
            if not (0 <= a < n and 0 <= b < m) or occ[a, b]:
                continue
            if di and dj:
                if occ[a, j] or occ[i, b]:
                    continue
                yield (a, b), DIAGONAL
            else:
                yield (a, b), STRAIGHT


def dijkstra_exact(occ: np.ndarray, start) -> dict:
    """Exact single-source costs over free cells, keyed by ``(i, j)``."""
    start = (int(start[0]), int(start[1]))
    best = {start: Cost()}
    heap = [(float(Cost()), Cost(), start)]
    done = set()
    while heap:
        _, c, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in grid_moves(occ, *u):
            nc = c + w
            if v not in best or nc < best[v]:
                best[v] = nc
                heapq.heappush(heap, (float(nc), nc, v))
    return best


def path_cost(cells) -> Cost:
    total = Cost()
    for (a, b), (c, d) in zip(cells[:-1], cells[1:]):
        total = total + (DIAGONAL if abs(a - c) + abs(b - d) == 2 else STRAIGHT)
    return total


def nearest_free(occ: np.ndarray, goal):
    """Brute force: free cell minimizing squared distance, then (i, j)."""
    ii, jj = np.nonzero(occ == 0)
    keys = sorted(zip(((ii - goal[0]) ** 2 + (jj - goal[1]) ** 2).tolist(), ii.tolist(), jj.tolist()))
    return keys[0][1], keys[0][2]


def reference_crop(cells: np.ndarray, center, size: int = 256) -> np.ndarray:
    half = size // 2
    padded = np.pad(cells, ((0, 0), (half, half), (half, half)))
    i, j = int(center[0]) + half, int(center[1]) + half
    return padded[:, i - half:i + half, j - half:j + half]


def reference_spl(successes, shortest, paths) -> float:
    terms = [s * l / max(p, l) for s, l, p in zip(successes, shortest, paths)]
    return sum(terms) / len(terms)
