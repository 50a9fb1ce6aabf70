"""Pure-Python twins of the compiled kernels in ``_ckernels.pyx``.

Same algorithms, same float operation order, same tie-breaking, so both
backends produce identical results.
"""

from __future__ import annotations

import heapq
import math

import numpy as np
from scipy import ndimage

SQRT2 = math.sqrt(2.0)
OCTILE_K = math.sqrt(2.0) - 1.0

# straight moves first, then diagonals
MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1))


def raycast(occ, res, ox, oy, dir_x, dir_y, max_range):
    n = len(dir_x)
    out_d = np.full(n, np.inf)
    out_i = np.full(n, -1, dtype=np.int64)
    out_j = np.full(n, -1, dtype=np.int64)
    ni, nj = occ.shape
    x, y = ox / res, oy / res
    ix0, iy0 = math.floor(x), math.floor(y)
    limit = max_range / res
    if ix0 < 0 or iy0 < 0 or ix0 >= ni or iy0 >= nj:
        return out_d, out_i, out_j
    grid = occ.tolist()
    for k in range(n):
        ix, iy = ix0, iy0
        if grid[ix][iy]:
            out_d[k], out_i[k], out_j[k] = 0.0, ix, iy
            continue
        dx, dy = float(dir_x[k]), float(dir_y[k])
        if dx > 0:
            sx, tdx = 1, 1.0 / dx
            tmx = ((ix + 1) - x) * tdx
        elif dx < 0:
            sx, tdx = -1, -1.0 / dx
            tmx = (x - ix) * tdx
        else:
            sx, tdx, tmx = 0, math.inf, math.inf
        if dy > 0:
            sy, tdy = 1, 1.0 / dy
            tmy = ((iy + 1) - y) * tdy
        elif dy < 0:
            sy, tdy = -1, -1.0 / dy
            tmy = (y - iy) * tdy
        else:
            sy, tdy, tmy = 0, math.inf, math.inf
        while True:
            if tmx < tmy:
                t = tmx
                ix += sx
                tmx += tdx
            else:
                t = tmy
                iy += sy
                tmy += tdy
            if t > limit or ix < 0 or iy < 0 or ix >= ni or iy >= nj:
                break
            if grid[ix][iy]:
                out_d[k], out_i[k], out_j[k] = t * res, ix, iy
                break
    return out_d, out_i, out_j


def _octile(i, j, gi, gj):
    a, b = abs(i - gi), abs(j - gj)
    if a < b:
        return OCTILE_K * a + b
    return OCTILE_K * b + a


def _neighbors(grid, i, j, ni, nj):
    for k, (di, dj) in enumerate(MOVES):
        a, b = i + di, j + dj
        if a < 0 or b < 0 or a >= ni or b >= nj or grid[a][b]:
            continue
        if k >= 4:
            if grid[a][j] or grid[i][b]:
                continue
            yield a, b, SQRT2
        else:
            yield a, b, 1.0


def astar(occ, si, sj, gi, gj):
    ni, nj = occ.shape
    grid = occ.tolist()
    g = {(si, sj): 0.0}
    parent = {}
    closed = set()
    h0 = _octile(si, sj, gi, gj)
    heap = [(h0, h0, si * nj + sj)]
    reached = False
    while heap:
        _, _, cur = heapq.heappop(heap)
        i, j = divmod(cur, nj)
        if (i, j) in closed:
            continue
        closed.add((i, j))
        if (i, j) == (gi, gj):
            reached = True
            break
        gc = g[(i, j)]
        for a, b, step in _neighbors(grid, i, j, ni, nj):
            if (a, b) in closed:
                continue
            ng = gc + step
            if ng < g.get((a, b), math.inf):
                g[(a, b)] = ng
                parent[(a, b)] = (i, j)
                hv = _octile(a, b, gi, gj)
                heapq.heappush(heap, (ng + hv, hv, a * nj + b))
    if reached:
        end = (gi, gj)
    else:
        end = min(closed, key=lambda c: ((c[0] - gi) ** 2 + (c[1] - gj) ** 2, c[0] * nj + c[1]))
    cells = [end]
    while cells[-1] in parent:
        cells.append(parent[cells[-1]])
    cells.reverse()
    return np.asarray(cells, dtype=np.int64).reshape(-1, 2), reached


def distance_field(occ, sources, cell_size):
    ni, nj = occ.shape
    grid = occ.tolist()
    dist = np.full(ni * nj, np.inf)
    heap = []
    for s in sources:
        s = int(s)
        if dist[s] > 0.0:
            dist[s] = 0.0
            heap.append((0.0, s))
    heapq.heapify(heap)
    closed = bytearray(ni * nj)
    while heap:
        d, cur = heapq.heappop(heap)
        if closed[cur]:
            continue
        closed[cur] = 1
        i, j = divmod(cur, nj)
        for a, b, step in _neighbors(grid, i, j, ni, nj):
            nb = a * nj + b
            if closed[nb]:
                continue
            nd = d + step
            if nd < dist[nb]:
                dist[nb] = nd
                heapq.heappush(heap, (nd, nb))
    return (dist * cell_size).reshape(ni, nj)


def _disk(radius):
    r = np.arange(-radius, radius + 1)
    return (r[:, None] ** 2 + r[None, :] ** 2) <= radius * radius


_FOUR = ndimage.generate_binary_structure(2, 1)


def nearest_frontier(occ, trail, radius, ci, cj):
    ni, nj = occ.shape
    occ = occ.astype(bool)
    known = ndimage.binary_dilation(trail.astype(bool), structure=_disk(radius)) | occ
    if not (0 <= ci < ni and 0 <= cj < nj):
        return -1, -1
    passable = known & ~occ
    passable[ci, cj] = True
    labels, _ = ndimage.label(passable, structure=_FOUR)
    reach = labels == labels[ci, cj]
    unknown = ~known
    edge = np.zeros_like(unknown)
    edge[1:, :] |= unknown[:-1, :]
    edge[:-1, :] |= unknown[1:, :]
    edge[:, 1:] |= unknown[:, :-1]
    edge[:, :-1] |= unknown[:, 1:]
    cand = reach & edge & ~occ
    ii, jj = np.nonzero(cand)
    if ii.size == 0:
        return -1, -1
    d2 = (ii - ci) ** 2 + (jj - cj) ** 2
    # nonzero is row-major, so argmin already breaks ties by lowest flat index
    k = int(np.argmin(d2))
    return int(ii[k]), int(jj[k])
