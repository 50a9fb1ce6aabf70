# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled grid kernels.

Must stay bit-for-bit equivalent to ``_pykernels``; the test suite runs both
and compares outputs.  No fast-math: the float operation order is part of the
contract.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, INFINITY, sqrt
from libc.stdlib cimport calloc, malloc, realloc, free
from libc.string cimport memset

cnp.import_array()

cdef double SQRT2 = sqrt(2.0)
cdef double OCTILE_K = sqrt(2.0) - 1.0

cdef int[8] DI = [-1, 1, 0, 0, -1, -1, 1, 1]
cdef int[8] DJ = [0, 0, -1, 1, -1, 1, -1, 1]


# ---------------------------------------------------------------- heap

cdef struct Entry:
    double key
    double tie  # secondary key: A* pushes h so f-ties go to the cell nearer the goal
    Py_ssize_t idx

cdef struct Heap:
    Entry* data
    Py_ssize_t size
    Py_ssize_t cap

cdef inline bint _lt(Entry a, Entry b) noexcept nogil:
    if a.key != b.key:
        return a.key < b.key
    if a.tie != b.tie:
        return a.tie < b.tie
    return a.idx < b.idx

cdef int heap_init(Heap* h, Py_ssize_t cap) noexcept nogil:
    h.data = <Entry*> malloc(cap * sizeof(Entry))
    h.size = 0
    h.cap = cap
    return 0 if h.data != NULL else -1

cdef int heap_push(Heap* h, double key, double tie, Py_ssize_t idx) noexcept nogil:
    cdef Entry* grown
    cdef Py_ssize_t pos, parent
    cdef Entry e
    if h.size == h.cap:
        grown = <Entry*> realloc(h.data, 2 * h.cap * sizeof(Entry))
        if grown == NULL:
            return -1
        h.data = grown
        h.cap *= 2
    e.key = key
    e.tie = tie
    e.idx = idx
    pos = h.size
    h.size += 1
    while pos > 0:
        parent = (pos - 1) >> 1
        if _lt(e, h.data[parent]):
            h.data[pos] = h.data[parent]
            pos = parent
        else:
            break
    h.data[pos] = e
    return 0

cdef Entry heap_pop(Heap* h) noexcept nogil:
    cdef Entry top = h.data[0]
    cdef Entry last
    cdef Py_ssize_t pos = 0, child, n
    h.size -= 1
    n = h.size
    if n > 0:
        last = h.data[n]
        while True:
            child = 2 * pos + 1
            if child >= n:
                break
            if child + 1 < n and _lt(h.data[child + 1], h.data[child]):
                child += 1
            if _lt(h.data[child], last):
                h.data[pos] = h.data[child]
                pos = child
            else:
                break
        h.data[pos] = last
    return top


# ---------------------------------------------------------------- raycast

def raycast(const cnp.uint8_t[:, ::1] occ, double res, double ox, double oy,
            const double[::1] dir_x, const double[::1] dir_y, double max_range):
    """March rays through ``occ``; return (distance, hit_i, hit_j) arrays.

    A ray that leaves the grid or exceeds ``max_range`` reports ``inf`` and
    hit index ``-1``.  A ray starting inside an occupied cell reports 0.
    """
    cdef Py_ssize_t n = dir_x.shape[0], k
    cdef Py_ssize_t ni = occ.shape[0], nj = occ.shape[1]
    out_d = np.full(n, np.inf)
    out_i = np.full(n, -1, dtype=np.int64)
    out_j = np.full(n, -1, dtype=np.int64)
    cdef double[::1] d_v = out_d
    cdef cnp.int64_t[::1] i_v = out_i
    cdef cnp.int64_t[::1] j_v = out_j
    cdef double x = ox / res, y = oy / res, dx, dy, tmx, tmy, tdx, tdy, t, limit = max_range / res
    cdef Py_ssize_t ix0 = <Py_ssize_t> floor(x), iy0 = <Py_ssize_t> floor(y), ix, iy
    cdef int sx, sy
    if ix0 < 0 or iy0 < 0 or ix0 >= ni or iy0 >= nj:
        return out_d, out_i, out_j
    with nogil:
        for k in range(n):
            ix = ix0
            iy = iy0
            if occ[ix, iy]:
                d_v[k] = 0.0
                i_v[k] = ix
                j_v[k] = iy
                continue
            dx = dir_x[k]
            dy = dir_y[k]
            if dx > 0:
                sx = 1
                tdx = 1.0 / dx
                tmx = ((ix + 1) - x) * tdx
            elif dx < 0:
                sx = -1
                tdx = -1.0 / dx
                tmx = (x - ix) * tdx
            else:
                sx = 0
                tdx = INFINITY
                tmx = INFINITY
            if dy > 0:
                sy = 1
                tdy = 1.0 / dy
                tmy = ((iy + 1) - y) * tdy
            elif dy < 0:
                sy = -1
                tdy = -1.0 / dy
                tmy = (y - iy) * tdy
            else:
                sy = 0
                tdy = INFINITY
                tmy = INFINITY
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
                if occ[ix, iy]:
                    d_v[k] = t * res
                    i_v[k] = ix
                    j_v[k] = iy
                    break
    return out_d, out_i, out_j


# ---------------------------------------------------------------- A*

cdef inline double octile(Py_ssize_t i, Py_ssize_t j, Py_ssize_t gi, Py_ssize_t gj) noexcept nogil:
    cdef Py_ssize_t a = i - gi if i > gi else gi - i
    cdef Py_ssize_t b = j - gj if j > gj else gj - j
    if a < b:
        return OCTILE_K * a + b
    return OCTILE_K * b + a


cdef struct Node:
    double g
    cnp.int64_t parent
    cnp.uint32_t seen  # g/parent valid when equal to the current generation
    cnp.uint32_t closed


cdef class _AStarScratch:
    """Per-shape node table reused across calls; stamps replace clearing."""

    cdef Node* nodes
    cdef Py_ssize_t total
    cdef cnp.uint32_t gen

    def __cinit__(self, Py_ssize_t total):
        self.nodes = <Node*> calloc(total, sizeof(Node))
        if self.nodes == NULL:
            raise MemoryError()
        self.total = total
        self.gen = 0

    def __dealloc__(self):
        free(self.nodes)

    cdef cnp.uint32_t next_gen(self):
        if self.gen == 0xFFFFFFFF:
            memset(self.nodes, 0, self.total * sizeof(Node))
            self.gen = 0
        self.gen += 1
        return self.gen


_scratch = {}


def astar(const cnp.uint8_t[:, ::1] occ, Py_ssize_t si, Py_ssize_t sj,
          Py_ssize_t gi, Py_ssize_t gj):
    """8-connected A* without corner cutting.

    Returns ``(path, reached)`` where ``path`` is an (n, 2) int64 array.  When
    the goal cannot be reached, the path ends at the expanded cell nearest the
    goal (squared Euclidean, ties by lowest flat index).
    """
    cdef Py_ssize_t ni = occ.shape[0], nj = occ.shape[1], total = ni * nj
    cdef _AStarScratch sc = _scratch.get(total)
    if sc is None:
        sc = _scratch[total] = _AStarScratch(total)
    cdef cnp.uint32_t gen = sc.next_gen()
    cdef Node* nodes = sc.nodes
    cdef Node* nd
    cdef const cnp.uint8_t* o = &occ[0, 0]
    cdef Heap h
    cdef Entry e
    cdef Py_ssize_t start = si * nj + sj, goal = gi * nj + gj, cur, nb, i, j, ni2, nj2
    cdef Py_ssize_t di, dj, d2, best = -1, best_d2 = 0
    cdef double ng, gcur, step, hv
    cdef int k
    cdef bint reached = False
    if heap_init(&h, 4096) != 0:
        raise MemoryError()
    try:
        with nogil:
            nodes[start].g = 0.0
            nodes[start].parent = -1
            nodes[start].seen = gen
            hv = octile(si, sj, gi, gj)
            heap_push(&h, hv, hv, start)
            while h.size > 0:
                e = heap_pop(&h)
                cur = e.idx
                if nodes[cur].closed == gen:
                    continue
                nodes[cur].closed = gen
                if cur == goal:
                    reached = True
                    break
                i = cur // nj
                j = cur - i * nj
                di = i - gi
                dj = j - gj
                d2 = di * di + dj * dj
                if best < 0 or d2 < best_d2 or (d2 == best_d2 and cur < best):
                    best = cur
                    best_d2 = d2
                gcur = nodes[cur].g
                for k in range(8):
                    ni2 = i + DI[k]
                    nj2 = j + DJ[k]
                    if ni2 < 0 or nj2 < 0 or ni2 >= ni or nj2 >= nj:
                        continue
                    nb = ni2 * nj + nj2
                    if o[nb]:
                        continue
                    nd = &nodes[nb]
                    if nd.closed == gen:
                        continue
                    if k >= 4:
                        if o[ni2 * nj + j] or o[i * nj + nj2]:
                            continue
                        step = SQRT2
                    else:
                        step = 1.0
                    ng = gcur + step
                    if nd.seen != gen or ng < nd.g:
                        nd.seen = gen
                        nd.g = ng
                        nd.parent = cur
                        hv = octile(ni2, nj2, gi, gj)
                        if heap_push(&h, ng + hv, hv, nb) != 0:
                            break
    finally:
        free(h.data)
    if reached:
        best = goal
    cells = []
    cur = best
    while cur != -1:
        cells.append(cur)
        cur = nodes[cur].parent
    cells.reverse()
    flat = np.asarray(cells, dtype=np.int64)
    path = np.stack([flat // nj, flat % nj], axis=1)
    return path, bool(reached)


# ---------------------------------------------------------------- Dijkstra

def distance_field(const cnp.uint8_t[:, ::1] occ, const cnp.int64_t[::1] sources, double cell_size):
    """Multi-source Dijkstra over free cells (same moves as :func:`astar`).

    Sources start at distance 0; the result is scaled by ``cell_size``.
    """
    cdef Py_ssize_t ni = occ.shape[0], nj = occ.shape[1], total = ni * nj
    dist_arr = np.full(total, np.inf)
    cdef double[::1] dist = dist_arr
    closed_arr = np.zeros(total, dtype=np.uint8)
    cdef cnp.uint8_t[::1] closed = closed_arr
    cdef Heap h
    cdef Entry e
    cdef Py_ssize_t s, cur, nb, i, j, ni2, nj2
    cdef double nd, step
    cdef int k
    if heap_init(&h, 1024) != 0:
        raise MemoryError()
    try:
        with nogil:
            for s in range(sources.shape[0]):
                cur = sources[s]
                if dist[cur] > 0.0:
                    dist[cur] = 0.0
                    heap_push(&h, 0.0, 0.0, cur)
            while h.size > 0:
                e = heap_pop(&h)
                cur = e.idx
                if closed[cur]:
                    continue
                closed[cur] = 1
                i = cur // nj
                j = cur - i * nj
                for k in range(8):
                    ni2 = i + DI[k]
                    nj2 = j + DJ[k]
                    if ni2 < 0 or nj2 < 0 or ni2 >= ni or nj2 >= nj:
                        continue
                    if occ[ni2, nj2]:
                        continue
                    nb = ni2 * nj + nj2
                    if closed[nb]:
                        continue
                    if k >= 4:
                        if occ[ni2, j] or occ[i, nj2]:
                            continue
                        step = SQRT2
                    else:
                        step = 1.0
                    nd = e.key + step
                    if nd < dist[nb]:
                        dist[nb] = nd
                        if heap_push(&h, nd, 0.0, nb) != 0:
                            break
    finally:
        free(h.data)
    return (dist_arr * cell_size).reshape(ni, nj)


# ---------------------------------------------------------------- frontier

def nearest_frontier(const cnp.uint8_t[:, ::1] occ, const cnp.uint8_t[:, ::1] trail,
                     int radius, Py_ssize_t ci, Py_ssize_t cj):
    """Nearest reachable known-free cell bordering unknown space.

    Known space is the union of discs of ``radius`` cells around trail cells
    plus every occupied cell.  Reachability is 4-connected from ``(ci, cj)``
    through known free cells.  Returns ``(i, j)`` or ``(-1, -1)``.
    """
    cdef Py_ssize_t ni = occ.shape[0], nj = occ.shape[1], i, j, a, b, lo_a, hi_a, lo_b, hi_b
    cdef Py_ssize_t head = 0, tail = 0, cur, ni2, nj2, best = -1, d2, best_d2 = 0
    cdef int k, r2 = radius * radius
    known_arr = np.zeros((ni, nj), dtype=np.uint8)
    seen_arr = np.zeros((ni, nj), dtype=np.uint8)
    queue_arr = np.empty(ni * nj, dtype=np.int64)
    cdef cnp.uint8_t[:, ::1] known = known_arr
    cdef cnp.uint8_t[:, ::1] seen = seen_arr
    cdef cnp.int64_t[::1] queue = queue_arr
    cdef bint edge
    with nogil:
        for i in range(ni):
            for j in range(nj):
                if occ[i, j]:
                    known[i, j] = 1
                if not trail[i, j]:
                    continue
                lo_a = i - radius if i >= radius else 0
                hi_a = i + radius if i + radius < ni else ni - 1
                lo_b = j - radius if j >= radius else 0
                hi_b = j + radius if j + radius < nj else nj - 1
                for a in range(lo_a, hi_a + 1):
                    for b in range(lo_b, hi_b + 1):
                        if (a - i) * (a - i) + (b - j) * (b - j) <= r2:
                            known[a, b] = 1
        if 0 <= ci < ni and 0 <= cj < nj:
            seen[ci, cj] = 1
            queue[tail] = ci * nj + cj
            tail += 1
        while head < tail:
            cur = queue[head]
            head += 1
            i = cur // nj
            j = cur - i * nj
            edge = False
            for k in range(4):
                ni2 = i + DI[k]
                nj2 = j + DJ[k]
                if ni2 < 0 or nj2 < 0 or ni2 >= ni or nj2 >= nj:
                    continue
                if not known[ni2, nj2]:
                    edge = True
                    continue
                if occ[ni2, nj2] or seen[ni2, nj2]:
                    continue
                seen[ni2, nj2] = 1
                queue[tail] = ni2 * nj + nj2
                tail += 1
            if edge and not occ[i, j]:
                a = i - ci
                b = j - cj
                d2 = a * a + b * b
                if best < 0 or d2 < best_d2 or (d2 == best_d2 and cur < best):
                    best = cur
                    best_d2 = d2
    if best < 0:
        return -1, -1
    return int(best // nj), int(best % nj)
