# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops; same API as ``bps._pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.string cimport memcpy

from bps.errors import ZeroMessageError

cnp.import_array()

cdef enum:
    NPERMS = 362880
    SENTINEL = 255
N_PERMS = NPERMS
UNREACHED = SENTINEL

cdef int FACT[9]
FACT[:] = [40320, 5040, 720, 120, 24, 6, 2, 1, 1]

# MOVES[blank][move] -> target cell or -1; move order Up, Down, Left, Right
cdef int MOVES[9][4]
MOVES[0][:] = [-1, 3, -1, 1]
MOVES[1][:] = [-1, 4, 0, 2]
MOVES[2][:] = [-1, 5, 1, -1]
MOVES[3][:] = [0, 6, -1, 4]
MOVES[4][:] = [1, 7, 3, 5]
MOVES[5][:] = [2, 8, 4, -1]
MOVES[6][:] = [3, -1, -1, 7]
MOVES[7][:] = [4, -1, 6, 8]
MOVES[8][:] = [5, -1, 7, -1]


cdef inline int _rank(const int* c) noexcept nogil:
    cdef int r = 0, i, j, smaller
    for i in range(8):
        smaller = 0
        for j in range(i + 1, 9):
            if c[j] < c[i]:
                smaller += 1
        r += smaller * FACT[i]
    return r


cdef inline int _unrank(int r, int* out) noexcept nogil:
    cdef int pool[9]
    cdef int i, k, q, n = 9
    for i in range(9):
        pool[i] = i
    for i in range(9):
        q = r // FACT[i]
        r = r % FACT[i]
        out[i] = pool[q]
        for k in range(q, n - 1):
            pool[k] = pool[k + 1]
        n -= 1
    return 0


cdef inline int _blank(const int* c) noexcept nogil:
    cdef int i
    for i in range(9):
        if c[i] == 0:
            return i
    return -1


cdef int _load(object cells, int* out) except -1:
    cdef int i
    if len(cells) != 9:
        raise ValueError("expected 9 cells")
    for i in range(9):
        out[i] = int(cells[i])
    return 0


def rank(cells):
    cdef int c[9]
    _load(cells, c)
    return _rank(c)


def unrank(long r):
    cdef int c[9]
    if r < 0 or r >= NPERMS:
        raise ValueError(f"rank {r} out of range [0, {NPERMS})")
    _unrank(<int>r, c)
    return tuple(c[i] for i in range(9))


def bfs_distances(goal_cells):
    out = np.full(NPERMS, SENTINEL, dtype=np.uint8)
    cdef cnp.uint8_t[::1] dist = out
    cdef int[::1] queue = np.empty(NPERMS, dtype=np.int32)
    cdef int c[9]
    cdef int head = 0, tail = 0, r, nr, blank, m, t, d
    _load(goal_cells, c)
    r = _rank(c)
    dist[r] = 0
    queue[tail] = r
    tail += 1
    with nogil:
        while head < tail:
            r = queue[head]
            head += 1
            d = dist[r] + 1
            _unrank(r, c)
            blank = _blank(c)
            for m in range(4):
                t = MOVES[blank][m]
                if t < 0:
                    continue
                c[blank] = c[t]
                c[t] = 0
                nr = _rank(c)
                c[t] = c[blank]
                c[blank] = 0
                if dist[nr] == SENTINEL:
                    dist[nr] = d
                    queue[tail] = nr
                    tail += 1
    return out


cdef class _TreeBuf:
    cdef public list parent, depth, move, key


cdef void _walk(int* c, int blank, int d, int last, int par, int horizon,
                int goal_rank, bint prune, _TreeBuf buf):
    cdef int idx = len(buf.key), r = _rank(c), m, t
    buf.parent.append(par)
    buf.depth.append(d)
    buf.move.append(last)
    buf.key.append(r)
    if d == horizon or (d > 0 and r == goal_rank):
        return
    for m in range(4):
        t = MOVES[blank][m]
        if t < 0 or (prune and last >= 0 and m == (last ^ 1)):
            continue
        c[blank] = c[t]
        c[t] = 0
        _walk(c, t, d + 1, m, idx, horizon, goal_rank, prune, buf)
        c[t] = c[blank]
        c[blank] = 0


def build_tree(root_cells, int horizon, int goal_rank, bint prune=True):
    cdef int c[9]
    _load(root_cells, c)
    buf = _TreeBuf()
    buf.parent = []
    buf.depth = []
    buf.move = []
    buf.key = []
    _walk(c, _blank(c), 0, -1, -1, horizon, goal_rank, prune, buf)
    return (
        np.asarray(buf.parent, dtype=np.int32),
        np.asarray(buf.depth, dtype=np.int32),
        np.asarray(buf.move, dtype=np.int8),
        np.asarray(buf.key, dtype=np.int32),
    )


cdef int _min_frontier(int* c, int blank, int d, int last, int horizon,
                       const cnp.uint8_t[::1] h, int goal_rank, bint prune,
                       long* count) noexcept nogil:
    cdef int r, m, t, v, best = 1 << 30
    count[0] += 1
    r = _rank(c)
    if d == horizon or r == goal_rank:
        return h[r]
    for m in range(4):
        t = MOVES[blank][m]
        if t < 0 or (prune and m == (last ^ 1)):
            continue
        c[blank] = c[t]
        c[t] = 0
        v = _min_frontier(c, t, d + 1, m, horizon, h, goal_rank, prune, count)
        c[t] = c[blank]
        c[blank] = 0
        if v < best:
            best = v
    return best


def minimin_scores(root_cells, int horizon, htable, int goal_rank, bint prune=True):
    cdef int c[9]
    cdef const cnp.uint8_t[::1] h = np.ascontiguousarray(htable, dtype=np.uint8)
    cdef long count = 1
    cdef int blank, m, t, v
    _load(root_cells, c)
    blank = _blank(c)
    moves = []
    scores = []
    for m in range(4):
        t = MOVES[blank][m]
        if t < 0:
            continue
        c[blank] = c[t]
        c[t] = 0
        with nogil:
            v = _min_frontier(c, t, 1, m, horizon, h, goal_rank, prune, &count)
        c[t] = c[blank]
        c[blank] = 0
        moves.append(m)
        scores.append(v)
    return moves, scores, count


cdef void _count(int* c, int blank, int d, int last, int horizon, int goal_rank,
                 bint prune, cnp.int64_t[::1] counts) noexcept nogil:
    cdef int m, t
    counts[d] += 1
    if d == horizon or (d > 0 and _rank(c) == goal_rank):
        return
    for m in range(4):
        t = MOVES[blank][m]
        if t < 0 or (prune and last >= 0 and m == (last ^ 1)):
            continue
        c[blank] = c[t]
        c[t] = 0
        _count(c, t, d + 1, m, horizon, goal_rank, prune, counts)
        c[t] = c[blank]
        c[blank] = 0


def level_counts(root_cells, int horizon, int goal_rank, bint prune=True):
    cdef int c[9]
    out = np.zeros(horizon + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = out
    _load(root_cells, c)
    with nogil:
        _count(c, _blank(c), 0, -1, horizon, goal_rank, prune, counts)
    return out


def collect(depth, lik_rows, trans):
    cdef const int[::1] dep = np.ascontiguousarray(depth, dtype=np.int32)
    cdef const double[:, ::1] lik = np.ascontiguousarray(lik_rows, dtype=np.float64)
    cdef const double[:, ::1] T = np.ascontiguousarray(trans, dtype=np.float64)
    cdef Py_ssize_t n = dep.shape[0], D = lik.shape[1]
    cdef Py_ssize_t maxd = 0, j, k, i, top = 0, level
    cdef int base = dep[0]
    cdef double s, v
    cdef Py_ssize_t peak = 0
    for j in range(n):
        if dep[j] - base > maxd:
            maxd = dep[j] - base
    acc_arr = np.empty((maxd + 1, D), dtype=np.float64)
    cdef double[:, ::1] acc = acc_arr
    kids = []
    for j in range(n):
        level = dep[j] - base
        if (j and level <= 0) or level > top:
            raise ValueError("depth array does not describe a single subtree")
        while top > level:
            top -= 1
            _close(acc, T, top, D)
            if top == 1:
                kids.append(np.array(acc[1]))
        memcpy(&acc[level, 0], &lik[j, 0], D * sizeof(double))
        top = level + 1
        if top > peak:
            peak = top
    while top > 1:
        top -= 1
        _close(acc, T, top, D)
        if top == 1:
            kids.append(np.array(acc[1]))
    _normalize(acc, 0, D)
    root = np.array(acc[0])
    kid_arr = np.array(kids) if kids else np.zeros((0, D))
    return root, kid_arr, peak


cdef int _normalize(double[:, ::1] acc, Py_ssize_t level, Py_ssize_t D) except -1:
    cdef double s = 0.0
    cdef Py_ssize_t k
    for k in range(D):
        s += acc[level, k]
    if not s > 0.0:
        raise ZeroMessageError("evidence message is identically zero")
    for k in range(D):
        acc[level, k] /= s
    return 0


cdef int _close(double[:, ::1] acc, const double[:, ::1] T, Py_ssize_t level,
                Py_ssize_t D) except -1:
    # normalize acc[level], then fold T @ acc[level] into acc[level - 1]
    cdef Py_ssize_t i, k
    cdef double v
    _normalize(acc, level, D)
    for i in range(D):
        v = 0.0
        for k in range(D):
            v += T[i, k] * acc[level, k]
        acc[level - 1, i] *= v
    return 0
