"""Pure-Python implementations of the hot loops.

Mirrors the API of the compiled ``_kernels`` module exactly; used when the
extension is not built or when ``BPS_PURE_PYTHON=1``.
"""

from __future__ import annotations

from collections import deque
from math import factorial

import numpy as np

from bps.errors import ZeroMessageError
from bps.puzzle import MOVE_TABLE

N_PERMS = 362880
UNREACHED = 255
_FACT = [factorial(8 - i) for i in range(9)]


def rank(cells) -> int:
    r = 0
    for i in range(8):
        ci = cells[i]
        smaller = 0
        for j in range(i + 1, 9):
            if cells[j] < ci:
                smaller += 1
        r += smaller * _FACT[i]
    return r


def unrank(r: int) -> tuple:
    if not 0 <= r < N_PERMS:
        raise ValueError(f"rank {r} out of range [0, {N_PERMS})")
    pool = list(range(9))
    out = []
    for i in range(9):
        q, r = divmod(r, _FACT[i])
        out.append(pool.pop(q))
    return tuple(out)


def bfs_distances(goal_cells) -> np.ndarray:
    dist = np.full(N_PERMS, UNREACHED, dtype=np.uint8)
    start = tuple(goal_cells)
    seen = {start: 0}
    queue = deque([(start, start.index(0))])
    while queue:
        cells, blank = queue.popleft()
        d = seen[cells] + 1
        for target in MOVE_TABLE[blank]:
            if target < 0:
                continue
            nxt = list(cells)
            nxt[blank], nxt[target] = nxt[target], 0
            nxt = tuple(nxt)
            if nxt not in seen:
                seen[nxt] = d
                queue.append((nxt, target))
    for cells, d in seen.items():
        dist[rank(cells)] = d
    return dist


def build_tree(root_cells, horizon: int, goal_rank: int, prune: bool = True):
    """Preorder arrays (parent, depth, move, key) of the lookahead tree."""
    parent, depth, move, key = [], [], [], []
    cells = list(root_cells)

    def visit(blank, d, last, par):
        idx = len(key)
        r = rank(cells)
        parent.append(par)
        depth.append(d)
        move.append(last)
        key.append(r)
        if d == horizon or (d > 0 and r == goal_rank):
            return
        row = MOVE_TABLE[blank]
        for m in range(4):
            t = row[m]
            if t < 0 or (prune and last >= 0 and m == last ^ 1):
                continue
            cells[blank], cells[t] = cells[t], 0
            visit(t, d + 1, m, idx)
            cells[t], cells[blank] = cells[blank], 0

    visit(cells.index(0), 0, -1, -1)
    return (
        np.asarray(parent, dtype=np.int32),
        np.asarray(depth, dtype=np.int32),
        np.asarray(move, dtype=np.int8),
        np.asarray(key, dtype=np.int32),
    )


def minimin_scores(root_cells, horizon: int, htable, goal_rank: int, prune: bool = True):
    """Minimum frontier h below each root child; returns (moves, scores, nodes)."""
    cells = list(root_cells)
    count = [1]

    def visit(blank, d, last):
        count[0] += 1
        r = rank(cells)
        if d == horizon or r == goal_rank:
            return int(htable[r])
        best = 1 << 30
        row = MOVE_TABLE[blank]
        for m in range(4):
            t = row[m]
            if t < 0 or (prune and m == last ^ 1):
                continue
            cells[blank], cells[t] = cells[t], 0
            v = visit(t, d + 1, m)
            cells[t], cells[blank] = cells[blank], 0
            if v < best:
                best = v
        return best

    blank = cells.index(0)
    moves, scores = [], []
    for m in range(4):
        t = MOVE_TABLE[blank][m]
        if t < 0:
            continue
        cells[blank], cells[t] = cells[t], 0
        scores.append(visit(t, 1, m))
        cells[t], cells[blank] = cells[blank], 0
        moves.append(m)
    return moves, scores, count[0]


def level_counts(root_cells, horizon: int, goal_rank: int, prune: bool = True) -> np.ndarray:
    counts = np.zeros(horizon + 1, dtype=np.int64)
    cells = list(root_cells)

    def visit(blank, d, last):
        counts[d] += 1
        if d == horizon or (d > 0 and rank(cells) == goal_rank):
            return
        row = MOVE_TABLE[blank]
        for m in range(4):
            t = row[m]
            if t < 0 or (prune and last >= 0 and m == last ^ 1):
                continue
            cells[blank], cells[t] = cells[t], 0
            visit(t, d + 1, m)
            cells[t], cells[blank] = cells[blank], 0

    visit(cells.index(0), 0, -1)
    return counts


def collect(depth, lik_rows, trans):
    """Rootward pass over a preorder tree slice.

    ``depth`` gives preorder depths (slice root first), ``lik_rows[j]`` the
    heuristic likelihood vector of node j and ``trans[i, j]`` the probability
    of child outcome j given parent outcome i.  Returns the normalized
    rootward message of the slice root, those of its children (in order) and
    the peak number of simultaneously live accumulator vectors.
    """
    depth = np.asarray(depth)
    lik_rows = np.asarray(lik_rows, dtype=np.float64)
    trans = np.asarray(trans, dtype=np.float64)
    n = len(depth)
    base = int(depth[0])
    stack = []
    children = []
    peak = 0

    def close():
        acc = stack.pop()
        s = acc.sum()
        if not s > 0:
            raise ZeroMessageError("evidence message is identically zero")
        acc /= s
        if stack:
            if len(stack) == 1:
                children.append(acc)
            stack[-1] *= trans @ acc
        return acc

    for j in range(n):
        level = int(depth[j]) - base
        if (j and level <= 0) or level > len(stack):
            raise ValueError("depth array does not describe a single subtree")
        while len(stack) > level:
            close()
        stack.append(lik_rows[j].copy())
        peak = max(peak, len(stack))
    while len(stack) > 1:
        close()
    root = close()
    width = lik_rows.shape[1]
    kids = np.array(children) if children else np.zeros((0, width))
    return root, kids, peak
