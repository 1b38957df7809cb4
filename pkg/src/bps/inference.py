"""Belief propagation over fixed-depth search trees.

Every tree node carries an unknown outcome and one observed heuristic value.
Outcomes are linked parent to child by a transition matrix, and each
heuristic value is linked to its node's outcome by the PHE likelihood, so
the whole thing is a tree-shaped Bayesian network and exact marginals
come from one rootward and one leafward sweep.

Trees are stored as flat preorder arrays.  Nothing here knows about the
Eight Puzzle except :func:`build_tree`, which asks the kernels to expand a
board.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from bps._backend import kernels
from bps.errors import CapExceededError, ZeroMessageError
from bps.oracle import rank
from bps.phe import HeuristicTable, PheModel, TransitionMatrix
from bps.puzzle import Move, PuzzleState

BRUTE_FORCE_CAP = 2_000_000


@dataclass
class PassStats:
    """Instrumentation filled in by the rootward pass."""

    nodes: int = 0
    peak_live_messages: int = 0


@dataclass(frozen=True, eq=False)
class SearchTree:
    """Preorder arrays; node 0 is the root.

    ``key`` identifies the node's state (the permutation rank for puzzle
    trees) and ``move`` the move that generated it (-1 at the root).
    """

    parent: np.ndarray
    depth: np.ndarray
    h: np.ndarray
    move: np.ndarray
    key: np.ndarray

    @classmethod
    def from_depths(cls, depth: Sequence[int], h: Sequence[int]) -> "SearchTree":
        """Generic tree from preorder depths; used for synthetic networks."""
        depth = np.asarray(depth, dtype=np.int32)
        parent = np.full(len(depth), -1, dtype=np.int32)
        stack: List[int] = []
        for i, d in enumerate(depth):
            del stack[d:]
            if d != len(stack):
                raise ValueError("depths are not a valid preorder")
            parent[i] = stack[-1] if stack else -1
            stack.append(i)
        if (depth[1:] == 0).any():
            raise ValueError("more than one root")
        n = len(depth)
        return cls(parent, depth, np.asarray(h, dtype=np.int64), np.full(n, -1, np.int8), np.arange(n))

    def __len__(self) -> int:
        return len(self.depth)

    @property
    def horizon(self) -> int:
        return int(self.depth.max())

    def children(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.parent == i)

    def subtree_end(self, i: int) -> int:
        later = np.flatnonzero(self.depth[i + 1 :] <= self.depth[i])
        return i + 1 + int(later[0]) if later.size else len(self)

    def state(self, i: int) -> PuzzleState:
        return PuzzleState(kernels.unrank(int(self.key[i])))


def build_tree(
    root: PuzzleState,
    horizon: int,
    h: HeuristicTable,
    prune: bool = True,
) -> SearchTree:
    """Full-width expansion to ``horizon``; goal nodes are not expanded.

    With ``prune`` a node never regenerates its parent's state.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    goal_rank = rank(h.goal.goal_state)
    parent, depth, move, key = kernels.build_tree(root.cells, horizon, goal_rank, prune)
    return SearchTree(parent, depth, h.values[key].astype(np.int64), move, key)


def normalize(v: np.ndarray) -> np.ndarray:
    s = v.sum()
    if not s > 0:
        raise ZeroMessageError("evidence message is identically zero")
    return v / s


def _check_domains(phe: PheModel, trans: TransitionMatrix, prior: Optional[np.ndarray] = None) -> None:
    size = phe.likelihood.shape[1]
    if trans.p.shape != (size, size):
        raise ValueError(f"transition matrix {trans.p.shape} does not match outcome domain {size}")
    if prior is not None and len(prior) != size:
        raise ValueError(f"prior has {len(prior)} entries, outcome domain has {size}")


def _collect(tree: SearchTree, start: int, phe: PheModel, trans: TransitionMatrix, stats: Optional[PassStats]):
    end = tree.subtree_end(start)
    lik = phe.evidence(tree.h[start:end])
    root, kids, peak = kernels.collect(tree.depth[start:end], lik, trans.p)
    if stats is not None:
        stats.nodes = end - start
        stats.peak_live_messages = int(peak)
    return root, kids


def lambda_message(
    tree: SearchTree,
    node: int,
    phe: PheModel,
    trans: TransitionMatrix,
    stats: Optional[PassStats] = None,
) -> np.ndarray:
    """Normalized likelihood of the evidence in ``node``'s subtree given its outcome.

    Evaluated depth-first, so at most one accumulator per tree level is live.
    """
    _check_domains(phe, trans)
    root, _ = _collect(tree, node, phe, trans, stats)
    return root


def root_belief(
    tree: SearchTree,
    prior: np.ndarray,
    phe: PheModel,
    trans: TransitionMatrix,
    stats: Optional[PassStats] = None,
) -> np.ndarray:
    _check_domains(phe, trans, prior)
    lam, _ = _collect(tree, 0, phe, trans, stats)
    return normalize(np.asarray(prior, dtype=np.float64) * lam)


def decision_beliefs(
    tree: SearchTree,
    prior: np.ndarray,
    phe: PheModel,
    trans: TransitionMatrix,
    stats: Optional[PassStats] = None,
) -> List[Tuple[Move, np.ndarray]]:
    """Posterior outcome beliefs for each child of the root, in child order.

    Children of synthetic trees (no moves recorded) are labelled by node index.
    """
    _check_domains(phe, trans, prior)
    _, kids = _collect(tree, 0, phe, trans, stats)
    T = trans.p
    up = [T @ lam for lam in kids]
    root_ev = np.asarray(prior, dtype=np.float64) * phe.evidence(tree.h[:1])[0]
    child_idx = tree.children(0)
    out = []
    for i, lam in enumerate(kids):
        msg = root_ev.copy()
        for j, u in enumerate(up):
            if j != i:
                msg *= u
        pi = T.T @ normalize(msg)
        mv = int(tree.move[child_idx[i]])
        out.append((Move(mv) if mv >= 0 else int(child_idx[i]), normalize(pi * lam)))
    return out


def expected_outcome(b: np.ndarray) -> float:
    return float(np.dot(np.arange(len(b)), b))


def all_beliefs(tree: SearchTree, prior: np.ndarray, phe: PheModel, trans: TransitionMatrix) -> np.ndarray:
    """Beliefs for every node (two full sweeps, O(nodes) storage); shape (n, D)."""
    _check_domains(phe, trans, prior)
    T = trans.p
    n = len(tree)
    lik = phe.evidence(tree.h)
    kids = [[] for _ in range(n)]
    for i in range(1, n):
        kids[tree.parent[i]].append(i)
    lam = np.empty_like(lik)
    up = np.empty_like(lik)
    for i in range(n - 1, -1, -1):
        v = lik[i].copy()
        for c in kids[i]:
            v *= up[c]
        lam[i] = normalize(v)
        up[i] = T @ lam[i]
    pi = np.empty_like(lik)
    pi[0] = normalize(np.asarray(prior, dtype=np.float64))
    for i in range(n):
        for c in kids[i]:
            msg = pi[i] * lik[i]
            for c2 in kids[i]:
                if c2 != c:
                    msg = msg * up[c2]
            pi[c] = normalize(T.T @ normalize(msg))
    return np.array([normalize(pi[i] * lam[i]) for i in range(n)])


def brute_force_beliefs(
    tree: SearchTree,
    prior: np.ndarray,
    phe: PheModel,
    trans: TransitionMatrix,
    cap: int = BRUTE_FORCE_CAP,
) -> np.ndarray:
    """Marginals by enumerating the full joint over all node outcomes."""
    _check_domains(phe, trans, prior)
    n = len(tree)
    size = phe.likelihood.shape[1]
    if size**n > cap:
        raise CapExceededError(f"joint of {size}^{n} entries exceeds cap {cap}")

    def along(vec, *axes):
        shape = [1] * n
        for a in axes:
            shape[a] = size
        return np.reshape(vec, shape)

    joint = along(np.asarray(prior, dtype=np.float64), 0)
    for i in range(n):
        joint = joint * along(phe.likelihood[tree.h[i]], i)
        p = tree.parent[i]
        if p >= 0:
            block = trans.p if p < i else trans.p.T
            joint = joint * along(block, min(p, i), max(p, i))
    total = joint.sum()
    if not total > 0:
        raise ZeroMessageError("evidence has zero probability under the model")
    out = np.empty((n, size))
    for i in range(n):
        others = tuple(a for a in range(n) if a != i)
        out[i] = joint.sum(axis=others) / total
    return out
