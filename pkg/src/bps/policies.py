"""Single-move decision policies: BPS, Minimin and random."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from bps._backend import kernels
from bps.inference import build_tree, decision_beliefs, expected_outcome
from bps.oracle import rank
from bps.phe import HeuristicTable, PheModel, TransitionMatrix
from bps.puzzle import Move, PuzzleState, legal_moves


@dataclass(frozen=True)
class Decision:
    chosen: Move
    scores: Tuple[Tuple[Move, Optional[float]], ...]
    nodes: int = 0


def _pick(values: Sequence[float], rng: Optional[np.random.Generator]) -> int:
    """Index of the minimum; first in order, or uniform among ties with ``rng``."""
    values = np.asarray(values, dtype=np.float64)
    if rng is None:
        return int(np.argmin(values))
    best = np.flatnonzero(values == values.min())
    return int(best[rng.integers(len(best))])


def minimin_decide(
    root: PuzzleState,
    horizon: int,
    h: HeuristicTable,
    prune: bool = True,
    tie_rng: Optional[np.random.Generator] = None,
) -> Decision:
    """Move toward the frontier node with the smallest heuristic value.

    Frontier nodes are those at the horizon plus any goal reached earlier.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    moves, scores, nodes = kernels.minimin_scores(root.cells, horizon, h.values, rank(h.goal.goal_state), prune)
    i = _pick(scores, tie_rng)
    return Decision(Move(moves[i]), tuple((Move(m), float(s)) for m, s in zip(moves, scores)), int(nodes))


def bps_decide(
    root: PuzzleState,
    horizon: int,
    h: HeuristicTable,
    phe: PheModel,
    trans: TransitionMatrix,
    prior: np.ndarray,
    prune: bool = True,
    tie_rng: Optional[np.random.Generator] = None,
) -> Decision:
    """Move to the child with the smallest expected distance under the posterior."""
    tree = build_tree(root, horizon, h, prune)
    beliefs = decision_beliefs(tree, prior, phe, trans)
    expected = [expected_outcome(b) for _, b in beliefs]
    i = _pick(expected, tie_rng)
    return Decision(beliefs[i][0], tuple((m, e) for (m, _), e in zip(beliefs, expected)), len(tree))


def random_decide(root: PuzzleState, rng: np.random.Generator) -> Decision:
    moves = legal_moves(root)
    chosen = moves[int(rng.integers(len(moves)))]
    return Decision(chosen, tuple((m, None) for m in moves), 0)
