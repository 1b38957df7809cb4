"""Exact goal distances for every reachable Eight Puzzle state.

The table is indexed by the lexicographic (Lehmer) rank of the cell
sequence, one byte per permutation, with 255 marking permutations outside
the goal's reachability class.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Union

import numpy as np

from bps._backend import kernels
from bps.errors import UnreachableStateError
from bps.puzzle import DEFAULT_GOAL, GoalSpec, Move, PuzzleState, apply, neighbors

N_PERMS = 362880
N_REACHABLE = 181440
UNREACHED = 255

MAGIC = b"BPS8"
VERSION = 1
HEADER_SIZE = len(MAGIC) + 1 + 9


class TableFormatError(ValueError):
    """A distance-table file failed to parse."""


def rank(s: Union[PuzzleState, tuple]) -> int:
    cells = s.cells if isinstance(s, PuzzleState) else s
    return kernels.rank(cells)


def unrank(i: int) -> PuzzleState:
    if not 0 <= i < N_PERMS:
        raise ValueError(f"rank {i} out of range [0, {N_PERMS})")
    return PuzzleState(kernels.unrank(int(i)))


_FACT = np.array([40320, 5040, 720, 120, 24, 6, 2, 1, 1], dtype=np.int64)


def all_permutations() -> np.ndarray:
    """Every permutation of 0..8 as a (362880, 9) uint8 array, in rank order."""
    return np.array(list(itertools.permutations(range(9))), dtype=np.uint8)


def ranks_of(perms: np.ndarray) -> np.ndarray:
    """Vectorized rank over the rows of an (n, 9) array."""
    perms = np.asarray(perms)
    smaller = (perms[:, None, :] < perms[:, :, None]) & np.triu(np.ones((9, 9), bool), 1)
    return smaller.sum(axis=2) @ _FACT


@dataclass(frozen=True, eq=False)
class DistanceTable:
    distances: np.ndarray
    goal: GoalSpec = DEFAULT_GOAL

    def __post_init__(self) -> None:
        d = np.asarray(self.distances, dtype=np.uint8)
        if d.shape != (N_PERMS,):
            raise ValueError(f"expected {N_PERMS} entries, got {d.shape}")
        d.setflags(write=False)
        object.__setattr__(self, "distances", d)

    @cached_property
    def reachable_ranks(self) -> np.ndarray:
        return np.flatnonzero(self.distances != UNREACHED)

    @property
    def max_distance(self) -> int:
        return int(self.distances[self.reachable_ranks].max())

    @property
    def goal_rank(self) -> int:
        return rank(self.goal.goal_state)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DistanceTable):
            return NotImplemented
        return self.goal == other.goal and np.array_equal(self.distances, other.distances)

    def to_bytes(self) -> bytes:
        return MAGIC + bytes([VERSION]) + bytes(self.goal.cells) + self.distances.tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "DistanceTable":
        if blob[:4] != MAGIC:
            raise TableFormatError(f"bad magic {blob[:4]!r}")
        if len(blob) < HEADER_SIZE or blob[4] != VERSION:
            raise TableFormatError("unsupported table version")
        if len(blob) != HEADER_SIZE + N_PERMS:
            raise TableFormatError(f"expected {HEADER_SIZE + N_PERMS} bytes, got {len(blob)}")
        try:
            goal = GoalSpec(PuzzleState(tuple(blob[5:HEADER_SIZE])))
        except ValueError as exc:
            raise TableFormatError(str(exc)) from exc
        dist = np.frombuffer(blob, dtype=np.uint8, offset=HEADER_SIZE).copy()
        return cls(dist, goal)

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "DistanceTable":
        return cls.from_bytes(Path(path).read_bytes())


def build_distance_table(g: GoalSpec = DEFAULT_GOAL) -> DistanceTable:
    """Breadth-first enumeration from the goal over unit-cost blank moves."""
    return DistanceTable(kernels.bfs_distances(g.cells), g)


def exact_distance(t: DistanceTable, s: PuzzleState) -> int:
    d = int(t.distances[rank(s)])
    if d == UNREACHED:
        raise UnreachableStateError(f"state {s} is not reachable from goal {t.goal.goal_state}")
    return d


def is_toward_goal(t: DistanceTable, s: PuzzleState, m: Move) -> bool:
    return exact_distance(t, apply(s, m)) == exact_distance(t, s) - 1


def toward_goal_moves(t: DistanceTable, s: PuzzleState) -> list:
    d = exact_distance(t, s)
    return [m for m, n in neighbors(s) if exact_distance(t, n) == d - 1]


def distance_histogram(t: DistanceTable) -> np.ndarray:
    """Number of reachable states at each distance 0..max."""
    return np.bincount(t.distances[t.reachable_ranks], minlength=t.max_distance + 1)


def distance_prior(t: DistanceTable, min_distance: int = 0) -> np.ndarray:
    """Normalized distance histogram, optionally restricted to d >= min_distance."""
    hist = distance_histogram(t).astype(np.float64)
    hist[:min_distance] = 0.0
    total = hist.sum()
    if total <= 0:
        raise ValueError(f"no reachable state has distance >= {min_distance}")
    return hist / total
