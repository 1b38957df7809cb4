"""Eight Puzzle domain: boards, blank moves and the Manhattan Distance heuristic."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

SIZE = 3
N_CELLS = SIZE * SIZE


class IllegalMoveError(ValueError):
    """Raised when a move would push the blank off the board."""


class Move(enum.IntEnum):
    """Direction the blank travels."""

    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3

    @property
    def inverse(self) -> "Move":
        return Move(self ^ 1)


_DELTA = {Move.UP: (-1, 0), Move.DOWN: (1, 0), Move.LEFT: (0, -1), Move.RIGHT: (0, 1)}


def _target(blank: int, move: Move) -> int:
    r, c = divmod(blank, SIZE)
    dr, dc = _DELTA[move]
    r, c = r + dr, c + dc
    if not (0 <= r < SIZE and 0 <= c < SIZE):
        return -1
    return r * SIZE + c


# MOVE_TABLE[blank][move] -> cell the blank lands on, or -1
MOVE_TABLE: Tuple[Tuple[int, ...], ...] = tuple(
    tuple(_target(b, m) for m in Move) for b in range(N_CELLS)
)


@dataclass(frozen=True, order=True)
class PuzzleState:
    """A 3x3 board stored row-major; 0 is the blank."""

    cells: Tuple[int, ...]

    def __post_init__(self) -> None:
        cells = tuple(int(c) for c in self.cells)
        if len(cells) != N_CELLS or sorted(cells) != list(range(N_CELLS)):
            raise ValueError(f"not a permutation of 0..8: {self.cells!r}")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def parse(cls, text: str) -> "PuzzleState":
        """Parse the textual encoding, e.g. ``"0 1 2 3 4 5 6 7 8"``."""
        parts = text.replace(",", " ").split()
        try:
            values = [int(p) for p in parts]
        except ValueError as exc:
            raise ValueError(f"bad state string {text!r}") from exc
        return cls(tuple(values))

    @property
    def blank(self) -> int:
        return self.cells.index(0)

    def __str__(self) -> str:
        return " ".join(str(c) for c in self.cells)


DEFAULT_GOAL_CELLS = tuple(range(N_CELLS))


@dataclass(frozen=True)
class GoalSpec:
    goal_state: PuzzleState = PuzzleState(DEFAULT_GOAL_CELLS)

    @classmethod
    def parse(cls, text: str) -> "GoalSpec":
        return cls(PuzzleState.parse(text))

    @property
    def cells(self) -> Tuple[int, ...]:
        return self.goal_state.cells


DEFAULT_GOAL = GoalSpec()


def legal_moves(s: PuzzleState) -> List[Move]:
    row = MOVE_TABLE[s.blank]
    return [m for m in Move if row[m] >= 0]


def apply(s: PuzzleState, m: Move) -> PuzzleState:
    """Slide the blank one cell in direction ``m``."""
    blank = s.blank
    target = MOVE_TABLE[blank][Move(m)]
    if target < 0:
        raise IllegalMoveError(f"move {Move(m).name} is illegal with blank at cell {blank}")
    cells = list(s.cells)
    cells[blank], cells[target] = cells[target], cells[blank]
    return PuzzleState(tuple(cells))


def neighbors(s: PuzzleState) -> List[Tuple[Move, PuzzleState]]:
    """Legal (move, successor) pairs in fixed Up, Down, Left, Right order."""
    return [(m, apply(s, m)) for m in legal_moves(s)]


def _goal_positions(g: GoalSpec) -> List[int]:
    pos = [0] * N_CELLS
    for i, tile in enumerate(g.cells):
        pos[tile] = i
    return pos


def manhattan_distance(s: PuzzleState, g: GoalSpec = DEFAULT_GOAL) -> int:
    pos = _goal_positions(g)
    total = 0
    for i, tile in enumerate(s.cells):
        if tile:
            r, c = divmod(i, SIZE)
            gr, gc = divmod(pos[tile], SIZE)
            total += abs(r - gr) + abs(c - gc)
    return total


def _inversions(tiles: Sequence[int]) -> int:
    return sum(1 for i in range(len(tiles)) for j in range(i + 1, len(tiles)) if tiles[i] > tiles[j])


def parity(cells: Iterable[int]) -> int:
    """Inversion parity of the tiles, ignoring the blank.

    On an odd-width board a blank move never changes it, so it labels the
    two reachability classes.
    """
    return _inversions([c for c in cells if c]) % 2


def solvable(s: PuzzleState, g: GoalSpec = DEFAULT_GOAL) -> bool:
    return parity(s.cells) == parity(g.cells)
