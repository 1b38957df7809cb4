"""Probabilistic heuristic estimates and the outcome transition model.

A heuristic is materialized as a rank-indexed byte table so both kernel
backends can evaluate it without calling back into Python.  Calibration
tabulates joint counts of (heuristic value, exact distance); the likelihood
P(h | o) is what the tree inference consumes.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from bps.oracle import (
    N_PERMS,
    UNREACHED,
    DistanceTable,
    all_permutations,
    rank,
    ranks_of,
    unrank,
)
from bps.puzzle import DEFAULT_GOAL, MOVE_TABLE, GoalSpec, PuzzleState

BEACON_THRESHOLD = 3
BEACON_REPLACEMENT = 4
SAMPLED_SMOOTHING = 1e-6


class ModelFormatError(ValueError):
    """A model text file failed to parse."""


@dataclass(frozen=True, eq=False)
class HeuristicTable:
    """Heuristic values for every permutation, indexed by rank."""

    name: str
    values: np.ndarray
    goal: GoalSpec = DEFAULT_GOAL

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.values, dtype=np.uint8)
        if v.shape != (N_PERMS,):
            raise ValueError(f"expected {N_PERMS} entries, got {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __call__(self, s: Union[PuzzleState, tuple]) -> int:
        return int(self.values[rank(s)])


def manhattan_table(g: GoalSpec = DEFAULT_GOAL) -> HeuristicTable:
    perms = all_permutations().astype(np.int64)
    pos = np.empty(9, dtype=np.int64)
    pos[list(g.cells)] = np.arange(9)
    md = np.zeros(N_PERMS, dtype=np.int64)
    for cell in range(9):
        tiles = perms[:, cell]
        home = pos[tiles]
        dist = np.abs(cell // 3 - home // 3) + np.abs(cell % 3 - home % 3)
        md += np.where(tiles != 0, dist, 0)
    return HeuristicTable("md", md.astype(np.uint8), g)


def perfect_table(t: DistanceTable) -> HeuristicTable:
    """The exact distance used as a heuristic (255 off the reachable class)."""
    return HeuristicTable("exact", t.distances, t.goal)


class HeuristicVariant(enum.Enum):
    PLAIN = "plain"
    ALL_BEACONS_REMOVED = "nobeacons"
    GOAL_ONLY_BEACON = "goalonly"


def find_beacons(t: DistanceTable, h: HeuristicTable, threshold: int = BEACON_THRESHOLD) -> List[PuzzleState]:
    """Reachable states with h <= threshold, in rank order."""
    ranks = t.reachable_ranks
    return [unrank(int(r)) for r in ranks[h.values[ranks] <= threshold]]


def mask_beacons(
    h: HeuristicTable,
    variant: HeuristicVariant,
    beacons: Sequence[PuzzleState],
    value: int = BEACON_REPLACEMENT,
) -> HeuristicTable:
    variant = HeuristicVariant(variant)
    if variant is HeuristicVariant.PLAIN:
        return h
    goal_rank = rank(h.goal.goal_state)
    ranks = [rank(b) for b in beacons]
    if variant is HeuristicVariant.GOAL_ONLY_BEACON:
        ranks = [r for r in ranks if r != goal_rank]
    values = h.values.copy()
    values[ranks] = value
    return HeuristicTable(f"{h.name}-{variant.value}", values, h.goal)


def variant_heuristic(t: DistanceTable, variant: Union[str, HeuristicVariant]) -> HeuristicTable:
    """Manhattan Distance with the requested beacon treatment."""
    md = manhattan_table(t.goal)
    return mask_beacons(md, HeuristicVariant(variant), find_beacons(t, md))


@dataclass
class JointCountTable:
    """Counts indexed [h, o] over 0..h_max x 0..o_max."""

    counts: np.ndarray
    provenance: str = "full"
    seed: Optional[int] = None
    variant: str = "plain"
    smoothing: float = 0.0

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    def to_text(self) -> str:
        rows, cols = self.counts.shape
        seed = "none" if self.seed is None else str(self.seed)
        lines = [
            f"bps-phe rows={rows} cols={cols} provenance={self.provenance} "
            f"seed={seed} variant={self.variant} smoothing={self.smoothing!r}"
        ]
        lines += [_format_row(r) for r in self.counts]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "JointCountTable":
        header, matrix = _parse_matrix(text, "bps-phe")
        seed = header.get("seed", "none")
        return cls(
            counts=matrix,
            provenance=header.get("provenance", "full"),
            seed=None if seed == "none" else int(seed),
            variant=header.get("variant", "plain"),
            smoothing=float(header.get("smoothing", "0")),
        )

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "JointCountTable":
        return cls.from_text(Path(path).read_text())


@dataclass(frozen=True, eq=False)
class PheModel:
    """likelihood[h, o] = P(h | o); posterior[h, o] = P(o | h)."""

    likelihood: np.ndarray
    posterior: np.ndarray
    counts: JointCountTable

    @property
    def h_max(self) -> int:
        return self.likelihood.shape[0] - 1

    @property
    def o_max(self) -> int:
        return self.likelihood.shape[1] - 1

    @classmethod
    def from_counts(cls, table: JointCountTable) -> "PheModel":
        c = np.array(table.counts, dtype=np.float64)
        if table.smoothing:
            h_idx, o_idx = np.indices(c.shape)
            c = c + np.where(o_idx >= h_idx, table.smoothing, 0.0)
        return cls(_normalize(c, axis=0), _normalize(c, axis=1), table)

    def evidence(self, h_values: np.ndarray) -> np.ndarray:
        """Likelihood vectors P(h | .) for an array of observed h values."""
        h_values = np.asarray(h_values)
        if h_values.size and h_values.max() > self.h_max:
            raise ValueError(f"heuristic value {int(h_values.max())} outside model range 0..{self.h_max}")
        return self.likelihood[h_values]


def _normalize(c: np.ndarray, axis: int) -> np.ndarray:
    s = c.sum(axis=axis, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(s > 0, c / s, 0.0)
    return out


def _joint_counts(h_vals: np.ndarray, o_vals: np.ndarray, h_max: int, o_max: int) -> np.ndarray:
    flat = np.bincount(h_vals.astype(np.int64) * (o_max + 1) + o_vals, minlength=(h_max + 1) * (o_max + 1))
    return flat.reshape(h_max + 1, o_max + 1).astype(np.float64)


def _h_range(t: DistanceTable, h: HeuristicTable) -> int:
    return int(h.values[t.reachable_ranks].max())


def calibrate_full(t: DistanceTable, h: HeuristicTable, variant: str = "plain") -> JointCountTable:
    ranks = t.reachable_ranks
    counts = _joint_counts(h.values[ranks], t.distances[ranks].astype(np.int64), _h_range(t, h), t.max_distance)
    return JointCountTable(counts, "full", None, variant)


def calibrate_sampled(
    t: DistanceTable,
    h: HeuristicTable,
    n_random: int = 1000,
    n_nearest: int = 500,
    seed: int = 0,
    variant: str = "plain",
) -> JointCountTable:
    """Counts from a random sample plus the states nearest the goal.

    Random states are drawn without replacement; the nearest states are the
    first ``n_nearest`` by (distance, rank).  Heuristic values never seen in
    the sample get an interpolated outcome distribution.
    """
    if n_random + n_nearest < 1:
        raise ValueError("need at least one sampled state")
    ranks = t.reachable_ranks
    rng = np.random.default_rng(seed)
    picked = rng.choice(ranks, size=n_random, replace=False) if n_random else ranks[:0]
    dist = t.distances[ranks]
    nearest = ranks[np.lexsort((ranks, dist))[:n_nearest]]
    sample = np.concatenate([picked, nearest])
    counts = _joint_counts(
        h.values[sample], t.distances[sample].astype(np.int64), _h_range(t, h), t.max_distance
    )
    counts = interpolate_columns(counts)
    return JointCountTable(
        counts, f"sampled({n_random},{n_nearest})", seed, variant, SAMPLED_SMOOTHING
    )


def _shift(col: np.ndarray, offset: int) -> np.ndarray:
    out = np.zeros_like(col)
    if offset >= 0:
        out[offset:] = col[: len(col) - offset]
    else:
        out[:offset] = col[-offset:]
    return out


def interpolate_columns(counts: np.ndarray) -> np.ndarray:
    """Fill empty h-rows from the nearest observed rows.

    Each neighbour's outcome distribution is shifted by the h offset so the
    o - h structure is kept, then the two are blended linearly by distance.
    A filled row carries a total mass of one pseudo-observation.
    """
    counts = np.array(counts, dtype=np.float64)
    mass = counts.sum(axis=1)
    observed = np.flatnonzero(mass > 0)
    if observed.size == 0:
        raise ValueError("no observations to interpolate from")
    for hv in np.flatnonzero(mass == 0):
        below = observed[observed < hv]
        above = observed[observed > hv]
        parts = []
        if below.size:
            lo = below[-1]
            parts.append((hv - lo, _shift(counts[lo] / mass[lo], hv - lo)))
        if above.size:
            hi = above[0]
            parts.append((hi - hv, _shift(counts[hi] / mass[hi], hv - hi)))
        if len(parts) == 2:
            (d_lo, c_lo), (d_hi, c_hi) = parts
            w = d_lo / (d_lo + d_hi)
            col = (1 - w) * c_lo + w * c_hi
        else:
            col = parts[0][1]
        if col.sum() > 0:
            counts[hv] = col / col.sum()
    return counts


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """p[i, j] = P(child outcome j | parent outcome i)."""

    p: np.ndarray
    provenance: str = "empirical"

    @property
    def o_max(self) -> int:
        return self.p.shape[0] - 1

    def to_text(self) -> str:
        rows, cols = self.p.shape
        lines = [f"bps-transition rows={rows} cols={cols} provenance={self.provenance} seed=none"]
        lines += [_format_row(r) for r in self.p]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TransitionMatrix":
        header, matrix = _parse_matrix(text, "bps-transition")
        return cls(matrix, header.get("provenance", "empirical"))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "TransitionMatrix":
        return cls.from_text(Path(path).read_text())


def _neighbor_ranks(perms: np.ndarray):
    """Yield (row index, neighbor ranks) for each move direction."""
    blank = np.argmax(perms == 0, axis=1)
    moves = np.array(MOVE_TABLE)
    rows = np.arange(len(perms))
    for m in range(4):
        target = moves[blank, m]
        ok = np.flatnonzero(target >= 0)
        nb = perms[ok].copy()
        b, tg = blank[ok], target[ok]
        nb[np.arange(len(ok)), b] = perms[ok, tg]
        nb[np.arange(len(ok)), tg] = 0
        yield rows[ok], ranks_of(nb)


def calibrate_transition(t: DistanceTable) -> TransitionMatrix:
    """Empirical P(d(neighbor) | d(state)) over every reachable state and move."""
    ranks = t.reachable_ranks
    perms = all_permutations()[ranks]
    size = t.max_distance + 1
    counts = np.zeros((size, size))
    d_parent = t.distances[ranks].astype(np.int64)
    for idx, nb in _neighbor_ranks(perms):
        d_child = t.distances[nb].astype(np.int64)
        if np.any(d_child == UNREACHED):
            raise AssertionError("neighbor left the reachability class")
        np.add.at(counts, (d_parent[idx], d_child), 1)
    return TransitionMatrix(_normalize(counts, axis=1), "empirical")


def uniform_transition(o_max: int, support: Sequence[int] = (-1, 1)) -> TransitionMatrix:
    """Uniform over parent + offset, renormalized over the closed domain."""
    size = o_max + 1
    p = np.zeros((size, size))
    for i in range(size):
        for off in support:
            if 0 <= i + off < size:
                p[i, i + off] = 1.0
    return TransitionMatrix(_normalize(p, axis=1), "uniform")


def _format_row(row: np.ndarray) -> str:
    return " ".join(repr(float(x)) for x in row)


_HEADER_TOKEN = re.compile(r"(\w+)=(\S+)")


def _parse_matrix(text: str, kind: str):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith(kind + " "):
        raise ModelFormatError(f"missing {kind!r} header")
    header = dict(_HEADER_TOKEN.findall(lines[0]))
    try:
        rows, cols = int(header["rows"]), int(header["cols"])
        matrix = np.array([[float(x) for x in ln.split()] for ln in lines[1:]], dtype=np.float64)
    except (KeyError, ValueError) as exc:
        raise ModelFormatError(f"malformed {kind} file: {exc}") from exc
    if matrix.shape != (rows, cols):
        raise ModelFormatError(f"expected {rows}x{cols} values, got {matrix.shape}")
    return header, matrix
