"""Consistency checks over oracle and model files, used by ``bps verify``."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Union

import numpy as np

from bps.oracle import N_REACHABLE, DistanceTable, all_permutations, exact_distance
from bps.phe import (
    JointCountTable,
    PheModel,
    TransitionMatrix,
    _neighbor_ranks,
    find_beacons,
    manhattan_table,
)

PHE_FILE = "phe.txt"
TRANSITION_FILE = "transition.txt"
EXPECTED_BEACONS = 17
EXACT_H_LIMIT = 2


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{status} {self.name}" + (f": {self.detail}" if self.detail else "")


def _run(results: List[CheckResult], name: str, fn: Callable[[], Union[bool, tuple]]) -> bool:
    try:
        out = fn()
    except Exception as exc:  # a crashing check is a failed check
        results.append(CheckResult(name, False, f"{type(exc).__name__}: {exc}"))
        return False
    ok, detail = out if isinstance(out, tuple) else (out, "")
    results.append(CheckResult(name, bool(ok), detail))
    return bool(ok)


def check_table(t: DistanceTable) -> List[CheckResult]:
    res: List[CheckResult] = []
    reach = len(t.reachable_ranks)
    _run(res, "table-census", lambda: (reach == N_REACHABLE, f"reachable={reach}"))
    _run(res, "table-goal", lambda: exact_distance(t, t.goal.goal_state) == 0)

    def neighbors_differ_by_one():
        ranks = t.reachable_ranks
        d = t.distances[ranks].astype(int)
        for idx, nb in _neighbor_ranks(all_permutations()[ranks]):
            if not np.all(np.abs(t.distances[nb].astype(int) - d[idx]) == 1):
                return False, "found neighbors whose distances differ by other than 1"
        return True

    _run(res, "table-neighbor-parity", neighbors_differ_by_one)
    _run(res, "beacon-census", lambda: (
        (n := len(find_beacons(t, manhattan_table(t.goal)))) == EXPECTED_BEACONS, f"beacons={n}"))
    return res


def check_phe(counts: JointCountTable, t: Optional[DistanceTable] = None) -> List[CheckResult]:
    res: List[CheckResult] = []
    c = counts.counts
    h_idx, o_idx = np.indices(c.shape)
    _run(res, "phe-nonnegative", lambda: bool((c >= 0).all()))
    if counts.provenance == "full":
        _run(res, "phe-total", lambda: (counts.total == N_REACHABLE, f"total={counts.total:g}"))
    if counts.variant == "plain":
        _run(res, "phe-admissible", lambda: (
            not (bad := (c[o_idx < h_idx] > 0).any()), "mass at outcome below heuristic value" if bad else ""))
        _run(res, "phe-parity", lambda: not (c[(o_idx - h_idx) % 2 == 1] > 0).any())
        if counts.provenance == "full":
            post = PheModel.from_counts(counts).posterior

            # h = 3 is excluded: two MD-3 states lie 11 moves out
            def low_h_exact():
                return all(abs(post[h, h] - 1.0) < 1e-12 for h in range(min(EXACT_H_LIMIT + 1, c.shape[0])))

            _run(res, "phe-low-h-exact", low_h_exact)
    if t is not None:
        _run(res, "phe-domain", lambda: (
            c.shape[1] == t.max_distance + 1, f"cols={c.shape[1]} max_distance={t.max_distance}"))
    return res


def check_transition(trans: TransitionMatrix, t: Optional[DistanceTable] = None) -> List[CheckResult]:
    res: List[CheckResult] = []
    p = trans.p
    _run(res, "transition-rows", lambda: bool(np.allclose(p.sum(axis=1), 1.0, atol=1e-9)))
    i, j = np.indices(p.shape)
    _run(res, "transition-support", lambda: not (p[np.abs(i - j) != 1] > 0).any())
    if t is not None:
        _run(res, "transition-domain", lambda: p.shape == (t.max_distance + 1,) * 2)
    return res


def verify_files(oracle: Union[str, Path], models: Optional[Union[str, Path]] = None) -> List[CheckResult]:
    res: List[CheckResult] = []
    table: Optional[DistanceTable] = None

    def load_table():
        nonlocal table
        table = DistanceTable.load(oracle)
        return True

    if _run(res, "table-format", load_table):
        res += check_table(table)
    if models is not None:
        models = Path(models)
        counts: Optional[JointCountTable] = None
        trans: Optional[TransitionMatrix] = None

        def load_phe():
            nonlocal counts
            counts = JointCountTable.load(models / PHE_FILE)
            return True

        def load_trans():
            nonlocal trans
            trans = TransitionMatrix.load(models / TRANSITION_FILE)
            return True

        if _run(res, "phe-format", load_phe):
            res += check_phe(counts, table)
        if _run(res, "transition-format", load_trans):
            res += check_transition(trans, table)
    return res
