"""Decision-quality experiments over sampled Eight Puzzle states.

For each horizon, states at least that far from the goal are drawn
uniformly (with replacement), every policy makes one move from each, and
the move counts as correct when it strictly reduces the exact distance.
All randomness is keyed by (master seed, horizon, instance index), so the
output does not depend on how instances are spread over worker processes.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from bps.errors import ZeroMessageError
from bps.oracle import DistanceTable, distance_prior, is_toward_goal, unrank
from bps.phe import (
    HeuristicTable,
    HeuristicVariant,
    JointCountTable,
    PheModel,
    TransitionMatrix,
    calibrate_full,
    calibrate_sampled,
    calibrate_transition,
    variant_heuristic,
)
from bps.policies import bps_decide, minimin_decide, random_decide
from bps.puzzle import PuzzleState

log = logging.getLogger(__name__)

POLICIES = ("bps", "minimin", "random")
CSV_HEADER = ["policy", "variant", "phe_mode", "horizon", "n", "n_toward", "quality", "stderr", "mean_nodes"]

# Minimin trees beyond this depth cost minutes per decision
LONG_RUN_HORIZON = 16


@dataclass
class ExperimentConfig:
    policy: str = "bps"
    variant: str = "plain"
    phe_mode: str = "full"
    n_random: int = 1000
    n_nearest: int = 500
    phe_seed: int = 0
    horizons: List[int] = field(default_factory=lambda: [1, 2, 3, 4, 5, 6, 7])
    instances: int = 100
    seed: int = 0
    output: Optional[str] = None
    workers: int = 1
    prior: str = "unconditional"
    tie_break: str = "first"
    prune: bool = True
    long_run: bool = False

    def validate(self) -> None:
        if self.policy not in POLICIES:
            raise ValueError(f"unknown policy {self.policy!r}; expected one of {POLICIES}")
        HeuristicVariant(self.variant)
        if self.phe_mode not in ("full", "sampled"):
            raise ValueError(f"unknown PHE mode {self.phe_mode!r}")
        if self.prior not in ("unconditional", "eligible"):
            raise ValueError(f"unknown prior {self.prior!r}")
        if self.tie_break not in ("first", "random"):
            raise ValueError(f"unknown tie-break mode {self.tie_break!r}")
        if not self.horizons or min(self.horizons) < 1:
            raise ValueError("horizons must be >= 1")
        if self.instances < 1:
            raise ValueError("instances must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.policy == "minimin" and max(self.horizons) > LONG_RUN_HORIZON and not self.long_run:
            raise ValueError(
                f"minimin beyond horizon {LONG_RUN_HORIZON} needs the long-run flag"
            )

    @property
    def phe_label(self) -> str:
        if self.policy != "bps":
            return "none"
        return self.phe_mode


FULL_SCALE_PROFILES = {
    "minimin": {"instances": 10000},
    "bps": {"instances": 1000},
    "random": {"instances": 10000},
}


def parse_horizons(text: str) -> List[int]:
    """``"1..7"``, ``"1,3,5"`` or a mix such as ``"1..3,7"``."""
    out: List[int] = []
    for part in text.replace(" ", "").split(","):
        if not part:
            continue
        m = re.fullmatch(r"(\d+)\.\.(\d+)", part)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if hi < lo:
                raise ValueError(f"empty horizon range {part!r}")
            out.extend(range(lo, hi + 1))
        elif part.isdigit():
            out.append(int(part))
        else:
            raise ValueError(f"bad horizon spec {part!r}")
    if not out:
        raise ValueError("no horizons given")
    return out


_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def parse_config_text(text: str, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    """Read ``key = value`` lines; ``#`` starts a comment."""
    cfg = base or ExperimentConfig()
    types = {f.name: f.type for f in fields(ExperimentConfig)}
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in types:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        if key == "horizons":
            updates[key] = parse_horizons(value)
        elif types[key] in ("int", int):
            updates[key] = int(value)
        elif types[key] in ("bool", bool):
            if value.lower() not in _BOOL:
                raise ValueError(f"config line {lineno}: bad boolean {value!r}")
            updates[key] = _BOOL[value.lower()]
        else:
            updates[key] = value
    return replace(cfg, **updates)


@dataclass(frozen=True)
class QualityRecord:
    policy: str
    variant: str
    phe_mode: str
    horizon: int
    n: int
    n_toward: int
    mean_nodes: float
    n_errors: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.n_toward <= self.n:
            raise ValueError("n_toward must lie in [0, n]")
        object.__setattr__(self, "mean_nodes", round(float(self.mean_nodes), 6))

    @property
    def quality(self) -> float:
        return self.n_toward / self.n if self.n else 0.0

    @property
    def stderr(self) -> float:
        q = self.quality
        return math.sqrt(q * (1 - q) / self.n) if self.n else 0.0


@dataclass
class Models:
    """Everything a policy needs, consistent with one heuristic variant."""

    table: DistanceTable
    heuristic: HeuristicTable
    phe: Optional[PheModel] = None
    trans: Optional[TransitionMatrix] = None


def build_models(cfg: ExperimentConfig, table: DistanceTable,
                 counts: Optional[JointCountTable] = None,
                 trans: Optional[TransitionMatrix] = None) -> Models:
    """Heuristic for the variant, plus a PHE recalibrated on that same heuristic."""
    h = variant_heuristic(table, cfg.variant)
    if cfg.policy != "bps":
        return Models(table, h)
    if counts is None:
        if cfg.phe_mode == "full":
            counts = calibrate_full(table, h, cfg.variant)
        else:
            counts = calibrate_sampled(table, h, cfg.n_random, cfg.n_nearest, cfg.phe_seed, cfg.variant)
    elif counts.variant != cfg.variant:
        raise ValueError(f"PHE calibrated for variant {counts.variant!r}, run uses {cfg.variant!r}")
    return Models(table, h, PheModel.from_counts(counts), trans or calibrate_transition(table))


def sample_eligible(t: DistanceTable, horizon: int, n: int, seed: int) -> List[PuzzleState]:
    """``n`` states drawn uniformly, with replacement, from those with distance >= horizon."""
    ranks = t.reachable_ranks
    eligible = ranks[t.distances[ranks] >= horizon]
    if eligible.size == 0:
        raise ValueError(f"no reachable state has distance >= {horizon}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, horizon]))
    return [unrank(int(r)) for r in rng.choice(eligible, size=n, replace=True)]


# per-process state for pool workers
_WORKER: Dict[str, object] = {}


def _init_worker(cfg: ExperimentConfig, models: Models) -> None:
    _WORKER["cfg"] = cfg
    _WORKER["models"] = models


def _instance_rng(cfg: ExperimentConfig, horizon: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.seed, horizon, index]))


def _decide_one(cfg: ExperimentConfig, models: Models, horizon: int, index: int,
                root: PuzzleState, prior: Optional[np.ndarray]):
    rng = _instance_rng(cfg, horizon, index)
    tie_rng = rng if cfg.tie_break == "random" else None
    if cfg.policy == "random":
        d = random_decide(root, rng)
    elif cfg.policy == "minimin":
        d = minimin_decide(root, horizon, models.heuristic, cfg.prune, tie_rng)
    else:
        d = bps_decide(root, horizon, models.heuristic, models.phe, models.trans, prior, cfg.prune, tie_rng)
    return is_toward_goal(models.table, root, d.chosen), d.nodes


def _run_chunk(task: Tuple[int, int, List[PuzzleState]]):
    horizon, start, roots = task
    cfg: ExperimentConfig = _WORKER["cfg"]  # type: ignore[assignment]
    models: Models = _WORKER["models"]  # type: ignore[assignment]
    prior = None
    if cfg.policy == "bps":
        prior = distance_prior(models.table, horizon if cfg.prior == "eligible" else 0)
    out = []
    for offset, root in enumerate(roots):
        try:
            ok, nodes = _decide_one(cfg, models, horizon, start + offset, root, prior)
            out.append((start + offset, bool(ok), int(nodes), None))
        except (ZeroMessageError, ValueError, LookupError) as exc:
            out.append((start + offset, False, 0, f"{type(exc).__name__}: {exc}"))
    return horizon, out


def run_experiment(cfg: ExperimentConfig, models: Models, chunk_size: int = 50) -> List[QualityRecord]:
    """One QualityRecord per horizon; instance errors are counted, not raised."""
    cfg.validate()
    tasks = []
    for horizon in cfg.horizons:
        roots = sample_eligible(models.table, horizon, cfg.instances, cfg.seed)
        for start in range(0, len(roots), chunk_size):
            tasks.append((horizon, start, roots[start : start + chunk_size]))

    results: Dict[int, List[tuple]] = {h: [] for h in cfg.horizons}
    if cfg.workers == 1:
        _init_worker(cfg, models)
        chunks = map(_run_chunk, tasks)
        for horizon, rows in chunks:
            results[horizon].extend(rows)
    else:
        with ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(cfg, models)) as pool:
            for horizon, rows in pool.map(_run_chunk, tasks):
                results[horizon].extend(rows)

    records = []
    for horizon in cfg.horizons:
        rows = sorted(results[horizon])
        good = [r for r in rows if r[3] is None]
        for idx, _, _, err in rows:
            if err is not None:
                log.warning("horizon %d instance %d failed: %s", horizon, idx, err)
        n_toward = sum(1 for r in good if r[1])
        mean_nodes = float(np.mean([r[2] for r in good])) if good else 0.0
        records.append(
            QualityRecord(cfg.policy, cfg.variant, cfg.phe_label, horizon, len(good), n_toward,
                          mean_nodes, len(rows) - len(good))
        )
    return records


def format_csv(records: Iterable[QualityRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([r.policy, r.variant, r.phe_mode, r.horizon, r.n, r.n_toward,
                    f"{r.quality:.6f}", f"{r.stderr:.6f}", f"{r.mean_nodes:.6f}"])
    return buf.getvalue()


def emit_csv(records: Sequence[QualityRecord], path: Union[str, Path]) -> None:
    Path(path).write_text(format_csv(records))


def read_csv(path: Union[str, Path]) -> List[QualityRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [
            QualityRecord(row["policy"], row["variant"], row["phe_mode"], int(row["horizon"]),
                          int(row["n"]), int(row["n_toward"]), float(row["mean_nodes"]))
            for row in reader
        ]
