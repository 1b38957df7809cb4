"""Command-line driver: build-oracle, calibrate, run, verify, inspect.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from bps._backend import BACKEND
from bps.checks import PHE_FILE, TRANSITION_FILE, verify_files
from bps.harness import (
    FULL_SCALE_PROFILES,
    ExperimentConfig,
    build_models,
    format_csv,
    parse_config_text,
    parse_horizons,
    run_experiment,
)
from bps.inference import all_beliefs, build_tree, decision_beliefs, expected_outcome
from bps.oracle import DistanceTable, build_distance_table, distance_prior, is_toward_goal
from bps.phe import (
    JointCountTable,
    TransitionMatrix,
    calibrate_full,
    calibrate_sampled,
    calibrate_transition,
    find_beacons,
    manhattan_table,
    mask_beacons,
    HeuristicVariant,
    uniform_transition,
)
from bps.puzzle import DEFAULT_GOAL, GoalSpec, PuzzleState, solvable

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("bps")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _state(text: str) -> PuzzleState:
    try:
        return PuzzleState.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _horizons(text: str) -> List[int]:
    try:
        return parse_horizons(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


VARIANTS = [v.value for v in HeuristicVariant]


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bps", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build-oracle", help="enumerate exact distances and write the table file")
    b.add_argument("--goal", type=_state, default=DEFAULT_GOAL.goal_state,
                   help='goal board, 9 integers row-major (default "0 1 2 3 4 5 6 7 8")')
    b.add_argument("--out", required=True, type=Path, help="output table path")

    c = sub.add_parser("calibrate", help="write PHE and transition model files")
    c.add_argument("--oracle", type=Path, help="table file (built in memory if omitted)")
    c.add_argument("--mode", choices=["full", "sampled"], default="full", help="calibration sample")
    c.add_argument("--variant", choices=VARIANTS, default="plain", help="heuristic variant")
    c.add_argument("--seed", type=int, default=0, help="seed for sampled mode")
    c.add_argument("--n-random", type=int, default=1000, help="random states (sampled mode)")
    c.add_argument("--n-nearest", type=int, default=500, help="states nearest the goal (sampled mode)")
    c.add_argument("--transition", choices=["empirical", "uniform"], default="empirical",
                   help="outcome transition model")
    c.add_argument("--out", required=True, type=Path, help=f"output directory ({PHE_FILE}, {TRANSITION_FILE})")

    r = sub.add_parser("run", help="run a decision-quality experiment and emit CSV")
    r.add_argument("--config", type=Path, help="key = value config file; flags override it")
    r.add_argument("--oracle", type=Path, help="table file (built in memory if omitted)")
    r.add_argument("--models", type=Path, help="directory from `calibrate` (calibrated in memory if omitted)")
    r.add_argument("--policy", choices=["bps", "minimin", "random"], help="decision policy")
    r.add_argument("--variant", choices=VARIANTS, help="heuristic variant")
    r.add_argument("--phe", dest="phe_mode", choices=["full", "sampled"], help="PHE calibration mode")
    r.add_argument("--n-random", type=int, help="random states for the sampled PHE")
    r.add_argument("--n-nearest", type=int, help="nearest states for the sampled PHE")
    r.add_argument("--phe-seed", type=int, help="seed for the sampled PHE")
    r.add_argument("--horizons", type=_horizons, help='e.g. "1..7" or "5,10,15"')
    r.add_argument("--instances", type=_positive, help="instances per horizon")
    r.add_argument("--seed", type=int, help="master seed")
    r.add_argument("--workers", type=_positive, help="worker processes")
    r.add_argument("--prior", choices=["unconditional", "eligible"], help="BPS root prior")
    r.add_argument("--tie-break", choices=["first", "random"], help="tie-breaking rule")
    r.add_argument("--no-prune", action="store_true", default=None, help="allow parent-reversal moves")
    r.add_argument("--long-run", action="store_true", default=None, help="permit deep Minimin horizons")
    r.add_argument("--paper", action="store_true", help="full-scale instance counts (10000 for minimin and random, 1000 for bps)")
    r.add_argument("--out", dest="output", type=Path, help="CSV path (stdout if omitted)")

    v = sub.add_parser("verify", help="check table and model files")
    v.add_argument("--oracle", required=True, type=Path, help="table file")
    v.add_argument("--models", type=Path, help="directory from `calibrate`")

    i = sub.add_parser("inspect", help="show the decision for one board")
    i.add_argument("--state", required=True, type=_state, help="root board")
    i.add_argument("--horizon", type=_positive, default=3, help="lookahead depth")
    i.add_argument("--oracle", type=Path, help="table file (built in memory if omitted)")
    i.add_argument("--models", type=Path, help="directory from `calibrate`")
    i.add_argument("--variant", choices=VARIANTS, default="plain", help="heuristic variant")
    i.add_argument("--dump-beliefs", action="store_true", help="print every node's belief vector")
    return p


def _load_table(path: Optional[Path], goal: GoalSpec = DEFAULT_GOAL) -> DistanceTable:
    if path is None:
        return build_distance_table(goal)
    return DistanceTable.load(path)


def cmd_build_oracle(args) -> int:
    goal = GoalSpec(args.goal)
    t = build_distance_table(goal)
    t.save(args.out)
    print(f"reachable={len(t.reachable_ranks)}")
    print(f"max_distance={t.max_distance}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    t = _load_table(args.oracle)
    md = manhattan_table(t.goal)
    beacons = find_beacons(t, md)
    h = mask_beacons(md, HeuristicVariant(args.variant), beacons)
    if args.mode == "full":
        counts = calibrate_full(t, h, args.variant)
    else:
        counts = calibrate_sampled(t, h, args.n_random, args.n_nearest, args.seed, args.variant)
    trans = calibrate_transition(t) if args.transition == "empirical" else uniform_transition(t.max_distance)
    args.out.mkdir(parents=True, exist_ok=True)
    counts.save(args.out / PHE_FILE)
    trans.save(args.out / TRANSITION_FILE)
    print(f"beacons={len(beacons)}")
    print(f"total={counts.total:g}")
    return EXIT_OK


def _run_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config is not None:
        cfg = parse_config_text(args.config.read_text(), cfg)
    overrides = {}
    for name in ("policy", "variant", "phe_mode", "n_random", "n_nearest", "phe_seed", "horizons",
                 "instances", "seed", "workers", "prior", "tie_break", "long_run"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if args.no_prune:
        overrides["prune"] = False
    if args.output is not None:
        overrides["output"] = str(args.output)
    cfg = replace(cfg, **overrides)
    if args.paper:
        cfg = replace(cfg, **FULL_SCALE_PROFILES[cfg.policy])
    cfg.validate()
    return cfg


def cmd_run(args) -> int:
    try:
        cfg = _run_config(args)
    except (ValueError, OSError) as exc:
        raise UsageError(str(exc)) from exc
    t = _load_table(args.oracle)
    counts = trans = None
    if args.models is not None and cfg.policy == "bps":
        counts = JointCountTable.load(args.models / PHE_FILE)
        trans = TransitionMatrix.load(args.models / TRANSITION_FILE)
    models = build_models(cfg, t, counts, trans)
    records = run_experiment(cfg, models)
    text = format_csv(records)
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    errors = sum(r.n_errors for r in records)
    if errors:
        print(f"{errors} instance(s) failed", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_verify(args) -> int:
    results = verify_files(args.oracle, args.models)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.ok for r in results) else EXIT_VERIFY


def cmd_inspect(args) -> int:
    t = _load_table(args.oracle)
    root = args.state
    if not solvable(root, t.goal):
        raise UsageError(f"state {root} is not reachable from goal {t.goal.goal_state}")
    cfg = ExperimentConfig(policy="bps", variant=args.variant)
    counts = trans = None
    if args.models is not None:
        counts = JointCountTable.load(args.models / PHE_FILE)
        trans = TransitionMatrix.load(args.models / TRANSITION_FILE)
    models = build_models(cfg, t, counts, trans)
    prior = distance_prior(t)
    tree = build_tree(root, args.horizon, models.heuristic)
    print(f"nodes={len(tree)} backend={BACKEND}")
    for move, belief in decision_beliefs(tree, prior, models.phe, models.trans):
        toward = is_toward_goal(t, root, move)
        print(f"{move.name:5s} expected={expected_outcome(belief):.6f} toward_goal={toward}")
    if args.dump_beliefs:
        beliefs = all_beliefs(tree, prior, models.phe, models.trans)
        rows, cols = beliefs.shape
        print(f"bps-beliefs rows={rows} cols={cols} provenance=inspect seed=none")
        for row in beliefs:
            print(" ".join(repr(float(x)) for x in row))
    return EXIT_OK


COMMANDS = {
    "build-oracle": cmd_build_oracle,
    "calibrate": cmd_calibrate,
    "run": cmd_run,
    "verify": cmd_verify,
    "inspect": cmd_inspect,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"bps: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        log.debug("unhandled error", exc_info=True)
        print(f"bps: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
