"""Bayesian inference over heuristic search trees, with Eight Puzzle experiments."""

from bps._backend import BACKEND
from bps.inference import (
    SearchTree,
    build_tree,
    decision_beliefs,
    expected_outcome,
    lambda_message,
    root_belief,
)
from bps.oracle import DistanceTable, build_distance_table, exact_distance, is_toward_goal
from bps.phe import PheModel, TransitionMatrix, calibrate_full, calibrate_transition
from bps.policies import Decision, bps_decide, minimin_decide, random_decide
from bps.puzzle import GoalSpec, Move, PuzzleState

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Decision",
    "DistanceTable",
    "GoalSpec",
    "Move",
    "PheModel",
    "PuzzleState",
    "SearchTree",
    "TransitionMatrix",
    "bps_decide",
    "build_distance_table",
    "build_tree",
    "calibrate_full",
    "calibrate_transition",
    "decision_beliefs",
    "exact_distance",
    "expected_outcome",
    "is_toward_goal",
    "lambda_message",
    "minimin_decide",
    "random_decide",
    "root_belief",
]
