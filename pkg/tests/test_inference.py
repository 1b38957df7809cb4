import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bps.errors import CapExceededError, ZeroMessageError
from bps.inference import (
    PassStats,
    SearchTree,
    all_beliefs,
    brute_force_beliefs,
    build_tree,
    decision_beliefs,
    expected_outcome,
    lambda_message,
    root_belief,
)
from bps.oracle import rank, unrank
from bps.phe import JointCountTable, PheModel, calibrate_full, perfect_table, uniform_transition
from bps.puzzle import DEFAULT_GOAL, PuzzleState, apply, legal_moves
from netgen import flatten, random_case, random_model, random_nested

seeds = st.integers(0, 2**32 - 1)


def _check_against_enumeration(tree, phe, trans, prior):
    brute = brute_force_beliefs(tree, prior, phe, trans)
    bp = all_beliefs(tree, prior, phe, trans)
    assert np.abs(bp - brute).max() <= 1e-9
    assert np.abs(root_belief(tree, prior, phe, trans) - brute[0]).max() <= 1e-9
    for (label, b), idx in zip(decision_beliefs(tree, prior, phe, trans), tree.children(0)):
        assert label == idx
        assert np.abs(b - brute[idx]).max() <= 1e-9


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_matches_enumeration(seed):
    _check_against_enumeration(*random_case(np.random.default_rng(seed)))


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_matches_enumeration_with_sparse_models(seed):
    tree, phe, trans, prior = random_case(np.random.default_rng(seed), sparsity=0.4)
    try:
        brute = brute_force_beliefs(tree, prior, phe, trans)
    except ZeroMessageError:
        with pytest.raises(ZeroMessageError):
            root_belief(tree, prior, phe, trans)
        return
    assert np.abs(all_beliefs(tree, prior, phe, trans) - brute).max() <= 1e-9
    assert np.abs(root_belief(tree, prior, phe, trans) - brute[0]).max() <= 1e-9


@settings(max_examples=50, deadline=None)
@given(seeds, st.floats(1e-3, 1e3))
def test_prior_scale_invariance(seed, scale):
    tree, phe, trans, prior = random_case(np.random.default_rng(seed))
    a = root_belief(tree, prior, phe, trans)
    b = root_belief(tree, prior * scale, phe, trans)
    assert np.allclose(a, b, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_child_order_invariance(seed):
    rng = np.random.default_rng(seed)
    nested = random_nested(rng, 4, 3, [8])
    phe, trans, prior = random_model(rng, 4, 5)
    order = rng.permutation(len(nested[1]))
    swapped = (nested[0], [nested[1][i] for i in order])
    a = decision_beliefs(flatten(nested), prior, phe, trans)
    b = decision_beliefs(flatten(swapped), prior, phe, trans)
    assert np.allclose(root_belief(flatten(nested), prior, phe, trans),
                       root_belief(flatten(swapped), prior, phe, trans), atol=1e-12)
    for new_pos, old_pos in enumerate(order):
        assert np.allclose(b[new_pos][1], a[old_pos][1], atol=1e-12)


def test_leaf_message_is_likelihood_column():
    phe, trans, _ = random_model(np.random.default_rng(1), 3, 6)
    tree = SearchTree.from_depths([0, 1, 1], [0, 2, 1])
    col = phe.likelihood[2]
    assert np.allclose(lambda_message(tree, 1, phe, trans), col / col.sum(), atol=1e-15)


def test_uniform_evidence():
    _, trans, prior = random_model(np.random.default_rng(2), 1, 6)
    flat = PheModel.from_counts(JointCountTable(np.ones((1, 6))))
    tree = flatten(random_nested(np.random.default_rng(3), 1, 3, [10]))
    assert np.allclose(lambda_message(tree, 0, flat, trans), np.full(6, 1 / 6), atol=1e-15)
    assert np.allclose(root_belief(tree, prior, flat, trans), prior, atol=1e-15)


def test_single_node_is_bayes_rule():
    phe, trans, prior = random_model(np.random.default_rng(4), 3, 5)
    tree = SearchTree.from_depths([0], [2])
    expect = prior * phe.likelihood[2]
    assert np.allclose(root_belief(tree, prior, phe, trans), expect / expect.sum(), atol=1e-15)


def test_constraint_composition_vignette():
    # observations pin A to 17 and C to 19; B carries no information
    size = 32
    counts = np.vstack([np.eye(size), np.ones((1, size))])
    phe = PheModel.from_counts(JointCountTable(counts))
    trans = uniform_transition(size - 1, support=(-1, 0, 1))
    tree = SearchTree.from_depths([0, 1, 2], [17, size, 19])
    (label, b), = decision_beliefs(tree, np.full(size, 1 / size), phe, trans)
    assert label == 1
    assert b[18] == 1.0 and b.sum() == 1.0
    assert expected_outcome(b) == 18.0


def test_delta_evidence_on_puzzle_tree(table):
    exact = perfect_table(table)
    phe = PheModel.from_counts(calibrate_full(table, exact))
    trans = uniform_transition(table.max_distance)
    root = unrank(int(table.reachable_ranks[table.distances[table.reachable_ranks] == 12][0]))
    tree = build_tree(root, 1, exact)
    uniform = np.full(32, 1 / 32)
    for move, b in decision_beliefs(tree, uniform, phe, trans):
        child_h = exact.values[rank(apply(root, move))]
        assert b[child_h] == pytest.approx(1.0, abs=1e-12)


def test_decision_beliefs_labels_puzzle_moves(table, md, full_phe, trans, prior):
    s = PuzzleState.parse("1 2 5 3 4 0 6 7 8")
    out = decision_beliefs(build_tree(s, 3, md), prior, full_phe, trans)
    assert [m for m, _ in out] == legal_moves(s)
    for _, b in out:
        assert b.sum() == pytest.approx(1.0, abs=1e-9)


def test_corner_horizon_one(md):
    tree = build_tree(DEFAULT_GOAL.goal_state, 1, md)
    assert len(tree) == 3
    assert len(tree.children(0)) == 2


def test_no_child_repeats_its_grandparent(table, md, rng):
    for r in rng.choice(table.reachable_ranks, 20):
        tree = build_tree(unrank(int(r)), 5, md)
        gp = tree.parent[tree.parent[1:]]
        ok = gp >= 0
        assert not np.any(tree.key[1:][ok] == tree.key[gp[ok]])


def test_peak_storage_tracks_depth(table, md, full_phe, trans, prior, rng):
    eligible = table.reachable_ranks[table.distances[table.reachable_ranks] >= 10]
    for r in rng.choice(eligible, 5):
        tree = build_tree(unrank(int(r)), 9, md)
        stats = PassStats()
        root_belief(tree, prior, full_phe, trans, stats)
        assert stats.nodes == len(tree) > 200
        assert stats.peak_live_messages <= tree.horizon + 1


def test_puzzle_tree_small_horizon_matches_enumeration(table, md, full_phe, trans, prior):
    # a corner-blank root at horizon 1 gives three nodes, 32^3 joint cells
    ranks = table.reachable_ranks[table.distances[table.reachable_ranks] == 20]
    root = next(s for s in map(unrank, ranks.tolist()) if len(legal_moves(s)) == 2)
    tree = build_tree(root, 1, md)
    brute = brute_force_beliefs(tree, prior, full_phe, trans)
    assert np.abs(all_beliefs(tree, prior, full_phe, trans) - brute).max() <= 1e-9


def test_zero_message_raises():
    phe = PheModel.from_counts(JointCountTable(np.eye(4)))
    trans = uniform_transition(3)
    # parent fixed at 0, child fixed at 3: adjacent outcomes cannot differ by 3
    tree = SearchTree.from_depths([0, 1], [0, 3])
    with pytest.raises(ZeroMessageError):
        root_belief(tree, np.full(4, 0.25), phe, trans)
    with pytest.raises(ZeroMessageError):
        brute_force_beliefs(tree, np.full(4, 0.25), phe, trans)


def test_cap_exceeded():
    tree, phe, trans, prior = random_case(np.random.default_rng(5))
    with pytest.raises(CapExceededError):
        brute_force_beliefs(tree, prior, phe, trans, cap=1)


def test_domain_mismatch_rejected(full_phe, prior):
    tree = SearchTree.from_depths([0, 1], [3, 4])
    with pytest.raises(ValueError):
        root_belief(tree, prior, full_phe, uniform_transition(10))
    with pytest.raises(ValueError):
        root_belief(tree, prior[:10], full_phe, uniform_transition(31))


@pytest.mark.parametrize("depths", [[1, 2], [0, 2], [0, 1, 0]])
def test_bad_preorder_rejected(depths):
    with pytest.raises(ValueError):
        SearchTree.from_depths(depths, [0] * len(depths))


@pytest.mark.parametrize("b,expected", [
    (np.eye(32)[5], 5.0),
    (np.where(np.isin(np.arange(8), [4, 6]), 0.5, 0.0), 5.0),
    (np.full(32, 1 / 32), 15.5),
])
def test_expected_outcome(b, expected):
    assert expected_outcome(b) == pytest.approx(expected, abs=1e-12)
