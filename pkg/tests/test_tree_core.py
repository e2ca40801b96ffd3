from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from yulebst.tree_core import (ROOT, BinaryTree, NodeWord, Profile, external_path_length, extremal_depths,
                               profile, split_leaf, subtree_leaf_counts)

from conftest import word


def nodes(tree):
    return {str(u) for u in tree.nodes}


def test_first_split():
    assert nodes(split_leaf(BinaryTree(), ROOT)) == {"∅", "0", "1"}


def test_split_left_child():
    t = split_leaf(split_leaf(BinaryTree(), ROOT), word("0"))
    assert nodes(t) == {"∅", "0", "1", "00", "01"}


def test_split_leaf_returns_copy():
    t = BinaryTree()
    u = split_leaf(t, ROOT)
    assert t.n_leaves == 1 and u.n_leaves == 2


def test_profile_after_two_splits(tree_n2_left):
    assert profile(tree_n2_left) == {1: 1, 2: 2}


def test_both_n2_trees_share_profile():
    right = split_leaf(split_leaf(BinaryTree(), ROOT), word("1"))
    assert profile(right) == Profile({1: 1, 2: 2})


def test_split_rejects_internal_and_absent(tree_n2_left):
    with pytest.raises(ValueError):
        split_leaf(tree_n2_left, ROOT)
    with pytest.raises(ValueError):
        split_leaf(tree_n2_left, word("11"))


def test_single_leaf_profile_and_depths():
    t = BinaryTree()
    assert profile(t) == {0: 1}
    assert extremal_depths(t) == (0, 0)


def test_extremal_depths(tree_n2_left):
    assert extremal_depths(tree_n2_left) == (1, 2)
    balanced = split_leaf(tree_n2_left, word("1"))
    assert extremal_depths(balanced) == (2, 2)


def test_subtree_leaf_counts(tree_n2_left):
    counts = {str(u): c for u, c in subtree_leaf_counts(tree_n2_left).items()}
    assert counts == {"∅": 3, "0": 2, "1": 1, "00": 1, "01": 1}
    assert subtree_leaf_counts(BinaryTree()) == {ROOT: 1}


def test_preorder_roundtrip(tree_n2_left):
    code = tree_n2_left.serialize()
    assert code == "11000"
    assert BinaryTree.from_preorder(code) == tree_n2_left


@pytest.mark.parametrize("code", ["", "1", "10", "0 ", "100x", "00"])
def test_bad_preorder_codes(code):
    with pytest.raises(ValueError):
        BinaryTree.from_preorder(code)


@pytest.mark.parametrize("nodes_", [["0", "1"], ["", "0"], ["", "0", "1", "00", "01", "000"]])
def test_from_nodes_rejects_invalid(nodes_):
    with pytest.raises(ValueError):
        BinaryTree.from_nodes(nodes_)


def test_nodeword_basics():
    u = word("01")
    assert u.letters == (0, 1) and str(u) == "01"
    assert [str(a) for a in u.ancestors()] == ["∅", "0"]
    assert u.parent == word("0") and u.last_letter == 1
    with pytest.raises(ValueError):
        NodeWord.from_letters([0, 2])


def test_profile_json_roundtrip():
    p = Profile({1: 1, 2: 2})
    assert Profile.from_json(p.to_json()) == p
    assert p.to_json() == '{"1": 1, "2": 2}'


@st.composite
def random_tree(draw, max_splits=40):
    t = BinaryTree()
    for choice in draw(st.lists(st.integers(0, 10**6), max_size=max_splits)):
        t.split(t.leaf_at(choice % t.n_leaves))
    return t


@settings(max_examples=150, deadline=None)
@given(random_tree())
def test_invariants_hold_for_random_trees(t):
    t.check_invariants()
    p = profile(t)
    assert p.kraft_sum() == Fraction(1)
    assert p.n_leaves == t.n_internal + 1
    counts = subtree_leaf_counts(t)
    for u in t.internal:
        assert counts[u] == counts[u.child(0)] + counts[u.child(1)]
    assert sum(counts[u] for u in t.leaves) == t.n_leaves
    # EPL equals the sum over internal nodes of the leaves below their children
    assert external_path_length(t) == sum(counts[u] for u in t.internal)
    assert BinaryTree.from_preorder(t.serialize()) == t
