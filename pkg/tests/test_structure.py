"""Structure matrix validation and construction."""

import numpy as np
import pytest

from vinedist.structure import (RVineStructure, StructureError, TreeEdge,
                                cvine_structure, dvine_structure, matrix_from_trees,
                                slot_of_edge)


def test_dvine_encodes_path():
    s = dvine_structure([1, 2, 3, 4])
    assert sorted(np.diag(s.matrix)) == [1, 2, 3, 4]
    tree1 = {frozenset(s.cond_pair(c, 3)) for c in range(3)}
    assert tree1 == {frozenset({1, 2}), frozenset({2, 3}), frozenset({3, 4})}


def test_cvine_encodes_star():
    s = cvine_structure([1, 2, 3, 4])
    tree1 = {frozenset(s.cond_pair(c, 3)) for c in range(3)}
    assert tree1 == {frozenset({1, 2}), frozenset({1, 3}), frozenset({1, 4})}
    # tree 2 edges all conditioned on the root
    for col, row in s.slots_of_tree(2):
        assert set(s.conditioning(col, row).tolist()) == {1}


def test_matrix_from_trees_five_dim():
    trees = [
        [TreeEdge(1, 5, frozenset()), TreeEdge(2, 4, frozenset()),
         TreeEdge(3, 4, frozenset()), TreeEdge(4, 5, frozenset())],
        [TreeEdge(1, 4, frozenset({5})), TreeEdge(2, 5, frozenset({4})),
         TreeEdge(3, 5, frozenset({4}))],
        [TreeEdge(1, 3, frozenset({4, 5})), TreeEdge(2, 3, frozenset({4, 5}))],
        [TreeEdge(1, 2, frozenset({3, 4, 5}))],
    ]
    s = matrix_from_trees(trees)
    assert s.d == 5
    # every input edge must be locatable with its conditioning set
    for t in trees:
        for e in t:
            col, row, _ = slot_of_edge(s, e)
            assert set(s.conditioning(col, row).tolist()) == set(e.cond)


def test_rejects_bad_diagonal():
    with pytest.raises(StructureError):
        RVineStructure([[1, 0], [2, 1]])


def test_rejects_broken_nesting():
    # column 0 contains 3, but 3 is not a later diagonal entry
    with pytest.raises(StructureError):
        RVineStructure([[1, 0, 0], [3, 2, 0], [2, 4, 4]])


def test_rejects_proximity_violation():
    # passes nesting but needs the conditional (2,{4}) no edge produces
    bad = [[1, 0, 0, 0],
           [3, 2, 0, 0],
           [2, 4, 3, 0],
           [4, 3, 4, 4]]
    with pytest.raises(StructureError):
        RVineStructure(bad)


def test_sub_structure_positions():
    s = dvine_structure([3, 1, 4, 2])
    sub = s.sub_structure(1)
    assert sub.d == 3
    # positional relabeling makes the sub-diagonal the identity
    assert np.diag(sub.matrix).tolist() == [1, 2, 3]
    with pytest.raises(ValueError):
        s.sub_structure(4)


def test_slot_orientation_flip():
    s = dvine_structure([1, 2, 3])
    col, row, flipped = slot_of_edge(s, TreeEdge(2, 1, frozenset()))
    a, b = s.cond_pair(col, row)
    assert {a, b} == {1, 2}
    assert flipped == (a != 2)


def test_structure_equality_and_hash():
    a = dvine_structure([1, 2, 3, 4])
    b = dvine_structure([1, 2, 3, 4])
    c = cvine_structure([1, 2, 3, 4])
    assert a == b and hash(a) == hash(b)
    assert a != c
