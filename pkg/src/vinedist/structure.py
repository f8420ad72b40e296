"""R-vine structure matrices.

The structure of a d-dimensional vine is stored as a d x d
lower-triangular integer matrix M with 1-based variable labels on the
diagonal. Column j (0-based) encodes the edges

    (M[j, j], M[k, j] | M[k+1, j], ..., M[d-1, j])   for k = j+1 .. d-1,

so the bottom row holds the unconditional tree-1 edges and the tree
number of slot (j, k) is d - k (1-based trees). The diagonal sequence
(M[0,0], ..., M[d-1,d-1]) is the "diagonal order": within each column,
all off-diagonal entries are diagonal variables of later columns, which
makes the margin on the last d - j diagonal variables a valid sub-vine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class StructureError(ValueError):
    """Matrix does not encode a valid R-vine tree sequence."""


def _as_matrix(matrix):
    m = np.asarray(matrix, dtype=int)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise StructureError("structure matrix must be square")
    return m


class RVineStructure:
    """Validated R-vine structure matrix."""

    def __init__(self, matrix):
        self.matrix = _as_matrix(matrix)
        self.d = self.matrix.shape[0]
        self._validate()

    @property
    def order(self):
        """Diagonal order: variable labels at positions 1..d."""
        return np.diag(self.matrix).copy()

    def slots(self):
        """All edge slots (col, row), bottom row (tree 1) first."""
        d = self.d
        for row in range(d - 1, 0, -1):
            for col in range(min(row, d - 1)):
                yield (col, row)

    def tree_of(self, col, row):
        return self.d - row

    def cond_pair(self, col, row):
        """Conditioned pair (diagonal variable, row entry) of a slot."""
        return int(self.matrix[col, col]), int(self.matrix[row, col])

    def conditioning(self, col, row):
        """Conditioning variables of a slot (entries below the row)."""
        return self.matrix[row + 1:self.d, col].copy()

    def slots_of_tree(self, tree):
        row = self.d - tree
        return [(col, row) for col in range(row)]

    def _validate(self):
        m, d = self.matrix, self.d
        if d < 1:
            raise StructureError("dimension must be at least 1")
        if sorted(np.diag(m)) != list(range(1, d + 1)):
            raise StructureError("diagonal must be a permutation of 1..d")
        if np.any(np.triu(m, 1) != 0):
            raise StructureError("entries above the diagonal must be 0")
        diag = self.order
        for j in range(d):
            col = set(m[j:, j].tolist())
            allowed = {int(diag[j])} | set(int(x) for x in diag[j + 1:])
            if not col <= allowed:
                raise StructureError(f"column {j} breaks the diagonal nesting property")
            if len(col) != d - j:
                raise StructureError(f"column {j} has repeated entries")
        # proximity condition, checked operationally: the h-recursion must
        # find both conditional arguments of every edge among previously
        # produced ones when sweeping columns right to left.
        available = {(int(v), frozenset()) for v in diag}
        for col in range(d - 2, -1, -1):
            for row in range(d - 1, col, -1):
                a, b = self.cond_pair(col, row)
                cond = frozenset(int(x) for x in self.conditioning(col, row))
                if (a, cond) not in available or (b, cond) not in available:
                    raise StructureError(
                        f"slot (col {col}, row {row}) violates the proximity condition")
                available.add((a, cond | {b}))
                available.add((b, cond | {a}))

    def sub_structure(self, j):
        """Margin on the last d - j diagonal variables, relabeled by position.

        Variable ``i`` of the sub-structure corresponds to diagonal
        position ``j + i`` of this structure, so its diagonal order is the
        identity 1..d-j.
        """
        if not 0 <= j <= self.d - 1:
            raise ValueError(f"level j must be in [0, {self.d - 1}]")
        if j == 0:
            return self
        sub = self.matrix[j:, j:].copy()
        relabel = {int(v): i + 1 for i, v in enumerate(self.order[j:])}
        for col in range(sub.shape[0]):
            for row in range(col, sub.shape[0]):
                sub[row, col] = relabel[int(sub[row, col])]
        return RVineStructure(sub)

    def __eq__(self, other):
        return isinstance(other, RVineStructure) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())

    def __repr__(self):
        return f"RVineStructure(d={self.d}, order={self.order.tolist()})"


@dataclass(frozen=True)
class TreeEdge:
    """Vine tree edge with conditioned pair (a, b) and conditioning set."""

    a: int
    b: int
    cond: frozenset

    @property
    def variables(self):
        return self.cond | {self.a, self.b}


def matrix_from_trees(trees):
    """Build the structure matrix from a full tree sequence.

    ``trees[m]`` holds the d-1-m edges of tree m+1 as :class:`TreeEdge`.
    The construction peels one variable per column: the top remaining
    tree always has a single edge left, its (smaller) conditioned
    variable becomes the diagonal entry, and the rows below follow the
    unique chain of remaining edges that condition that variable.
    """
    d = len(trees[0]) + 1
    remaining = [list(t) for t in trees]
    matrix = np.zeros((d, d), dtype=int)
    for col in range(d - 1):
        top_tree = d - 2 - col  # 0-based index of tree d-1-col
        if len(remaining[top_tree]) != 1:
            raise StructureError("tree sequence is not a valid vine")
        edge = remaining[top_tree].pop()
        x = min(edge.a, edge.b)
        y = edge.a + edge.b - x
        matrix[col, col] = x
        matrix[col + 1, col] = y
        for m in range(top_tree - 1, -1, -1):
            hits = [e for e in remaining[m] if x in (e.a, e.b)]
            if len(hits) != 1:
                raise StructureError("tree sequence is not a valid vine")
            e = hits[0]
            remaining[m].remove(e)
            row = d - 1 - m
            matrix[row, col] = e.a + e.b - x
    last = ({v for t in trees for e in t for v in e.variables}
            - {int(matrix[c, c]) for c in range(d - 1)})
    matrix[d - 1, d - 1] = last.pop()
    structure = RVineStructure(matrix)
    # map each input edge to its slot so callers can attach pair-copulas
    return structure


def slot_of_edge(structure, edge):
    """Locate the matrix slot of a tree edge; returns (col, row, flipped).

    ``flipped`` is True when the edge's (a, b) orientation is reversed in
    the matrix (a appears as the row entry).
    """
    m = structure.matrix
    d = structure.d
    row = d - len(edge.cond) - 1
    for col in range(row):
        pa, pb = structure.cond_pair(col, row)
        if {pa, pb} == {edge.a, edge.b}:
            cond = frozenset(int(x) for x in structure.conditioning(col, row))
            if cond == edge.cond:
                return col, row, pa != edge.a
    raise StructureError(f"edge {edge} not found in structure")


def dvine_trees(order):
    """Tree sequence of the D-vine with tree-1 path order[0]-...-order[d-1]."""
    order = [int(v) for v in order]
    d = len(order)
    trees = []
    for m in range(1, d):
        trees.append([TreeEdge(order[i], order[i + m], frozenset(order[i + 1:i + m]))
                      for i in range(d - m)])
    return trees


def cvine_trees(order):
    """Tree sequence of the C-vine with root sequence order[0], order[1], ..."""
    order = [int(v) for v in order]
    d = len(order)
    trees = []
    for m in range(1, d):
        root = order[m - 1]
        cond = frozenset(order[:m - 1])
        trees.append([TreeEdge(root, order[k], cond) for k in range(m, d)])
    return trees


def dvine_structure(order):
    return matrix_from_trees(dvine_trees(order))


def cvine_structure(order):
    return matrix_from_trees(cvine_trees(order))
