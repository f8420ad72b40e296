"""Sequential vine copula estimation.

`fit_dissmann` grows the tree sequence greedily: each tree is a maximum
spanning tree on absolute sample Kendall's tau, each selected edge gets
an AIC-selected pair-copula, and h-transforms of the fitted copulas
provide the pseudo-observations for the next tree. C-vine and D-vine
classes restrict the candidate trees to stars and paths. Gaussian and t
copulas are estimated directly on the correlation scale and returned as
their equivalent partial-correlation vines.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats

from . import bicop
from .bicop import INDEPENDENCE, BivariateCopula, BoundaryFitWarning, empirical_tau
from .families import PARAM_BOUNDS, clamp01
from .rvine import RVineModel
from .structure import (RVineStructure, TreeEdge, dvine_structure, matrix_from_trees,
                        slot_of_edge)

DEFAULT_FAMILYSET = ("indep", "gaussian", "t", "clayton", "gumbel", "frank", "joe")


class DataError(ValueError):
    """Input data unusable for fitting."""


@dataclass(frozen=True)
class FitConfig:
    """Configuration of a sequential vine fit."""

    familyset: tuple = DEFAULT_FAMILYSET
    structure: RVineStructure | None = None
    structure_class: str = "rvine"
    truncation_level: int | None = None

    def __post_init__(self):
        if self.structure_class not in ("rvine", "cvine", "dvine", "gaussian_copula", "t_copula"):
            raise ValueError(f"unknown structure class {self.structure_class!r}")
        if self.structure is not None and self.structure_class != "rvine":
            raise ValueError("a fixed structure requires structure_class='rvine'")


def _check_data(data, min_rows):
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise DataError("data must be a 2-D array")
    n, d = data.shape
    if n < min_rows:
        raise DataError(f"need at least {min_rows} rows, got {n}")
    if not np.all(np.isfinite(data)):
        raise DataError("data contains non-finite values")
    if np.any(data <= 0.0) or np.any(data >= 1.0):
        raise DataError("data must lie strictly inside (0,1); rank-transform first")
    if np.any(np.ptp(data, axis=0) <= 0):
        col = int(np.argmin(np.ptp(data, axis=0)))
        raise DataError(f"column {col} is constant")
    return data


# ---------------------------------------------------------------------------
# spanning trees


def _prim_mst(nodes, weights):
    """Maximum spanning tree by Prim's algorithm.

    ``weights[(i, j)]`` for i < j (node indices). Ties break toward the
    lexicographically smallest index pair, so results are platform
    independent.
    """
    n = len(nodes)
    in_tree = [0]
    out = set(range(1, n))
    edges = []
    while out:
        best = None
        for i in sorted(in_tree):
            for j in sorted(out):
                key = (min(i, j), max(i, j))
                if key not in weights:
                    continue
                w = weights[key]
                if best is None or w > best[0] + 1e-15:
                    best = (w, key)
        if best is None:
            raise DataError("candidate graph is disconnected")
        _, (i, j) = best
        edges.append((i, j))
        new = j if j in out else i
        in_tree.append(new)
        out.remove(new)
    return edges


def _path_tree(n, weights):
    """Greedy maximum-weight Hamiltonian path (D-vine first tree).

    Repeatedly adds the heaviest admissible edge (degree <= 2, no cycle),
    deterministic under ties.
    """
    order = sorted(weights.items(), key=lambda kv: (-kv[1], kv[0]))
    degree = [0] * n
    comp = list(range(n))

    def find(x):
        while comp[x] != x:
            comp[x] = comp[comp[x]]
            x = comp[x]
        return x

    edges = []
    for (i, j), _ in order:
        if degree[i] >= 2 or degree[j] >= 2:
            continue
        ri, rj = find(i), find(j)
        if ri == rj:
            continue
        comp[ri] = rj
        degree[i] += 1
        degree[j] += 1
        edges.append((i, j))
        if len(edges) == n - 1:
            break
    if len(edges) != n - 1:
        raise DataError("failed to build a path tree")
    return edges


def _star_root(n, weights):
    """Root maximizing the total absolute dependence of a star tree."""
    totals = []
    for r in range(n):
        totals.append(sum(weights.get((min(r, k), max(r, k)), 0.0)
                          for k in range(n) if k != r))
    return int(np.argmax(totals))


# ---------------------------------------------------------------------------
# the treewise algorithm


@dataclass
class _Node:
    """A node of tree m: pseudo-observations of one selected edge."""

    conditioned: tuple          # (a, b) variable labels; for tree-1 nodes (v,)
    cond: frozenset
    u_a: np.ndarray             # C(a | cond u {b}) for tree >= 2 nodes
    u_b: np.ndarray | None
    parents: tuple              # indices of the previous-tree nodes it joins


def _pseudo_obs(node, var):
    """Pseudo-observation C(var | rest of node's variable set)."""
    if node.u_b is None:  # marginal node
        return node.u_a
    a, b = node.conditioned
    return node.u_a if var == a else node.u_b


def _grow_trees(data, config, max_trees):
    """Select and fit trees 1..max_trees; independence-complete the rest.

    Returns (trees, fitted), where ``trees[m]`` lists TreeEdge and
    ``fitted[m]`` the matching copulas (None above max_trees).
    """
    n, d = data.shape
    familyset = tuple(config.familyset)
    nodes = [_Node((v,), frozenset(), clamp01(data[:, v - 1]), None, (v,))
             for v in range(1, d + 1)]
    trees = []
    fitted = []
    for m in range(1, d):
        k = len(nodes)
        allowed = {}
        candidates = {}
        for i in range(k):
            for j in range(i + 1, k):
                if m > 1 and not set(nodes[i].parents) & set(nodes[j].parents):
                    continue  # proximity: previous edges must share a node
                vi = nodes[i].cond | set(nodes[i].conditioned)
                vj = nodes[j].cond | set(nodes[j].conditioned)
                shared = vi & vj
                cond = frozenset(shared)
                a = next(iter(vi - shared))
                b = next(iter(vj - shared))
                za = _pseudo_obs(nodes[i], a)
                zb = _pseudo_obs(nodes[j], b)
                candidates[(i, j)] = (a, b, cond, za, zb)
                allowed[(i, j)] = abs(empirical_tau(za, zb))
        if config.structure_class == "cvine":
            root = _star_root(k, allowed)
            selected = [(min(root, j), max(root, j)) for j in range(k) if j != root]
            missing = [e for e in selected if e not in allowed]
            if missing:
                raise DataError("C-vine star is not proximity-admissible")
        elif config.structure_class == "dvine" and m == 1:
            selected = [tuple(sorted(e)) for e in _path_tree(k, allowed)]
        elif config.structure_class == "dvine":
            selected = sorted(allowed)  # path continuation above tree 1 is forced
            if len(selected) != k - 1:
                raise DataError("D-vine continuation is not a path")
        else:
            selected = [tuple(sorted(e)) for e in _prim_mst(list(range(k)), allowed)]
        tree_edges = []
        tree_cops = []
        new_nodes = []
        estimate = m <= max_trees
        for (i, j) in sorted(selected):
            a, b, cond, za, zb = candidates[(i, j)]
            if estimate:
                cop = bicop.select_family(np.column_stack([za, zb]), familyset)
            else:
                cop = INDEPENDENCE
            tree_edges.append(TreeEdge(a, b, cond))
            tree_cops.append(cop if estimate else None)
            new_nodes.append(_Node(
                (a, b), cond,
                cop.hfunc("second", za, zb),   # C(a | cond u {b})
                cop.hfunc("first", za, zb),    # C(b | cond u {a})
                (i, j)))
        trees.append(tree_edges)
        fitted.append(tree_cops)
        nodes = new_nodes
    return trees, fitted


def _fit_fixed_structure(data, structure, config, max_trees, families=None):
    """Estimate pair-copulas slot by slot on a fixed structure.

    ``families``: optional map slot -> (family, rotation) freezing the
    family choice (the fast bootstrap path); otherwise AIC selection per
    edge from the configured familyset.
    """
    from .rvine import _eval_column, _init_store, _lookup_keys  # noqa: F401

    d = structure.d
    raw = {v: clamp01(data[:, v - 1]) for v in range(1, d + 1)}
    store = {(v, frozenset()): arr for v, arr in raw.items()}
    pcs = {}
    needed = _lookup_keys(structure)
    for tree in range(1, d):
        for col, row in structure.slots_of_tree(tree):
            a, b = structure.cond_pair(col, row)
            cond = frozenset(int(x) for x in structure.conditioning(col, row))
            z1 = store[(a, cond)]
            z2 = store[(b, cond)]
            if tree <= max_trees:
                pair = np.column_stack([z1, z2])
                if families is not None:
                    family, rotation = families[(col, row)]
                    if family == "indep":
                        cop = INDEPENDENCE
                    else:
                        with warnings.catch_warnings():
                            warnings.simplefilter("ignore", BoundaryFitWarning)
                            cop = bicop.fit_mle(pair, family, rotation)
                else:
                    cop = bicop.select_family(pair, config.familyset)
            else:
                cop = INDEPENDENCE
            pcs[(col, row)] = cop
            key2 = (a, cond | {b})
            key1 = (b, cond | {a})
            if key2 in needed:
                store[key2] = cop.hfunc("second", z1, z2)
            if key1 in needed:
                store[key1] = cop.hfunc("first", z1, z2)
    return RVineModel(structure, pcs, min(max_trees, d - 1))


def fit_dissmann(data, config: FitConfig | None = None, min_rows=30):
    """Treewise sequential fit of a simplified vine copula."""
    config = config or FitConfig()
    data = _check_data(data, min_rows)
    d = data.shape[1]
    if d < 2:
        raise DataError("need at least 2 variables")
    if config.structure_class == "gaussian_copula":
        return fit_gaussian_copula(data)
    if config.structure_class == "t_copula":
        return fit_t_copula(data)
    trunc = config.truncation_level
    max_trees = d - 1 if trunc is None else min(trunc, d - 1)
    if config.structure is not None:
        if config.structure.d != d:
            raise DataError("fixed structure dimension does not match data")
        return _fit_fixed_structure(data, config.structure, config, max_trees)
    trees, fitted = _grow_trees(data, config, max_trees)
    structure = matrix_from_trees(trees)
    pcs = {}
    for t_edges, t_cops in zip(trees, fitted):
        for edge, cop in zip(t_edges, t_cops):
            col, row, flipped = slot_of_edge(structure, edge)
            if cop is None:
                cop = INDEPENDENCE
            elif flipped and cop.rotation in (90, 270):
                cop = BivariateCopula(cop.family, 360 - cop.rotation, cop.parameters)
            pcs[(col, row)] = cop
    return RVineModel(structure, pcs, max_trees)


def refit_parameters(data, template: RVineModel):
    """Re-estimate all parameters of a fitted model, keeping structure,
    families, rotations and the truncation level fixed."""
    data = _check_data(data, 30)
    families = {slot: (c.family, c.rotation) for slot, c in template.pair_copulas.items()}
    cfg = FitConfig()
    return _fit_fixed_structure(data, template.structure, cfg,
                                template.truncation_level, families)


# ---------------------------------------------------------------------------
# gaussian / t copulas as vines


def partial_correlation(corr, a, b, cond):
    """Partial correlation of variables a, b given ``cond`` (0-based)."""
    idx = [a, b] + list(cond)
    sub = corr[np.ix_(idx, idx)]
    prec = np.linalg.inv(sub)
    return float(-prec[0, 1] / np.sqrt(prec[0, 0] * prec[1, 1]))


def nearest_positive_definite(corr, floor=1e-6):
    """Eigenvalue-clipped projection onto correlation matrices."""
    vals, vecs = np.linalg.eigh(corr)
    if vals.min() > floor:
        return corr
    vals = np.maximum(vals, floor)
    fixed = (vecs * vals) @ vecs.T
    scale = np.sqrt(np.diag(fixed))
    return fixed / np.outer(scale, scale)


def tau_correlation_matrix(data):
    """sin(pi/2 tau) pairwise correlations, projected positive definite."""
    n, d = data.shape
    corr = np.eye(d)
    for i in range(d):
        for j in range(i + 1, d):
            corr[i, j] = corr[j, i] = np.sin(np.pi / 2.0 * empirical_tau(data[:, i], data[:, j]))
    return nearest_positive_definite(corr)


def vine_from_correlation(corr, nu=None, order=None):
    """D-vine with partial-correlation parameters equivalent to the
    Gaussian (or, with ``nu``, the t) copula with matrix ``corr``.

    Tree-m t edges get nu + (m - 1) degrees of freedom, capped at the
    supported bound.
    """
    d = corr.shape[0]
    if order is None:
        order = list(range(1, d + 1))
    structure = dvine_structure(order)
    nu_cap = PARAM_BOUNDS["t"][1][1]
    pcs = {}
    for col, row in structure.slots():
        a, b = structure.cond_pair(col, row)
        cond = [int(x) - 1 for x in structure.conditioning(col, row)]
        rho = partial_correlation(corr, a - 1, b - 1, cond)
        rho = float(np.clip(rho, -0.9999, 0.9999))
        tree = structure.tree_of(col, row)
        if nu is None:
            pcs[(col, row)] = BivariateCopula("gaussian", 0, (rho,))
        else:
            pcs[(col, row)] = BivariateCopula("t", 0, (rho, min(nu + tree - 1.0, nu_cap)))
    return RVineModel(structure, pcs)


def fit_gaussian_copula(data):
    """Gaussian copula fit, returned as its partial-correlation vine."""
    data = _check_data(data, 30)
    return vine_from_correlation(tau_correlation_matrix(data))


def fit_t_copula(data, nu_bounds=(2.0, 30.0)):
    """t copula fit: tau-inverted correlations, one profiled nu."""
    data = _check_data(data, 30)
    corr = tau_correlation_matrix(data)

    def neg_ll(nu):
        x = special.stdtrit(nu, data)
        dens = stats.multivariate_t(loc=np.zeros(corr.shape[0]), shape=corr, df=nu)
        ll = dens.logpdf(x).sum() - stats.t(df=nu).logpdf(x).sum()
        return -float(ll)

    res = optimize.minimize_scalar(neg_ll, bounds=nu_bounds, method="bounded",
                                   options={"xatol": 1e-3})
    model = vine_from_correlation(corr, nu=float(res.x))
    return model


def t_copula_model(corr, nu):
    """The t copula with given correlation matrix as a D-vine."""
    return vine_from_correlation(np.asarray(corr, dtype=float), nu=float(nu))


def gaussian_copula_model(corr):
    return vine_from_correlation(np.asarray(corr, dtype=float))
