"""R-vine copula models: density, simulation, conditionals, truncation.

The evaluation engine is a single column sweep over the structure
matrix. It keeps a store of conditional CDF values keyed by
``(variable, frozenset(conditioning set))``; sweeping columns right to
left and rows bottom to top guarantees every lookup was produced
earlier, which is exactly the proximity condition. The same engine
serves plain and conditionally varying models: edges are evaluator
objects that may read raw conditioning values (``raw``) per observation.
"""

from __future__ import annotations

import numpy as np

from .bicop import INDEPENDENCE, BivariateCopula, as_generator
from .families import clamp01
from .structure import RVineStructure


class _CopEdge:
    """Evaluator wrapping a constant pair-copula."""

    __slots__ = ("cop", "is_indep")

    def __init__(self, cop):
        self.cop = cop
        self.is_indep = cop.family == "indep"

    def evaluate(self, z1, z2, raw, want_logpdf, want_h1, want_h2):
        if self.is_indep:
            shape = np.broadcast(z1, z2).shape
            return (np.zeros(shape) if want_logpdf else None,
                    np.broadcast_to(z2, shape) if want_h1 else None,
                    np.broadcast_to(z1, shape) if want_h2 else None)
        return self.cop.evaluate(z1, z2, want_logpdf, want_h1, want_h2)

    def hinv2(self, w, z2, raw):
        return self.cop.hinv("second", w, z2)


class RVineModel:
    """Simplified R-vine copula: structure plus one copula per edge slot.

    Immutable after construction. Slots of trees above
    ``truncation_level`` must hold (and default to) the independence
    copula.
    """

    def __init__(self, structure: RVineStructure, pair_copulas=None, truncation_level=None):
        self.structure = structure
        d = structure.d
        if truncation_level is None:
            truncation_level = d - 1
        if not 0 <= truncation_level <= max(d - 1, 0):
            raise ValueError(f"truncation level must be in [0, {d - 1}]")
        self.truncation_level = int(truncation_level)
        pcs = dict(pair_copulas or {})
        self.pair_copulas = {}
        for col, row in structure.slots():
            cop = pcs.pop((col, row), INDEPENDENCE)
            if structure.tree_of(col, row) > self.truncation_level and cop.family != "indep":
                raise ValueError(
                    f"slot (col {col}, row {row}) lies above truncation level "
                    f"{self.truncation_level} but is not independence")
            self.pair_copulas[(col, row)] = cop
        if pcs:
            raise ValueError(f"pair copulas given for invalid slots: {sorted(pcs)}")
        self._edges = {slot: _CopEdge(cop) for slot, cop in self.pair_copulas.items()}

    @property
    def d(self):
        return self.structure.d

    @property
    def order(self):
        return self.structure.order

    @property
    def n_params(self):
        return sum(c.n_params for c in self.pair_copulas.values())

    def _edge(self, col, row):
        return self._edges[(col, row)]

    # -- evaluation ---------------------------------------------------------

    def logdensity(self, u):
        u = np.atleast_2d(np.asarray(u, dtype=float))
        raw = _raw_from_data(self, u)
        store = _init_store(raw)
        total = np.zeros(u.shape[0])
        for col in range(self.d - 2, -1, -1):
            total = total + _eval_column(self, col, store, raw, want_logpdf=True)
        return total

    def density(self, u):
        return np.exp(self.logdensity(u))

    def loglik(self, data):
        return float(np.sum(self.logdensity(data)))

    def rosenblatt(self, u):
        return _rosenblatt(self, u)

    def inverse_rosenblatt(self, w):
        return _inverse_rosenblatt(self, w)

    def sample(self, n, rng):
        rng = as_generator(rng)
        return _inverse_rosenblatt(self, rng.random((int(n), self.d)))

    def sub_model(self, j):
        if j == 0:
            return self
        sub_struct = self.structure.sub_structure(j)
        pcs = {(col - j, row - j): cop for (col, row), cop in self.pair_copulas.items()
               if col >= j}
        return RVineModel(sub_struct, pcs,
                          min(self.truncation_level, sub_struct.d - 1))

    def truncate(self, k):
        return truncate(self, k)

    def to_dict(self):
        d = self.d
        edges = []
        for (col, row), cop in sorted(self.pair_copulas.items(), key=lambda s: (d - s[0][1], s[0][0])):
            edges.append({"tree": d - row, "edge": col, **cop.to_dict()})
        return {"d": d, "matrix": self.structure.matrix.flatten().tolist(),
                "truncation": self.truncation_level, "pair_copulas": edges}

    def __repr__(self):
        return (f"RVineModel(d={self.d}, truncation={self.truncation_level}, "
                f"params={self.n_params})")


# ---------------------------------------------------------------------------
# engine


def _raw_from_data(model, u):
    if u.shape[1] != model.d:
        raise ValueError(f"expected {model.d} columns, got {u.shape[1]}")
    return {v: clamp01(u[:, v - 1]) for v in range(1, model.d + 1)}


def _init_store(raw):
    return {(v, frozenset()): arr for v, arr in raw.items()}


def _lookup_keys(structure):
    """Store keys ever looked up when sweeping this structure."""
    if not hasattr(structure, "_lookup_cache"):
        keys = set()
        for col, row in structure.slots():
            a, b = structure.cond_pair(col, row)
            cond = frozenset(int(x) for x in structure.conditioning(col, row))
            keys.add((a, cond))
            keys.add((b, cond))
        structure._lookup_cache = keys
    return structure._lookup_cache


def _rosenblatt_targets(structure):
    """Full-chain conditionals (one per column) used by PIT transforms."""
    diag = structure.order
    return {(int(diag[c]), frozenset(int(x) for x in diag[c + 1:]))
            for c in range(structure.d - 1)}


def _eval_column(model, col, store, raw, want_logpdf=False, targets=frozenset()):
    """Evaluate one column bottom-up, storing only conditionals that the
    remaining sweep (or ``targets``) can still ask for."""
    m = model.structure.matrix
    d = model.d
    needed = _lookup_keys(model.structure) | targets
    total = 0.0
    for row in range(d - 1, col, -1):
        a = int(m[col, col])
        b = int(m[row, col])
        cond = frozenset(int(x) for x in m[row + 1:d, col])
        z1 = store[(a, cond)]
        z2 = store[(b, cond)]
        edge = model._edge(col, row)
        key2 = (a, cond | {b})
        key1 = (b, cond | {a})
        lp, h1, h2 = edge.evaluate(z1, z2, raw,
                                   want_logpdf and not edge.is_indep,
                                   key1 in needed,
                                   key2 in needed)
        if lp is not None:
            total = total + lp
        if h1 is not None:
            store[key1] = h1
        if h2 is not None:
            store[key2] = h2
    return total


def _rosenblatt(model, u):
    u = np.atleast_2d(np.asarray(u, dtype=float))
    d = model.d
    raw = _raw_from_data(model, u)
    store = _init_store(raw)
    diag = model.order
    targets = _rosenblatt_targets(model.structure)
    w = np.empty_like(u)
    w[:, diag[d - 1] - 1] = raw[int(diag[d - 1])]
    for col in range(d - 2, -1, -1):
        _eval_column(model, col, store, raw, targets=targets)
        a = int(diag[col])
        w[:, a - 1] = store[(a, frozenset(int(x) for x in diag[col + 1:]))]
    return w


def _inverse_rosenblatt(model, w):
    w = np.atleast_2d(np.asarray(w, dtype=float))
    d = model.d
    if w.shape[1] != d:
        raise ValueError(f"expected {d} columns, got {w.shape[1]}")
    m = model.structure.matrix
    diag = model.order
    v_last = int(diag[d - 1])
    raw = {v_last: clamp01(w[:, v_last - 1])}
    store = {(v_last, frozenset()): raw[v_last]}
    u = np.empty_like(w)
    u[:, v_last - 1] = raw[v_last]
    for col in range(d - 2, -1, -1):
        a = int(diag[col])
        s = clamp01(w[:, a - 1])
        for row in range(col + 1, d):
            b = int(m[row, col])
            cond = frozenset(int(x) for x in m[row + 1:d, col])
            s = model._edge(col, row).hinv2(s, store[(b, cond)], raw)
        raw[a] = s
        u[:, a - 1] = s
        store[(a, frozenset())] = s
        _eval_column(model, col, store, raw)
    return u


def _conditional_grid(model, j, t, rest, want="density"):
    """Conditional density/CDF of diagonal position j given positions j+1..d.

    ``t`` has shape (T,): values for the conditioned variable.
    ``rest`` has shape (P, d-j): conditioning values, ordered by diagonal
    position. Returns (P, T).
    """
    d = model.d
    if not 1 <= j <= d - 1:
        raise ValueError(f"level j must be in [1, {d - 1}]")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    rest = np.atleast_2d(np.asarray(rest, dtype=float))
    if rest.shape[1] != d - j:
        raise ValueError(f"conditioning block must have {d - j} columns")
    diag = model.order
    raw = {int(diag[j - 1]): clamp01(t)[None, :]}
    for i, pos in enumerate(range(j, d)):
        raw[int(diag[pos])] = clamp01(rest[:, i])[:, None]
    store = _init_store(raw)
    col = j - 1
    for c in range(d - 2, col, -1):
        _eval_column(model, c, store, raw)
    if want == "density":
        out = np.exp(_eval_column(model, col, store, raw, want_logpdf=True))
    else:
        a = int(diag[col])
        key = (a, frozenset(int(x) for x in diag[col + 1:]))
        _eval_column(model, col, store, raw, targets={key})
        out = store[key]
    return np.broadcast_to(out, (rest.shape[0], t.shape[0])).copy()


def conditional_density(model, j, u_j, u_rest):
    """c_{j|(j+1):d}(u_j | u_rest) in the model's diagonal order."""
    u_j = np.asarray(u_j, dtype=float)
    scalar = u_j.ndim == 0
    out = _conditional_grid(model, j, np.atleast_1d(u_j), np.atleast_2d(u_rest), "density")[0]
    return float(out[0]) if scalar else out


def conditional_cdf(model, j, u_j, u_rest):
    """C_{j|(j+1):d}(u_j | u_rest) via the column's h-function chain."""
    u_j = np.asarray(u_j, dtype=float)
    scalar = u_j.ndim == 0
    out = _conditional_grid(model, j, np.atleast_1d(u_j), np.atleast_2d(u_rest), "cdf")[0]
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# module-level conveniences mirroring the model methods


def density(model, u):
    return model.density(u)


def sample(model, n, rng):
    return model.sample(n, rng)


def rosenblatt(model, u):
    return model.rosenblatt(u)


def inverse_rosenblatt(model, w):
    return model.inverse_rosenblatt(w)


def sub_model(model, j):
    return model.sub_model(j)


def truncate(model, k):
    """Copy of the model with all trees above k set to independence."""
    d = model.d
    if not 0 <= k <= d - 1:
        raise ValueError(f"truncation level must be in [0, {d - 1}]")
    pcs = {}
    for (col, row), cop in model.pair_copulas.items():
        pcs[(col, row)] = cop if model.structure.tree_of(col, row) <= k else INDEPENDENCE
    return RVineModel(model.structure, pcs, k)


def independence_vine(structure_or_d):
    """The d-dimensional independence copula as a 0-truncated vine."""
    if isinstance(structure_or_d, RVineStructure):
        structure = structure_or_d
    else:
        from .structure import dvine_structure
        structure = dvine_structure(range(1, int(structure_or_d) + 1))
    return RVineModel(structure, {}, 0)


def random_correlation(d, rng):
    """Draw from the uniform distribution on d x d correlation matrices.

    Partial correlations on a C-vine are independent stretched Beta
    variables with a tree-level parameter; converting them back gives a
    uniformly distributed correlation matrix (the onion construction's
    vine form).
    """
    if d < 2:
        raise ValueError("need d >= 2")
    rng = as_generator(rng)
    pcor = np.zeros((d, d))
    for i in range(d - 1):
        beta = 1.0 + (d - 2 - i) / 2.0
        for jj in range(i + 1, d):
            pcor[i, jj] = 2.0 * rng.beta(beta, beta) - 1.0
    corr = np.eye(d)
    for i in range(d - 1):
        for jj in range(i + 1, d):
            r = pcor[i, jj]
            for k in range(i - 1, -1, -1):
                r = (r * np.sqrt((1.0 - pcor[k, i] ** 2) * (1.0 - pcor[k, jj] ** 2))
                     + pcor[k, i] * pcor[k, jj])
            corr[i, jj] = corr[jj, i] = r
    return corr
