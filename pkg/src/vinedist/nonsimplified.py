"""Vines whose conditional pair-copulas vary with a conditioning value.

Each conditional edge carries a Kendall's tau that is linear in one
conditioning variable (the edge's "driver"): tau(u) = a + (b - a) u.
Asymmetric families switch to their 90-degree rotation wherever tau(u)
goes negative; a = b collapses the edge to an ordinary simplified one.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import families as fam
from .bicop import INDEPENDENCE, BivariateCopula, as_generator, empirical_tau
from .families import clamp01
from .fit import DataError, _check_data
from .rvine import (RVineModel, _CopEdge, _conditional_grid, _eval_column, _init_store,
                    _inverse_rosenblatt, _lookup_keys, _rosenblatt, _raw_from_data)
from .structure import RVineStructure

TAU_CLIP = 0.95  # parameter maps diverge as |tau| -> 1


@dataclass(frozen=True)
class TauFunction:
    """Linear Kendall's tau in the driver variable: tau(u) = a + (b-a) u."""

    a: float
    b: float
    driver: int

    def __post_init__(self):
        if not (-1.0 <= self.a <= 1.0 and -1.0 <= self.b <= 1.0):
            raise ValueError("tau endpoints must lie in [-1, 1]")

    def __call__(self, u):
        return self.a + (self.b - self.a) * np.asarray(u, dtype=float)

    @property
    def constant(self):
        return self.a == self.b


class _VaryingEdge:
    """Edge evaluator whose parameter is tau_to_param(tau(u_driver)).

    Sign switches are handled by the rotation policy: where tau(u) < 0,
    an asymmetric family evaluates as its 90-degree rotation at |tau|;
    symmetric families take the negative parameter natively. tau values
    are clipped to +-0.95 before the parameter map.
    """

    is_indep = False

    def __init__(self, family, tau_fn: TauFunction, nu=None):
        if family == "indep":
            raise ValueError("independence edges cannot vary")
        self.family = family
        self.tau_fn = tau_fn
        self.nu = nu
        self._symmetric = family in fam.SYMMETRIC_FAMILIES

    def _theta(self, raw):
        tau = np.clip(self.tau_fn(raw[self.tau_fn.driver]), -TAU_CLIP, TAU_CLIP)
        if self._symmetric:
            if self.family in ("gaussian", "t"):
                theta = np.sin(np.pi * tau / 2.0)
            elif np.ptp(tau) == 0:  # constant edge: match the scalar map exactly
                theta = np.full_like(tau, fam.theta_from_tau("frank", float(np.min(tau))))
            else:
                theta = _frank_theta_vec(tau)
            return theta, None
        if self.family == "joe" and np.ptp(tau) == 0:
            theta = np.full_like(tau, fam.theta_from_tau("joe", abs(float(np.min(tau)))))
        else:
            theta = _theta_vec(self.family, np.abs(tau))
        return theta, tau < 0.0

    def evaluate(self, z1, z2, raw, want_logpdf, want_h1, want_h2):
        theta, neg = self._theta(raw)
        args = (theta, self.nu) if self.family == "t" else (theta,)
        lp = h1 = h2 = None
        if neg is None or not np.any(neg):
            if want_logpdf:
                lp = fam.LOGPDF[self.family](z1, z2, *args)
            if want_h1:
                h1 = clamp01(fam.HFUNC1[self.family](z1, z2, *args))
            if want_h2:
                h2 = clamp01(fam.HFUNC1[self.family](z2, z1, *args))
            return lp, h1, h2
        # mixed-sign tau: evaluate base and 90-degree branches and blend
        z1b, z2b, th, ng = np.broadcast_arrays(z1, z2, theta, neg)
        base_args = (th, self.nu) if self.family == "t" else (th,)
        logpdf = fam.LOGPDF[self.family]
        hfunc1 = fam.HFUNC1[self.family]
        if want_logpdf:
            lp = np.where(ng, logpdf(z2b, 1.0 - z1b, *base_args),
                          logpdf(z1b, z2b, *base_args))
        if want_h1:
            # rot 90: hfunc1(u,v) = hfunc1_0(1-u, v) for exchangeable bases
            h1 = clamp01(np.where(ng, hfunc1(1.0 - z1b, z2b, *base_args),
                                  hfunc1(z1b, z2b, *base_args)))
        if want_h2:
            h2 = clamp01(np.where(ng, 1.0 - hfunc1(z2b, 1.0 - z1b, *base_args),
                                  hfunc1(z2b, z1b, *base_args)))
        return lp, h1, h2

    def hinv2(self, w, z2, raw):
        """Solve hfunc2(z1, z2) = w for z1 with per-observation parameters."""
        theta, neg = self._theta(raw)
        args = (theta, self.nu) if self.family == "t" else (theta,)
        hinv1 = fam.HINV1[self.family]
        if neg is None or not np.any(neg):
            return clamp01(hinv1(w, z2, *args))
        wb, z2b, th, ng = np.broadcast_arrays(w, z2, theta, neg)
        base_args = (th, self.nu) if self.family == "t" else (th,)
        # rot 90: hfunc2(u,v) = 1 - hfunc1_0(v, 1-u)  =>  u = 1 - hinv1_0(1-w, v)
        return clamp01(np.where(ng, 1.0 - hinv1(1.0 - wb, z2b, *base_args),
                                hinv1(wb, z2b, *base_args)))

    def edge_loglik(self, z1, z2, udrv):
        raw = {self.tau_fn.driver: udrv}
        lp, _, _ = self.evaluate(z1, z2, raw, True, False, False)
        return float(np.sum(lp))


def _theta_vec(family, tau_abs):
    """Vectorized base-orientation parameter map for nonnegative tau."""
    if family == "clayton":
        lo, hi = fam.PARAM_BOUNDS["clayton"][0]
        return np.clip(2.0 * tau_abs / np.maximum(1.0 - tau_abs, 1e-12), lo, hi)
    if family == "gumbel":
        lo, hi = fam.PARAM_BOUNDS["gumbel"][0]
        return np.clip(1.0 / np.maximum(1.0 - tau_abs, 1e-12), lo, hi)
    if family == "joe":
        return _joe_theta_vec(tau_abs)
    raise ValueError(f"no vectorized parameter map for {family}")


_JOE_TAU_GRID = None
_JOE_THETA_GRID = None
_FRANK_TAU_GRID = None
_FRANK_THETA_GRID = None


def _joe_theta_vec(tau_abs):
    """Monotone-interpolated inverse of the Joe tau map (grid to 1e-8)."""
    global _JOE_TAU_GRID, _JOE_THETA_GRID
    if _JOE_TAU_GRID is None:
        thetas = np.concatenate([np.linspace(1.0, 3.0, 800, endpoint=False),
                                 np.geomspace(3.0, 30.0, 1200)])
        taus = np.array([fam.joe_tau(t) for t in thetas])
        _JOE_TAU_GRID, _JOE_THETA_GRID = taus, thetas
    return np.interp(tau_abs, _JOE_TAU_GRID, _JOE_THETA_GRID)


def _frank_theta_vec(tau):
    global _FRANK_TAU_GRID, _FRANK_THETA_GRID
    if _FRANK_TAU_GRID is None:
        thetas = np.concatenate([np.geomspace(1e-4, 1.0, 400, endpoint=False),
                                 np.linspace(1.0, 35.0, 1600)])
        taus = np.array([fam.frank_tau(t) for t in thetas])
        _FRANK_TAU_GRID, _FRANK_THETA_GRID = taus, thetas
    theta = np.interp(np.abs(tau), _FRANK_TAU_GRID, _FRANK_THETA_GRID)
    return np.where(tau >= 0, theta, -theta)


class NonSimplifiedModel:
    """R-vine with linear-tau conditional edges.

    Tree-1 slots hold ordinary :class:`BivariateCopula`; conditional
    slots hold (family, TauFunction, optional nu) specifications. The
    evaluation engine is shared with :class:`RVineModel`.
    """

    def __init__(self, structure: RVineStructure, tree1, cond_edges):
        self.structure = structure
        d = structure.d
        self.tree1 = dict(tree1)
        self.cond_edges = dict(cond_edges)
        self._edges = {}
        for col, row in structure.slots():
            tree = structure.tree_of(col, row)
            if tree == 1:
                cop = self.tree1.get((col, row), INDEPENDENCE)
                self._edges[(col, row)] = _CopEdge(cop)
            else:
                spec = self.cond_edges.get((col, row))
                if spec is None:
                    self._edges[(col, row)] = _CopEdge(INDEPENDENCE)
                else:
                    family, tau_fn, nu = spec
                    cond_vars = set(int(x) for x in structure.conditioning(col, row))
                    if tau_fn.driver not in cond_vars:
                        raise ValueError(
                            f"driver {tau_fn.driver} is not a conditioning variable "
                            f"of slot (col {col}, row {row})")
                    self._edges[(col, row)] = _VaryingEdge(family, tau_fn, nu)

    @property
    def d(self):
        return self.structure.d

    @property
    def order(self):
        return self.structure.order

    @property
    def n_params(self):
        total = sum(c.n_params for c in self.tree1.values())
        for family, tau_fn, nu in self.cond_edges.values():
            total += 2 + (1 if family == "t" else 0)
        return total

    def _edge(self, col, row):
        return self._edges[(col, row)]

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
        relabel = {int(v): i + 1 for i, v in enumerate(self.order[j:])}
        tree1 = {(c - j, r - j): cop for (c, r), cop in self.tree1.items() if c >= j}
        cond = {}
        for (c, r), (family, tau_fn, nu) in self.cond_edges.items():
            if c >= j:
                cond[(c - j, r - j)] = (
                    family, TauFunction(tau_fn.a, tau_fn.b, relabel[tau_fn.driver]), nu)
        return NonSimplifiedModel(sub_struct, tree1, cond)

    def to_dict(self):
        d = self.d
        edges = []
        for (col, row), cop in sorted(self.tree1.items(), key=lambda s: s[0]):
            edges.append({"tree": 1, "edge": col, **cop.to_dict()})
        for (col, row), (family, tau_fn, nu) in sorted(self.cond_edges.items(),
                                                       key=lambda s: (d - s[0][1], s[0][0])):
            entry = {"tree": d - row, "edge": col, "family": family, "rotation": 0,
                     "parameters": [] if nu is None else [nu],
                     "tau_a": tau_fn.a, "tau_b": tau_fn.b, "driver": tau_fn.driver}
            edges.append(entry)
        return {"d": d, "matrix": self.structure.matrix.flatten().tolist(),
                "truncation": d - 1, "pair_copulas": edges,
                "nonsimplified": True}

    def __repr__(self):
        return f"NonSimplifiedModel(d={self.d}, varying_edges={len(self.cond_edges)})"


def ns_density(model: NonSimplifiedModel, u):
    return model.density(u)


def ns_sample(model: NonSimplifiedModel, n, rng):
    return model.sample(n, rng)


def default_driver(structure, col):
    """The bottom-row conditioning variable of a column: the variable a
    conditional edge conditions on first (its tree-2 partner)."""
    return int(structure.matrix[structure.d - 1, col])


def from_simplified(model: RVineModel, tau_pairs=None):
    """Non-simplified counterpart of a simplified model.

    ``tau_pairs``: optional map slot -> (a, b); defaults to the constant
    (tau, tau) of each fitted conditional edge, which reproduces the
    simplified density exactly.
    """
    tau_pairs = tau_pairs or {}
    tree1 = {}
    cond = {}
    st = model.structure
    for (col, row), cop in model.pair_copulas.items():
        if st.tree_of(col, row) == 1:
            tree1[(col, row)] = cop
        elif cop.family != "indep":
            a, b = tau_pairs.get((col, row), (cop.tau, cop.tau))
            nu = cop.parameters[1] if cop.family == "t" else None
            cond[(col, row)] = (cop.family, TauFunction(a, b, default_driver(st, col)), nu)
    return NonSimplifiedModel(st, tree1, cond)


def fit_nonsimplified(data, template: RVineModel, min_per_edge=20):
    """Fit a non-simplified vine on the structure/families of a simplified fit.

    Tree-1 edges are refitted by MLE with their template family and
    rotation. Each conditional edge's tau endpoints (a, b), plus nu for
    t edges, maximize the pseudo-observation likelihood; the optimizer
    starts from the constant simplified tau and from a split-sample
    moment seed, and falls back to the simplified edge on failure.
    """
    from .bicop import BoundaryFitWarning, fit_mle

    data = _check_data(data, max(min_per_edge, 20))
    st = template.structure
    d = st.d
    if data.shape[1] != d:
        raise DataError("data dimension does not match the template structure")
    raw = {v: clamp01(data[:, v - 1]) for v in range(1, d + 1)}
    store = {(v, frozenset()): arr for v, arr in raw.items()}
    needed = _lookup_keys(st)
    tree1 = {}
    cond = {}
    edges = {}
    for tree in range(1, d):
        for col, row in st.slots_of_tree(tree):
            a, b = st.cond_pair(col, row)
            cset = frozenset(int(x) for x in st.conditioning(col, row))
            z1 = store[(a, cset)]
            z2 = store[(b, cset)]
            template_cop = template.pair_copulas[(col, row)]
            if tree == 1:
                if template_cop.family == "indep":
                    cop = INDEPENDENCE
                else:
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore", BoundaryFitWarning)
                        cop = fit_mle(np.column_stack([z1, z2]),
                                      template_cop.family, template_cop.rotation)
                tree1[(col, row)] = cop
                edge = _CopEdge(cop)
            elif template_cop.family == "indep":
                edge = _CopEdge(INDEPENDENCE)
            else:
                driver = default_driver(st, col)
                spec = _fit_varying_edge(z1, z2, raw[driver], template_cop, driver)
                cond[(col, row)] = spec
                edge = _VaryingEdge(spec[0], spec[1], spec[2])
            edges[(col, row)] = edge
            key2 = (a, cset | {b})
            key1 = (b, cset | {a})
            _, h1, h2 = edge.evaluate(z1, z2, raw, False, key1 in needed, key2 in needed)
            if h1 is not None:
                store[key1] = h1
            if h2 is not None:
                store[key2] = h2
    return NonSimplifiedModel(st, tree1, cond)


def _fit_varying_edge(z1, z2, udrv, template_cop, driver):
    """Maximize the edge likelihood over (a, b) and nu for t edges."""
    family = template_cop.family
    base_tau = template_cop.tau
    nu0 = template_cop.parameters[1] if family == "t" else None

    def make_edge(a, b, nu=None):
        return _VaryingEdge(family, TauFunction(float(np.clip(a, -1, 1)),
                                                float(np.clip(b, -1, 1)), driver), nu)

    def neg_ll(params):
        a, b = params[0], params[1]
        if not (-1.0 <= a <= 1.0 and -1.0 <= b <= 1.0):
            return 1e12
        nu = params[2] if family == "t" else None
        if nu is not None and not (2.0 <= nu <= 30.0):
            return 1e12
        try:
            return -make_edge(a, b, nu).edge_loglik(z1, z2, udrv)
        except (FloatingPointError, ValueError):
            return 1e12

    # moment seed: split the sample at the driver median
    lo_mask = udrv <= np.median(udrv)
    tau_lo = empirical_tau(z1[lo_mask], z2[lo_mask])
    tau_hi = empirical_tau(z1[~lo_mask], z2[~lo_mask])
    # extrapolate the half-sample taus (centered near driver 0.25 / 0.75)
    slope = 2.0 * (tau_hi - tau_lo)
    seed2 = (np.clip(base_tau - 0.5 * slope, -0.99, 0.99),
             np.clip(base_tau + 0.5 * slope, -0.99, 0.99))
    starts = [(base_tau, base_tau), seed2]
    best = None
    for s in starts:
        x0 = list(s) + ([nu0] if family == "t" else [])
        try:
            res = optimize.minimize(neg_ll, x0, method="Nelder-Mead",
                                    options={"xatol": 1e-4, "fatol": 1e-6,
                                             "maxiter": 400})
        except (FloatingPointError, ValueError):
            continue
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not np.isfinite(best.fun):
        warnings.warn("varying-edge fit failed; keeping the simplified edge")
        a = b = base_tau
        nu = nu0
    else:
        a, b = float(np.clip(best.x[0], -1, 1)), float(np.clip(best.x[1], -1, 1))
        nu = float(np.clip(best.x[2], 2.0, 30.0)) if family == "t" else None
        # never do worse than the constant edge
        if neg_ll(list((base_tau, base_tau)) + ([nu0] if family == "t" else [])) < best.fun:
            a = b = base_tau
            nu = nu0
    return (family, TauFunction(a, b, driver), nu)


def tau_band(fitted_simplified: RVineModel, slot, m_boot, alpha, n, rng,
             grid=None):
    """Pointwise bootstrap band of the fitted tau curve under the
    simplified null: simulate, refit non-simplified, take quantiles."""
    rng = as_generator(rng)
    grid = np.asarray(grid if grid is not None else np.arange(0.05, 0.951, 0.05))
    if fitted_simplified.structure.tree_of(*slot) < 2:
        raise ValueError("tau bands are defined for conditional edges only")
    curves = np.empty((m_boot, grid.size))
    streams = rng.spawn(m_boot)
    for i in range(m_boot):
        sample = fitted_simplified.sample(n, streams[i])
        ns = fit_nonsimplified(sample, fitted_simplified)
        spec = ns.cond_edges.get(slot)
        if spec is None:
            curves[i] = 0.0
        else:
            curves[i] = np.clip(spec[1](grid), -1, 1)
    lo = np.quantile(curves, alpha / 2.0, axis=0)
    hi = np.quantile(curves, 1.0 - alpha / 2.0, axis=0)
    return grid, lo, hi
