"""Vectorized math for the supported bivariate copula families.

All functions broadcast over numpy arrays, including the dependence
parameter, so that edges whose parameter varies per observation (the
conditionally varying vines) evaluate in one vectorized call.

Conventions:
    hfunc1(u, v, ...) = dC(u, v)/du, the conditional CDF of V given U=u.
    hinv1(w, u, ...)  solves hfunc1(u, v) = w for v.
The families here are all exchangeable, so hfunc2/hinv2 follow by
swapping arguments; rotations are handled one level up in `bicop`.
"""

from __future__ import annotations

import numpy as np
from scipy import special

EPS = 1e-10  # hard clamp for copula-scale arguments

FAMILIES = ("indep", "gaussian", "t", "clayton", "gumbel", "frank", "joe")

# Families that cover negative dependence natively; rotation must be 0.
SYMMETRIC_FAMILIES = frozenset({"indep", "gaussian", "t", "frank"})
# Families admitting 90/180/270 degree rotations.
ROTATABLE_FAMILIES = frozenset({"clayton", "gumbel", "joe"})

# Parameter boxes keeping densities finite in double precision.
PARAM_BOUNDS = {
    "indep": (),
    "gaussian": ((-0.9999, 0.9999),),
    "t": ((-0.9999, 0.9999), (2.0, 30.0)),
    "clayton": ((1e-4, 28.0),),
    "gumbel": ((1.0, 17.0),),
    "frank": ((-35.0, 35.0),),
    "joe": ((1.0, 30.0),),
}

N_PARAMS = {"indep": 0, "gaussian": 1, "t": 2, "clayton": 1, "gumbel": 1,
            "frank": 1, "joe": 1}

_LOG_HUGE = 690.0  # exp(690) ~ 5e299, just below double overflow


def clamp01(x):
    """Clamp copula-scale arguments into [EPS, 1-EPS]."""
    return np.clip(x, EPS, 1.0 - EPS)


def _aslog(x):
    return np.log(np.maximum(x, 1e-300))


# ---------------------------------------------------------------------------
# independence

def indep_logpdf(u, v):
    return np.zeros(np.broadcast(u, v).shape)


def indep_hfunc1(u, v):
    return np.broadcast_to(v, np.broadcast(u, v).shape).copy()


def indep_hinv1(w, u):
    return np.broadcast_to(w, np.broadcast(w, u).shape).copy()


def indep_cdf(u, v):
    return u * v


# ---------------------------------------------------------------------------
# gaussian

def gaussian_logpdf(u, v, rho):
    x = special.ndtri(u)
    y = special.ndtri(v)
    r2 = rho * rho
    return -0.5 * np.log1p(-r2) - (r2 * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * (1.0 - r2))


def gaussian_hfunc1(u, v, rho):
    x = special.ndtri(u)
    y = special.ndtri(v)
    return special.ndtr((y - rho * x) / np.sqrt(1.0 - rho * rho))


def gaussian_hinv1(w, u, rho):
    x = special.ndtri(u)
    return special.ndtr(special.ndtri(w) * np.sqrt(1.0 - rho * rho) + rho * x)


# ---------------------------------------------------------------------------
# student t

def t_logpdf(u, v, rho, nu):
    x = special.stdtrit(nu, u)
    y = special.stdtrit(nu, v)
    r2 = rho * rho
    const = (special.gammaln((nu + 2.0) / 2.0) + special.gammaln(nu / 2.0)
             - 2.0 * special.gammaln((nu + 1.0) / 2.0) - 0.5 * np.log1p(-r2))
    quad = (x * x - 2.0 * rho * x * y + y * y) / (nu * (1.0 - r2))
    return (const - 0.5 * (nu + 2.0) * np.log1p(quad)
            + 0.5 * (nu + 1.0) * (np.log1p(x * x / nu) + np.log1p(y * y / nu)))


def t_hfunc1(u, v, rho, nu):
    x = special.stdtrit(nu, u)
    y = special.stdtrit(nu, v)
    scale = np.sqrt((nu + x * x) * (1.0 - rho * rho) / (nu + 1.0))
    return special.stdtr(nu + 1.0, (y - rho * x) / scale)


def t_hinv1(w, u, rho, nu):
    x = special.stdtrit(nu, u)
    scale = np.sqrt((nu + x * x) * (1.0 - rho * rho) / (nu + 1.0))
    y = special.stdtrit(nu + 1.0, w) * scale + rho * x
    return special.stdtr(nu, y)


# ---------------------------------------------------------------------------
# clayton
#
# Evaluated in log space throughout: u^-theta overflows double precision
# for theta near the cap when u touches the clamp boundary.

def _clayton_lse(u, v, theta):
    """log(u^-theta + v^-theta - 1), stable for large theta."""
    a = -theta * np.log(u)
    b = -theta * np.log(v)
    m = np.maximum(a, b)
    return m + np.log(np.exp(a - m) + np.exp(b - m) - np.exp(-m))


def clayton_logpdf(u, v, theta):
    s = _clayton_lse(u, v, theta)
    return (np.log1p(theta) - (theta + 1.0) * (np.log(u) + np.log(v))
            - (2.0 + 1.0 / theta) * s)


def clayton_hfunc1(u, v, theta):
    s = _clayton_lse(u, v, theta)
    return np.exp(-(theta + 1.0) * np.log(u) - (1.0 + 1.0 / theta) * s)


def clayton_hinv1(w, u, theta):
    # v = ((w * u^(theta+1))^(-theta/(theta+1)) - u^-theta + 1)^(-1/theta)
    a = -theta * np.log(u)
    log_b = (-theta / (theta + 1.0)) * np.log(w)  # log(w^(-theta/(theta+1))) >= 0
    # v^-theta = 1 + e^a * (e^log_b - 1)
    t = a + np.log(np.maximum(np.expm1(log_b), 1e-300))
    log_vmt = np.where(t > 35.0, t, np.log1p(np.exp(np.minimum(t, 35.0))))
    return np.exp(-log_vmt / theta)


def clayton_cdf(u, v, theta):
    return np.exp(-(1.0 / theta) * _clayton_lse(u, v, theta))


# ---------------------------------------------------------------------------
# gumbel

def _gumbel_s(u, v, theta):
    lu = -np.log(u)
    lv = -np.log(v)
    return lu, lv, np.exp(theta * np.log(lu)) + np.exp(theta * np.log(lv))


def gumbel_logpdf(u, v, theta):
    lu, lv, s = _gumbel_s(u, v, theta)
    logs = np.log(s)
    return (-np.exp(logs / theta) + (theta - 1.0) * (np.log(lu) + np.log(lv))
            - np.log(u) - np.log(v) + (2.0 / theta - 2.0) * logs
            + np.log1p((theta - 1.0) * np.exp(-logs / theta)))


def gumbel_hfunc1(u, v, theta):
    lu, lv, s = _gumbel_s(u, v, theta)
    logs = np.log(s)
    return np.exp(-np.exp(logs / theta) - np.log(u)
                  + (theta - 1.0) * np.log(lu) + (1.0 / theta - 1.0) * logs)


def gumbel_cdf(u, v, theta):
    _, _, s = _gumbel_s(u, v, theta)
    return np.exp(-np.exp(np.log(s) / theta))


# ---------------------------------------------------------------------------
# frank

def frank_logpdf(u, v, theta):
    # c = theta (1-e^-theta) e^(-theta(u+v)) / D^2,
    # D = (1-e^-theta) - (1-e^-theta u)(1-e^-theta v)
    em = -np.expm1(-theta)  # 1 - e^-theta
    eu = -np.expm1(-theta * u)
    ev = -np.expm1(-theta * v)
    d = em - eu * ev
    return (np.log(np.abs(theta)) + _aslog(np.abs(em)) - theta * (u + v)
            - 2.0 * _aslog(np.abs(d)))


def frank_hfunc1(u, v, theta):
    gu = np.expm1(-theta * u)
    gv = np.expm1(-theta * v)
    g1 = np.expm1(-theta)
    return np.exp(-theta * u) * gv / (g1 + gu * gv)


def frank_hinv1(w, u, theta):
    gu = np.expm1(-theta * u)
    g1 = np.expm1(-theta)
    gv = w * g1 / (np.exp(-theta * u) - w * gu)
    return -np.log1p(gv) / theta


def frank_cdf(u, v, theta):
    gu = np.expm1(-theta * u)
    gv = np.expm1(-theta * v)
    g1 = np.expm1(-theta)
    return -np.log1p(gu * gv / g1) / theta


# ---------------------------------------------------------------------------
# joe

def _joe_xy(u, v, theta):
    x = np.exp(theta * np.log1p(-u))  # (1-u)^theta
    y = np.exp(theta * np.log1p(-v))
    a = x + y - x * y
    return x, y, a


def joe_logpdf(u, v, theta):
    x, y, a = _joe_xy(u, v, theta)
    return ((1.0 / theta - 2.0) * np.log(a)
            + (theta - 1.0) * (np.log1p(-u) + np.log1p(-v))
            + np.log(theta * a + (theta - 1.0) * (1.0 - x) * (1.0 - y)))


def joe_hfunc1(u, v, theta):
    x, y, a = _joe_xy(u, v, theta)
    return np.exp((1.0 / theta - 1.0) * np.log(a)
                  + (theta - 1.0) * np.log1p(-u)) * (1.0 - y)


def joe_cdf(u, v, theta):
    x, y, a = _joe_xy(u, v, theta)
    return 1.0 - np.exp(np.log(a) / theta)


# ---------------------------------------------------------------------------
# numeric h-inverses (gumbel, joe): vectorized monotone bisection

def _bisect_hinv1(hfunc1, w, u, theta, steps=100):
    shape = np.broadcast(w, u, theta).shape
    w = np.broadcast_to(w, shape)
    u = np.broadcast_to(u, shape)
    theta = np.broadcast_to(theta, shape)
    lo = np.full(shape, EPS)
    hi = np.full(shape, 1.0 - EPS)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        below = hfunc1(u, mid, theta) < w
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def gumbel_hinv1(w, u, theta):
    return _bisect_hinv1(gumbel_hfunc1, w, u, theta)


def joe_hinv1(w, u, theta):
    return _bisect_hinv1(joe_hfunc1, w, u, theta)


# ---------------------------------------------------------------------------
# Kendall's tau <-> parameter maps

_GL64_NODES, _GL64_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _gl64(a, b):
    """64-point Gauss-Legendre nodes and weights on [a, b]."""
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * _GL64_NODES, half * _GL64_WEIGHTS


def _debye1(theta):
    """D1(theta) = (1/theta) * int_0^theta t/(e^t - 1) dt for theta > 0."""
    nodes, weights = _gl64(0.0, theta)
    return np.sum(weights * nodes / np.expm1(nodes)) / theta


def frank_tau(theta):
    """Kendall's tau of the Frank copula, via the Debye-function identity."""
    th = abs(float(theta))
    if th < 1e-9:
        return 0.0
    tau = 1.0 - 4.0 / th * (1.0 - _debye1(th))
    return tau if theta > 0 else -tau


def joe_tau(theta):
    """Kendall's tau of the Joe copula, via the generator integral."""
    theta = float(theta)
    if theta <= 1.0 + 1e-12:
        return 0.0
    nodes, weights = _gl64(0.0, 1.0)
    x = np.exp(theta * np.log1p(-nodes))  # (1-t)^theta
    integrand = np.log1p(-x) * (1.0 - x) / (theta * np.exp((theta - 1.0) * np.log1p(-nodes)))
    return 1.0 + 4.0 * float(np.sum(weights * integrand))


def _invert_tau(tau_fn, target, lo, hi, tol=1e-8):
    """Monotone bisection of tau_fn on [lo, hi]; clamps beyond the range."""
    if target <= tau_fn(lo):
        return lo
    if target >= tau_fn(hi):
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol:
            return mid
        if tau_fn(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def frank_theta_from_tau(tau):
    if abs(tau) < 1e-10:
        return 1e-4 if tau >= 0 else -1e-4
    theta = _invert_tau(frank_tau, abs(tau), 1e-4, 35.0)
    return theta if tau > 0 else -theta


def joe_theta_from_tau(tau):
    if tau <= 0.0:
        return 1.0
    return _invert_tau(joe_tau, tau, 1.0, 30.0)


def tau_from_theta(family, theta, nu=None):
    """Base-orientation Kendall's tau of a copula family (rotation 0)."""
    if family == "indep":
        return 0.0
    if family in ("gaussian", "t"):
        return 2.0 / np.pi * np.arcsin(theta)
    if family == "clayton":
        return theta / (theta + 2.0)
    if family == "gumbel":
        return 1.0 - 1.0 / theta
    if family == "frank":
        return frank_tau(theta)
    if family == "joe":
        return joe_tau(theta)
    raise ValueError(f"unknown family {family!r}")


def theta_from_tau(family, tau):
    """Base-orientation dependence parameter from Kendall's tau.

    Values are clamped into the family's parameter box; the caller is
    responsible for sign/rotation admissibility.
    """
    lo, hi = PARAM_BOUNDS[family][0]
    if family in ("gaussian", "t"):
        theta = np.sin(np.pi * tau / 2.0)
    elif family == "clayton":
        if tau <= 0.0:
            raise ValueError("clayton requires tau > 0 in base orientation")
        theta = 2.0 * tau / (1.0 - tau)
    elif family == "gumbel":
        if tau < 0.0:
            raise ValueError("gumbel requires tau >= 0 in base orientation")
        theta = 1.0 / (1.0 - tau)
    elif family == "frank":
        theta = frank_theta_from_tau(tau)
    elif family == "joe":
        if tau < 0.0:
            raise ValueError("joe requires tau >= 0 in base orientation")
        theta = joe_theta_from_tau(tau)
    else:
        raise ValueError(f"unknown family {family!r}")
    return float(np.clip(theta, lo, hi))


# dispatch tables used by bicop and the conditionally varying edges

LOGPDF = {"indep": lambda u, v: indep_logpdf(u, v),
          "gaussian": gaussian_logpdf, "t": t_logpdf, "clayton": clayton_logpdf,
          "gumbel": gumbel_logpdf, "frank": frank_logpdf, "joe": joe_logpdf}

HFUNC1 = {"indep": lambda u, v: indep_hfunc1(u, v),
          "gaussian": gaussian_hfunc1, "t": t_hfunc1, "clayton": clayton_hfunc1,
          "gumbel": gumbel_hfunc1, "frank": frank_hfunc1, "joe": joe_hfunc1}

HINV1 = {"indep": lambda w, u: indep_hinv1(w, u),
         "gaussian": gaussian_hinv1, "t": t_hinv1, "clayton": clayton_hinv1,
         "gumbel": gumbel_hinv1, "frank": frank_hinv1, "joe": joe_hinv1}

CDF = {"indep": indep_cdf, "clayton": clayton_cdf, "gumbel": gumbel_cdf,
       "frank": frank_cdf, "joe": joe_cdf}
