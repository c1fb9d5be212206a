"""Van der Waerden (normal-scores) correlations with a right-censored response.

Both estimators maximize a bivariate Gaussian likelihood of normal scores.
The response scores come from Kaplan-Meier midpoints; censored scores enter
through the conditional upper tail.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from ._bvn import bvn_cdf
from .margins import km_midpoint_scores, rank_scores

RHO_MAX = 0.999
_GRID = np.linspace(-RHO_MAX, RHO_MAX, 201)


@dataclass
class CorrFit:
    rho: float
    loglik: float
    at_boundary: bool


def _response_scores(times, status):
    times = np.asarray(times, dtype=float)
    status = np.asarray(status).astype(int)
    if not np.any(status == 1):
        raise ValueError("no uncensored responses")
    return special.ndtri(km_midpoint_scores(times, status)), status


def _discrete_bounds(x):
    x = np.asarray(x, dtype=float)
    lv, inv, counts = np.unique(x, return_inverse=True, return_counts=True)
    cp = np.cumsum(counts) / x.size
    upper = cp[inv]
    lower = np.concatenate([[0.0], cp[:-1]])[inv]
    return special.ndtri(lower), special.ndtri(np.minimum(upper, 1.0))


def cont_censored_loglik(rho, z1, z2, status):
    """Censored bivariate-normal log-likelihood of normal scores."""
    om = 1.0 - rho * rho
    ev = status == 1
    a, b = z1[ev], z2[ev]
    ll_ev = -np.log(2 * np.pi) - 0.5 * np.log(om) - (a * a - 2 * rho * a * b + b * b) / (2 * om)
    q = (z2[~ev] - rho * z1[~ev]) / np.sqrt(om)
    return float(np.sum(ll_ev) + np.sum(special.log_ndtr(-q)))


def disc_censored_loglik(rho, zl, zu, z2, status):
    """Interval-scored discrete predictor against censored normal scores."""
    sq = np.sqrt(1.0 - rho * rho)
    ev = status == 1
    a = special.ndtr((zu[ev] - rho * z2[ev]) / sq) - special.ndtr((zl[ev] - rho * z2[ev]) / sq)
    c = ~ev
    # P(zl < Z1 <= zu, Z2 > z2)
    marg = special.ndtr(zu[c]) - special.ndtr(zl[c])
    rect = marg - (bvn_cdf(zu[c], z2[c], rho) - bvn_cdf(zl[c], z2[c], rho))
    with np.errstate(divide="ignore"):
        terms = np.concatenate([np.log(np.maximum(a, 1e-300)), np.log(np.maximum(rect, 1e-300))])
    return float(np.sum(terms))


def _maximize(obj):
    vals = np.array([obj(r) for r in _GRID])
    if not np.any(np.isfinite(vals)) or np.ptp(vals[np.isfinite(vals)]) == 0.0:
        raise ValueError("flat correlation objective")
    k = int(np.nanargmax(vals))
    lo = _GRID[max(k - 1, 0)]
    hi = _GRID[min(k + 1, _GRID.size - 1)]
    res = optimize.minimize_scalar(lambda r: -obj(r), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-8})
    rho, ll = float(res.x), -float(res.fun)
    if vals[k] > ll:
        rho, ll = float(_GRID[k]), float(vals[k])
    return CorrFit(rho, ll, abs(rho) >= RHO_MAX - 1e-6)


def vdw_cont_censored(x, times, status, return_fit=False):
    """Normal-scores correlation of a continuous predictor with a censored response.

    Parameters
    ----------
    x : array_like
        Continuous predictor.
    times, status : array_like
        Observed times and event indicators (1 = event).
    return_fit : bool
        Return a :class:`CorrFit` (with log-likelihood and boundary flag)
        instead of the bare estimate.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 10:
        raise ValueError("need n >= 10")
    if np.ptp(x) == 0.0:
        raise ValueError("flat correlation objective: predictor is constant")
    z1 = special.ndtri(rank_scores(x))
    z2, status = _response_scores(times, status)
    fit = _maximize(lambda r: cont_censored_loglik(r, z1, z2, status))
    return fit if return_fit else fit.rho


def vdw_disc_censored(x, times, status, return_fit=False):
    """Normal-scores correlation of a discrete predictor with a censored response."""
    x = np.asarray(x, dtype=float)
    if x.size < 10:
        raise ValueError("need n >= 10")
    if np.unique(x).size < 2:
        raise ValueError("flat correlation objective: predictor is constant")
    zl, zu = _discrete_bounds(x)
    z2, status = _response_scores(times, status)
    fit = _maximize(lambda r: disc_censored_loglik(r, zl, zu, z2, status))
    return fit if return_fit else fit.rho


def midpoint_normal_scores(x, discrete):
    x = np.asarray(x, dtype=float)
    if discrete:
        zl, zu = _discrete_bounds(x)
        u = 0.5 * (special.ndtr(zl) + special.ndtr(zu))
    else:
        u = rank_scores(x)
    return special.ndtri(u)


def nearest_pd_corr(R, floor=1e-6):
    w, v = np.linalg.eigh(R)
    if w.min() > floor:
        return R, False
    w = np.maximum(w, floor)
    S = (v * w) @ v.T
    d = np.sqrt(np.diag(S))
    S = S / np.outer(d, d)
    np.fill_diagonal(S, 1.0)
    return S, True


@dataclass
class CorrelationMatrix:
    R: np.ndarray
    projected: bool = False
    clamped: list = field(default_factory=list)
    boundary: list = field(default_factory=list)
    flips: np.ndarray = None

    def to_dict(self):
        return {"R": self.R.tolist(), "projected": self.projected,
                "clamped": [list(map(int, p)) for p in self.clamped],
                "boundary": [int(b) for b in self.boundary],
                "flips": None if self.flips is None else [bool(f) for f in self.flips]}


def build_R(X, discrete, times, status, orient=True, clamp=RHO_MAX):
    """Assemble the d x d normal-scores correlation matrix, response last.

    Parameters
    ----------
    X : (n, p) array
        Predictor columns.
    discrete : sequence of bool
        Scale flag per predictor column.
    times, status : array_like
        Censored response.
    orient : bool
        Flip predictors whose correlation with the response is negative
        (u' = 1 - u) and report the flips; the returned R is post-flip.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if len(discrete) != p:
        raise ValueError("discrete flags do not match predictor columns")
    d = p + 1
    R = np.eye(d)
    clamped = []
    Z = np.column_stack([midpoint_normal_scores(X[:, j], discrete[j]) for j in range(p)]) if p else np.zeros((n, 0))
    for i in range(p):
        for j in range(i + 1, p):
            r = np.corrcoef(Z[:, i], Z[:, j])[0, 1]
            if not np.isfinite(r):
                r = 0.0
            if abs(r) > clamp:
                clamped.append((i, j))
                r = np.sign(r) * clamp
            R[i, j] = R[j, i] = r
    boundary = []
    for j in range(p):
        fn = vdw_disc_censored if discrete[j] else vdw_cont_censored
        fit = fn(X[:, j], times, status, return_fit=True)
        R[j, p] = R[p, j] = fit.rho
        if fit.at_boundary:
            boundary.append(j)
    flips = np.zeros(p, dtype=bool)
    if orient:
        flips = R[:p, p] < 0
        sgn = np.where(np.concatenate([flips, [False]]), -1.0, 1.0)
        R = R * np.outer(sgn, sgn)
    R, projected = nearest_pd_corr(R)
    return CorrelationMatrix(R, projected, clamped, boundary, flips)
