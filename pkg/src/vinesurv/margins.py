"""Univariate margins, probability integral transforms and Kaplan-Meier curves.

Parameter order per family (``MarginSpec.params``):

=====================  ==========================================
normal                 (mu, sigma)
lognormal              (mu, sigma) of log x
exponential            (rate,)
weibull                (shape k, scale lam)
generalized-gamma      (mu, sigma, Q), location/scale/shape on log x
truncated-normal       (mu, sigma); limits held in ``support``
skew-normal            (loc, scale, alpha)
empirical-continuous   ()  -- training sample kept in ``data``
empirical-discrete     ()  -- levels and cumulative probs in ``data``
=====================  ==========================================
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special, stats

EPS = 1e-10

FAMILIES = ("normal", "lognormal", "exponential", "weibull", "generalized-gamma",
            "truncated-normal", "skew-normal", "empirical-continuous", "empirical-discrete")
POSITIVE_FAMILIES = ("lognormal", "exponential", "weibull", "generalized-gamma")
RESPONSE_CANDIDATES = ("weibull", "lognormal", "generalized-gamma", "truncated-normal")


class MarginFitError(RuntimeError):
    """Margin MLE did not converge; ``best`` holds the best parameters seen."""

    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class PitClampWarning(RuntimeWarning):
    """Value outside the margin's support; its u-score was clamped."""


class UScorePair:
    """Per-subject u-scores (u+, u-) for one variable.

    For continuous variables ``plus`` and ``minus`` are the same array.
    """

    __slots__ = ("plus", "minus", "discrete")

    def __init__(self, plus, minus=None, discrete=False):
        self.plus = np.asarray(plus, dtype=float)
        self.minus = self.plus if minus is None else np.asarray(minus, dtype=float)
        self.discrete = bool(discrete)

    def __len__(self):
        return len(self.plus)

    def __repr__(self):
        return f"UScorePair(n={len(self)}, discrete={self.discrete})"

    def take(self, idx):
        p = self.plus[idx]
        m = p if self.minus is self.plus else self.minus[idx]
        return UScorePair(p, m, self.discrete)

    @property
    def mid(self):
        return 0.5 * (self.plus + self.minus)


# ---------------------------------------------------------------- Kaplan-Meier

@dataclass
class KaplanMeierCurve:
    event_times: np.ndarray
    survival: np.ndarray      # S just after each event time
    at_risk: np.ndarray
    n_events: np.ndarray
    failure: np.ndarray = None    # 1 - S, computed without cancellation

    def __post_init__(self):
        if self.failure is None:
            self.failure = 1.0 - self.survival

    def surv(self, y):
        """Left-continuous survival: product over event times strictly below y."""
        k = np.searchsorted(self.event_times, np.asarray(y, float), side="left")
        return np.concatenate([[1.0], self.survival])[k]

    def surv_right(self, y):
        """Right-continuous survival: product over event times up to and including y."""
        k = np.searchsorted(self.event_times, np.asarray(y, float), side="right")
        return np.concatenate([[1.0], self.survival])[k]

    def cdf(self, y):
        k = np.searchsorted(self.event_times, np.asarray(y, float), side="left")
        return np.concatenate([[0.0], self.failure])[k]

    def cdf_right(self, y):
        k = np.searchsorted(self.event_times, np.asarray(y, float), side="right")
        return np.concatenate([[0.0], self.failure])[k]

    def midpoint(self, y):
        """[F(y+) + F(y-)] / 2."""
        return 0.5 * (self.cdf(y) + self.cdf_right(y))


def kaplan_meier(times, status):
    times = np.asarray(times, dtype=float)
    status = np.asarray(status)
    if times.size == 0:
        raise ValueError("kaplan_meier needs at least one observation")
    if times.shape != status.shape:
        raise ValueError("times and status differ in length")
    if np.any(times <= 0) or not np.all(np.isfinite(times)):
        raise ValueError("times must be finite and strictly positive")
    if not np.all(np.isin(status, (0, 1))):
        raise ValueError("status must be 0/1")
    ev = np.unique(times[status == 1])
    at_risk = np.array([(times >= t).sum() for t in ev], dtype=int)
    n_events = np.array([((times == t) & (status == 1)).sum() for t in ev], dtype=int)
    if not ev.size:
        return KaplanMeierCurve(ev, np.zeros(0), at_risk, n_events, np.zeros(0))
    # prod (n_i - d_i) / n_i  =  (n_k - d_k) / n_1 * prod_{i<k} (n_i - d_i) / n_{i+1};
    # the ratios are exactly 1 between events without censoring, so S and 1 - S
    # then reduce to integer counts over n_1 (the empirical CDF, exactly)
    left = at_risk - n_events
    ratio = np.concatenate([[1.0], np.cumprod(left[:-1] / at_risk[1:])])
    n1 = float(at_risk[0])
    surv = left * ratio / n1
    fail = (n1 - left * ratio) / n1
    return KaplanMeierCurve(ev, surv, at_risk, n_events, fail)


def km_midpoint_scores(times, status, km=None):
    """Response u-scores [F(t+) + F(t-)] / 2 from the Kaplan-Meier curve.

    Censored subjects get the same conversion; their score is read as a
    lower bound by the caller.
    """
    km = kaplan_meier(times, status) if km is None else km
    u = km.midpoint(times)
    # a censored time before the first event has F = 0 on both sides
    return np.clip(u, EPS, 1.0 - EPS)


def rank_scores(x):
    """(rank - 1/2) / n with average ranks for ties."""
    x = np.asarray(x, dtype=float)
    return (stats.rankdata(x) - 0.5) / x.size


# ---------------------------------------------------------------- margin spec

class _Dist:
    """Unfrozen scipy distribution with bound arguments.

    Freezing rebuilds the docstring on every call, which dominates the cost
    inside likelihood loops.
    """

    def __init__(self, rv, *args, **kwds):
        self.rv, self.args, self.kwds = rv, args, kwds

    def __getattr__(self, name):
        meth = getattr(self.rv, name)
        return lambda x: meth(x, *self.args, **self.kwds)


class _GenGamma:
    """Prentice generalized gamma: log T = mu + sigma * log(G / k) / q, G ~ Gamma(k), k = 1/q^2."""

    def __init__(self, mu, sigma, q):
        self.mu, self.sigma, self.q = mu, sigma, q
        self.k = 1.0 / (q * q)

    def _z(self, x):
        with np.errstate(divide="ignore", over="ignore"):
            w = (np.log(x) - self.mu) / self.sigma
            return self.k * np.exp(self.q * w)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        z = self._z(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (self.k * np.log(z) - z - special.gammaln(self.k) + np.log(abs(self.q))
                   - np.log(self.sigma) - np.log(x))
        return np.where(x > 0, out, -np.inf)

    def cdf(self, x):
        z = self._z(np.asarray(x, dtype=float))
        return special.gammainc(self.k, z) if self.q > 0 else special.gammaincc(self.k, z)

    def sf(self, x):
        z = self._z(np.asarray(x, dtype=float))
        return special.gammaincc(self.k, z) if self.q > 0 else special.gammainc(self.k, z)

    def logsf(self, x):
        with np.errstate(divide="ignore"):
            return np.log(self.sf(x))

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        z = special.gammaincinv(self.k, u) if self.q > 0 else special.gammainccinv(self.k, u)
        with np.errstate(divide="ignore"):
            return np.exp(self.mu + self.sigma * np.log(z / self.k) / self.q)


def _gg_scipy(mu, sigma, q):
    return _GenGamma(mu, sigma, q)


_GG_LN_TOL = 1e-6


@dataclass
class MarginSpec:
    """A fitted univariate margin."""

    family: str
    params: tuple = ()
    support: tuple = (-np.inf, np.inf)
    data: dict = field(default_factory=dict)
    loglik: float = np.nan
    n: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown margin family {self.family!r}")
        self.params = tuple(float(p) for p in self.params)
        self.support = (float(self.support[0]), float(self.support[1]))
        _check_margin_params(self.family, self.params, self.support)

    @property
    def discrete(self):
        return self.family == "empirical-discrete"

    @property
    def n_params(self):
        if self.family == "empirical-continuous":
            return 0
        if self.family == "empirical-discrete":
            return max(len(self.data["levels"]) - 1, 0)
        return len(self.params)

    @property
    def aic(self):
        return -2.0 * self.loglik + 2.0 * self.n_params

    # scipy frozen distribution for the parametric families
    def _dist(self):
        p = self.params
        f = self.family
        if f == "normal":
            return _Dist(stats.norm, loc=p[0], scale=p[1])
        if f == "lognormal":
            return _Dist(stats.lognorm, p[1], scale=np.exp(p[0]))
        if f == "exponential":
            return _Dist(stats.expon, scale=1.0 / p[0])
        if f == "weibull":
            return _Dist(stats.weibull_min, p[0], scale=p[1])
        if f == "generalized-gamma":
            if abs(p[2]) < _GG_LN_TOL:
                return _Dist(stats.lognorm, p[1], scale=np.exp(p[0]))
            return _gg_scipy(*p)
        if f == "truncated-normal":
            lo, hi = self.support
            return _Dist(stats.truncnorm, (lo - p[0]) / p[1], (hi - p[0]) / p[1], loc=p[0], scale=p[1])
        if f == "skew-normal":
            return _Dist(stats.skewnorm, p[2], loc=p[0], scale=p[1])
        raise ValueError(f"{f} has no parametric distribution")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "empirical-continuous":
            xs, us = self.data["x"], self.data["u"]
            return np.interp(x, xs, us, left=0.0, right=1.0) if xs.size > 1 else np.where(x < xs[0], 0.0, 1.0)
        if self.family == "empirical-discrete":
            lv, cp = self.data["levels"], self.data["cumprob"]
            k = np.searchsorted(lv, x, side="right")
            return np.concatenate([[0.0], cp])[k]
        return self._dist().cdf(x)

    def cdf_left(self, x):
        """F(x-)."""
        if self.family == "empirical-discrete":
            lv, cp = self.data["levels"], self.data["cumprob"]
            k = np.searchsorted(lv, np.asarray(x, float), side="left")
            return np.concatenate([[0.0], cp])[k]
        return self.cdf(x)

    def sf(self, x):
        if self.family.startswith("empirical"):
            return 1.0 - self.cdf(x)
        return self._dist().sf(np.asarray(x, dtype=float))

    def logpdf(self, x):
        if self.family.startswith("empirical"):
            raise ValueError("empirical margins have no density")
        return self._dist().logpdf(np.asarray(x, dtype=float))

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def logsf(self, x):
        if self.family.startswith("empirical"):
            return np.log(self.sf(x))
        return self._dist().logsf(np.asarray(x, dtype=float))

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        if self.family == "empirical-continuous":
            xs, us = self.data["x"], self.data["u"]
            return np.interp(u, us, xs)
        if self.family == "empirical-discrete":
            lv, cp = self.data["levels"], self.data["cumprob"]
            k = np.minimum(np.searchsorted(cp, u - 1e-12, side="left"), lv.size - 1)
            return lv[k]
        return self._dist().ppf(u)

    def pit(self, x):
        """u-score pair; values outside the support are clamped with a warning."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.family == "empirical-discrete":
            x = self.snap_levels(x)
        lo, hi = self.support
        outside = (x < lo) | (x > hi)
        if self.family in POSITIVE_FAMILIES:
            outside |= x <= 0
        up = self.cdf(x)
        um = self.cdf_left(x) if self.discrete else up
        clamped = outside | (up <= 0) | (up >= 1) | (um >= 1)
        if self.discrete:
            clamped |= um < 0
            clamped &= ~((um == 0) & (up > 0) & (up < 1)) | outside
        if np.any(clamped):
            warnings.warn(f"{int(clamped.sum())} value(s) clamped into (1e-10, 1 - 1e-10) "
                          f"for {self.family} margin", PitClampWarning, stacklevel=2)
        up = np.clip(up, EPS, 1.0 - EPS)
        if self.discrete:
            um = np.clip(um, 0.0, 1.0 - EPS)
            um = np.minimum(um, up - EPS)
            return UScorePair(up, um, discrete=True)
        return UScorePair(up, up, discrete=False)

    def snap_levels(self, x):
        lv = self.data["levels"]
        k = np.clip(np.searchsorted(lv, x), 0, lv.size - 1)
        km1 = np.clip(k - 1, 0, lv.size - 1)
        near = np.where(np.abs(lv[km1] - x) <= np.abs(lv[k] - x), lv[km1], lv[k])
        unseen = ~np.isin(x, lv)
        if np.any(unseen):
            warnings.warn(f"{int(unseen.sum())} unseen category value(s) mapped to the nearest "
                          "observed level", PitClampWarning, stacklevel=3)
        return np.where(unseen, near, x)

    def to_dict(self):
        d = {"family": self.family, "params": list(self.params),
             "support": [_enc(self.support[0]), _enc(self.support[1])],
             "loglik": None if not np.isfinite(self.loglik) else float(self.loglik), "n": int(self.n)}
        if self.data:
            d["data"] = {k: np.asarray(v).tolist() for k, v in self.data.items()}
        return d

    @classmethod
    def from_dict(cls, d):
        data = {k: np.asarray(v, dtype=float) for k, v in d.get("data", {}).items()}
        ll = d.get("loglik")
        return cls(d["family"], tuple(d["params"]), (_dec(d["support"][0]), _dec(d["support"][1])),
                   data, np.nan if ll is None else ll, d.get("n", 0))


def _enc(x):
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def _dec(x):
    return float(x)


def _check_margin_params(family, p, support):
    expected = {"normal": 2, "lognormal": 2, "exponential": 1, "weibull": 2,
                "generalized-gamma": 3, "truncated-normal": 2, "skew-normal": 3,
                "empirical-continuous": 0, "empirical-discrete": 0}[family]
    if len(p) != expected:
        raise ValueError(f"{family} takes {expected} parameters, got {len(p)}")
    if not all(np.isfinite(p)):
        raise ValueError(f"non-finite parameters {p}")
    scale_idx = {"normal": 1, "lognormal": 1, "exponential": 0, "weibull": None,
                 "generalized-gamma": 1, "truncated-normal": 1, "skew-normal": 1}.get(family)
    if scale_idx is not None and p[scale_idx] <= 0:
        raise ValueError(f"{family} scale must be positive, got {p}")
    if family == "weibull" and (p[0] <= 0 or p[1] <= 0):
        raise ValueError(f"weibull shape and scale must be positive, got {p}")
    if family == "truncated-normal" and not support[0] < support[1]:
        raise ValueError(f"truncated-normal needs lower < upper limit, got {support}")


# ---------------------------------------------------------------- fitting

def _unpack(family, theta, trunc):
    """Map unconstrained theta to family parameters."""
    if family in ("normal", "lognormal", "truncated-normal"):
        return (theta[0], np.exp(theta[1]))
    if family == "exponential":
        return (np.exp(theta[0]),)
    if family == "weibull":
        return (np.exp(theta[0]), np.exp(theta[1]))
    if family == "generalized-gamma":
        return (theta[0], np.exp(theta[1]), theta[2])
    if family == "skew-normal":
        return (theta[0], np.exp(theta[1]), theta[2])
    raise ValueError(family)


def _starts(family, x, status):
    xo = x[status == 1] if status is not None and np.any(status == 1) else x
    m, s = np.mean(xo), np.std(xo) + 1e-12
    if family in ("normal", "truncated-normal"):
        return [np.array([m, np.log(s)]), np.array([m + s, np.log(2 * s)])]
    lx = np.log(xo)
    lm, ls = np.mean(lx), np.std(lx) + 1e-12
    if family == "lognormal":
        return [np.array([lm, np.log(ls)]), np.array([lm + ls, np.log(ls)])]
    if family == "exponential":
        return [np.array([-np.log(m)])]
    if family == "weibull":
        k0 = np.clip(1.2 / ls, 0.05, 50.0)
        return [np.array([np.log(k0), lm + 0.5772 / k0]), np.array([0.0, np.log(m)])]
    if family == "generalized-gamma":
        return [np.array([lm, np.log(ls), 0.0]), np.array([lm + 0.3 * ls, np.log(0.8 * ls), 1.0]),
                np.array([lm, np.log(ls), -0.5])]
    if family == "skew-normal":
        sk = stats.skew(xo) if xo.size > 2 else 0.0
        return [np.array([m, np.log(s), 0.0]), np.array([m - s, np.log(1.4 * s), 2.0 * np.sign(sk or 1)])]
    raise ValueError(family)


def _censored_loglik(spec, x, status):
    if status is None:
        return float(np.sum(spec.logpdf(x)))
    ev = status == 1
    return float(np.sum(spec.logpdf(x[ev])) + np.sum(spec.logsf(x[~ev])))


def fit_margin(values, status=None, family="normal", support=None, maxiter=4000):
    """Maximum likelihood fit of a univariate margin.

    Parameters
    ----------
    values : array_like
    status : array_like, optional
        Event indicators (1 = observed, 0 = right-censored), response only.
    family : str
    support : tuple, optional
        Truncation limits for ``truncated-normal``; default (0, inf).

    Returns
    -------
    MarginSpec
        With ``loglik`` set to the maximized (censored) log-likelihood.
    """
    x = np.asarray(values, dtype=float)
    if family not in FAMILIES:
        raise ValueError(f"unknown margin family {family!r}")
    if x.ndim != 1 or x.size < 5:
        raise ValueError(f"need at least 5 values to fit a margin, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError("margin values must be finite")
    if status is not None:
        status = np.asarray(status).astype(int)
        if status.shape != x.shape or not np.all(np.isin(status, (0, 1))):
            raise ValueError("status must be a 0/1 vector matching values")
        if not np.any(status == 1):
            raise ValueError("no uncensored observations")
    if np.ptp(x) == 0.0:
        raise ValueError("all values identical: scale is undefined")

    if family == "empirical-continuous":
        if status is not None and np.any(status == 0):
            raise ValueError("empirical-continuous margins take uncensored data only")
        xs = np.sort(x)
        us = (stats.rankdata(xs) - 0.5) / xs.size
        xs, idx = np.unique(xs, return_index=True)
        return MarginSpec(family, (), (-np.inf, np.inf), {"x": xs, "u": us[idx]}, np.nan, x.size)
    if family == "empirical-discrete":
        lv, counts = np.unique(x, return_counts=True)
        cp = np.cumsum(counts) / x.size
        cp[-1] = 1.0
        ll = float(np.sum(counts * np.log(counts / x.size)))
        return MarginSpec(family, (), (lv[0], lv[-1]), {"levels": lv, "cumprob": cp}, ll, x.size)

    if support is None:
        support = (0.0, np.inf) if family == "truncated-normal" else (
            (0.0, np.inf) if family in POSITIVE_FAMILIES else (-np.inf, np.inf))
    lo, hi = support
    if family in POSITIVE_FAMILIES and np.any(x <= 0):
        raise ValueError(f"{family} margin needs strictly positive values")
    if np.any((x < lo) | (x > hi)):
        raise ValueError(f"values outside support {support}")

    def nll(theta):
        try:
            spec = MarginSpec(family, _unpack(family, theta, support), support)
            with np.errstate(all="ignore"):
                val = -_censored_loglik(spec, x, status)
        except (ValueError, OverflowError, ZeroDivisionError):
            return 1e300
        return val if np.isfinite(val) else 1e300

    best = None
    for x0 in _starts(family, x, status):
        if x0.size == 1:
            res = optimize.minimize_scalar(lambda t: nll(np.array([t])), bracket=(x0[0] - 1.0, x0[0] + 1.0),
                                           method="golden", options={"xtol": 1e-10})
            res.x = np.atleast_1d(res.x)
            res.success = np.isfinite(res.fun)
        else:
            res = optimize.minimize(nll, x0, method="Nelder-Mead",
                                    options={"maxiter": maxiter, "xatol": 1e-9, "fatol": 1e-11,
                                             "adaptive": x0.size > 2})
            # polish from the simplex optimum
            res2 = optimize.minimize(nll, res.x, method="Nelder-Mead",
                                     options={"maxiter": maxiter, "xatol": 1e-10, "fatol": 1e-12})
            if res2.fun <= res.fun:
                res = res2
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not np.isfinite(best.fun) or best.fun >= 1e299:
        raise MarginFitError(f"{family} fit failed", best=None if best is None else best.x)
    if not best.success and best.fun >= 1e299:
        raise MarginFitError(f"{family} fit did not converge", best=_unpack(family, best.x, support))
    params = _unpack(family, best.x, support)
    return MarginSpec(family, params, support, {}, -float(best.fun), x.size)


def fit_response_margin(times, status, candidates=RESPONSE_CANDIDATES):
    """Fit each candidate family by censored MLE and keep the lowest AIC."""
    fits = []
    for fam in candidates:
        try:
            fits.append(fit_margin(times, status, fam))
        except (MarginFitError, ValueError):
            continue
    if not fits:
        raise MarginFitError("no response margin candidate could be fitted")
    return min(fits, key=lambda m: m.aic), fits


def qq_points(times, status, spec):
    """Censoring-aware Q-Q data.

    Returns an (k, 2) array of (theoretical, observed) pairs, one per
    uncensored order statistic, with plotting positions taken from the
    Kaplan-Meier curve at y+ and y-.
    """
    times = np.asarray(times, dtype=float)
    status = np.ones(times.size, int) if status is None else np.asarray(status).astype(int)
    if not np.any(status == 1):
        raise ValueError("Q-Q points need at least one uncensored observation")
    km = kaplan_meier(times, status)
    y = np.sort(times[status == 1])
    p = km.midpoint(y)
    return np.column_stack([spec.ppf(p), y])


def normal_scores(u):
    return special.ndtri(np.clip(u, EPS, 1.0 - EPS))
