"""Parametric bivariate copulas.

Families are addressed by the short codes used in vine family matrices:

====  =====================  ==========================================
code  family                 parameters
====  =====================  ==========================================
I     independence           ()
N     Gaussian               (rho,)            -1 < rho < 1
t     Student-t              (rho, nu)         -1 < rho < 1, nu > 2
F     Frank                  (theta,)          real; 0 is independence
G     Gumbel                 (delta,)          delta >= 1
G.s   survival Gumbel        (delta,)          delta >= 1
BB1   BB1 (Clayton-Gumbel)   (theta, delta)    theta > 0, delta >= 1
====  =====================  ==========================================

Conventions: ``hfunc1(u, v)`` is C_{2|1}(v | u) = dC/du and ``hfunc2(u, v)`` is
C_{1|2}(u | v) = dC/dv.  ``hinv1(u, p)`` solves hfunc1(u, v) = p for v and
``hinv2(v, p)`` solves hfunc2(u, v) = p for u.  All families here are
exchangeable, so the second-argument versions reuse the first with the
arguments swapped.
"""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special, stats

from ._bvn import bvn_cdf, bvt_cdf
from .margins import UScorePair

EPS = 1e-10
FAMILIES = ("I", "N", "t", "F", "G", "G.s", "BB1")
# candidate order doubles as the tie-break order in selection
DEFAULT_CANDIDATES = ("N", "t", "F", "G", "G.s", "BB1")
LOG_FLOOR = np.log(1e-300)

_BOUNDS = {
    "I": [],
    "N": [(-0.999, 0.999)],
    "t": [(-0.999, 0.999), (2.05, 50.0)],
    "F": [(-35.0, 35.0)],
    "G": [(1.0, 17.0)],
    "G.s": [(1.0, 17.0)],
    "BB1": [(1e-4, 7.0), (1.0, 7.0)],
}


class ClampWarning(RuntimeWarning):
    """Arguments on or outside the unit-interval boundary were clamped."""


class CopulaFitError(RuntimeError):
    """Single-edge maximum likelihood failed."""


def _prep(*arrays):
    out = []
    clamped = False
    for a in arrays:
        a = np.asarray(a, dtype=float)
        if np.any((a <= 0.0) | (a >= 1.0)):
            clamped = True
        # values inside (0, EPS) are moved silently: 1 - u must stay below 1
        out.append(np.clip(a, EPS, 1.0 - EPS))
    if clamped:
        warnings.warn("copula arguments clamped to (1e-10, 1 - 1e-10)", ClampWarning, stacklevel=3)
    return np.broadcast_arrays(*out)


# ---------------------------------------------------------------- Gaussian

def _n_cdf(par, u, v):
    return bvn_cdf(special.ndtri(u), special.ndtri(v), par[0])


def _n_logpdf(par, u, v):
    r = par[0]
    x, y = special.ndtri(u), special.ndtri(v)
    om = 1.0 - r * r
    return -0.5 * np.log(om) - (r * r * (x * x + y * y) - 2.0 * r * x * y) / (2.0 * om)


def _n_h1(par, u, v):
    r = par[0]
    return special.ndtr((special.ndtri(v) - r * special.ndtri(u)) / np.sqrt(1.0 - r * r))


def _n_hinv1(par, u, p):
    r = par[0]
    return special.ndtr(special.ndtri(p) * np.sqrt(1.0 - r * r) + r * special.ndtri(u))


# ---------------------------------------------------------------- Student t

def _tq(nu, p):
    # quantile from the smaller tail, so t(1 - p) = -t(p) holds exactly
    p = np.asarray(p, dtype=float)
    return np.where(p > 0.5, -special.stdtrit(nu, 1.0 - p), special.stdtrit(nu, p))


def _t_cdf(par, u, v):
    r, nu = par
    return bvt_cdf(_tq(nu, u), _tq(nu, v), r, nu)


def _t_logpdf(par, u, v):
    r, nu = par
    x, y = _tq(nu, u), _tq(nu, v)
    om = 1.0 - r * r
    const = (special.gammaln(0.5 * (nu + 2.0)) + special.gammaln(0.5 * nu)
             - 2.0 * special.gammaln(0.5 * (nu + 1.0)) - 0.5 * np.log(om))
    quad = (x * x + y * y - 2.0 * r * x * y) / (nu * om)
    return (const - 0.5 * (nu + 2.0) * np.log1p(quad)
            + 0.5 * (nu + 1.0) * (np.log1p(x * x / nu) + np.log1p(y * y / nu)))


def _t_h1(par, u, v):
    r, nu = par
    x, y = _tq(nu, u), _tq(nu, v)
    scale = np.sqrt((nu + x * x) * (1.0 - r * r) / (nu + 1.0))
    return special.stdtr(nu + 1.0, (y - r * x) / scale)


def _t_hinv1(par, u, p):
    r, nu = par
    x = _tq(nu, u)
    scale = np.sqrt((nu + x * x) * (1.0 - r * r) / (nu + 1.0))
    return special.stdtr(nu, _tq(nu + 1.0, p) * scale + r * x)


# ---------------------------------------------------------------- Frank
# theta < 0 is mapped onto theta > 0 through C_{-a}(u, v) = u - C_a(u, 1 - v).
# |theta| < 1e-5 uses the first-order expansion C = uv (1 + theta/2 (1-u)(1-v)).

_FRANK_SMALL = 1e-5


def _frank_pos_parts(a, u, v):
    eu, ev = np.exp(-a * u), np.exp(-a * v)
    denom = eu * (-np.expm1(-a * v)) + ev * (-np.expm1(-a * (1.0 - v)))
    return eu, ev, denom


def _f_cdf(par, u, v):
    a = par[0]
    if abs(a) < _FRANK_SMALL:
        return u * v * (1.0 + 0.5 * a * (1.0 - u) * (1.0 - v))
    if a < 0:
        return u - _f_cdf((-a,), u, 1.0 - v)
    return -np.log1p(np.expm1(-a * u) * np.expm1(-a * v) / np.expm1(-a)) / a


def _f_logpdf(par, u, v):
    a = par[0]
    if abs(a) < _FRANK_SMALL:
        return np.log1p(0.5 * a * (1.0 - 2.0 * u) * (1.0 - 2.0 * v))
    if a < 0:
        return _f_logpdf((-a,), u, 1.0 - v)
    _, _, denom = _frank_pos_parts(a, u, v)
    return np.log(a) + np.log(-np.expm1(-a)) - a * (u + v) - 2.0 * np.log(denom)


def _f_h1(par, u, v):
    a = par[0]
    if abs(a) < _FRANK_SMALL:
        return v + 0.5 * a * (1.0 - 2.0 * u) * v * (1.0 - v)
    if a < 0:
        return 1.0 - _f_h1((-a,), u, 1.0 - v)
    eu, _, denom = _frank_pos_parts(a, u, v)
    return eu * (-np.expm1(-a * v)) / denom


def _f_hinv1(par, u, p):
    a = par[0]
    if abs(a) < _FRANK_SMALL:
        return p - 0.5 * a * (1.0 - 2.0 * u) * p * (1.0 - p)
    if a < 0:
        return 1.0 - _f_hinv1((-a,), u, 1.0 - p)
    eu = np.exp(-a * u)
    x = p * np.expm1(-a) / (p + (1.0 - p) * eu)
    # 1 + x = [(1-p) e^{-au} + p e^{-a}] / [p + (1-p) e^{-au}]; use the log form
    # when 1 + x is small, where log1p(x) would lose the digits of v
    with np.errstate(divide="ignore"):
        lq = np.log1p(-p)
        lp = np.log(p)
        small = np.logaddexp(lq - a * u, lp - a) - np.logaddexp(lp, lq - a * u)
    return np.where(x > -0.5, -np.log1p(x), -small) / a


# ---------------------------------------------------------------- Gumbel

def _g_parts(d, u, v):
    x, y = -np.log(u), -np.log(v)
    lx, ly = np.log(x), np.log(y)
    ls = np.logaddexp(d * lx, d * ly)
    return x, y, lx, ly, np.exp(ls / d)


def _g_cdf(par, u, v):
    *_, big_a = _g_parts(par[0], u, v)
    return np.exp(-big_a)


def _g_logpdf(par, u, v):
    d = par[0]
    x, y, lx, ly, big_a = _g_parts(d, u, v)
    return (-big_a + x + y + (d - 1.0) * (lx + ly) + (1.0 - 2.0 * d) * np.log(big_a)
            + np.log(big_a + d - 1.0))


def _g_h1(par, u, v):
    d = par[0]
    x, _, lx, _, big_a = _g_parts(d, u, v)
    return np.exp(-big_a + (1.0 - d) * np.log(big_a) + (d - 1.0) * lx + x)


# ---------------------------------------------------------------- BB1

def _bb1_parts(th, d, u, v):
    lu, lv = np.log(u), np.log(v)
    lx = np.log(np.expm1(-th * lu))
    ly = np.log(np.expm1(-th * lv))
    lz = np.logaddexp(d * lx, d * ly) / d
    l1z = np.logaddexp(0.0, lz)
    return lu, lv, lx, ly, lz, l1z


def _bb1_cdf(par, u, v):
    th, d = par
    *_, l1z = _bb1_parts(th, d, u, v)
    return np.exp(-l1z / th)


def _bb1_logpdf(par, u, v):
    th, d = par
    lu, lv, lx, ly, lz, l1z = _bb1_parts(th, d, u, v)
    z = np.exp(lz)
    return ((d - 1.0) * (lx + ly) - (th + 1.0) * (lu + lv) - (1.0 / th + 2.0) * l1z
            + (1.0 - 2.0 * d) * lz + np.log(th * (d - 1.0) * (1.0 + z) + (th + 1.0) * z))


def _bb1_h1(par, u, v):
    th, d = par
    lu, _, lx, _, lz, l1z = _bb1_parts(th, d, u, v)
    return np.exp(-(1.0 / th + 1.0) * l1z + (1.0 - d) * lz + (d - 1.0) * lx - (th + 1.0) * lu)


# ---------------------------------------------------------------- numeric inverse

def _hinv_numeric(h1, logpdf, par, u, p, tol=1e-13, maxiter=300):
    """Safeguarded Newton/bisection for h1(u, v) = p on (EPS, 1 - EPS)."""
    u, p = np.broadcast_arrays(u, p)
    u, p = u.astype(float).copy(), p.astype(float).copy()
    lo = np.full(u.shape, EPS)
    hi = np.full(u.shape, 1.0 - EPS)
    v = np.clip(p, EPS, 1.0 - EPS)
    active = np.ones(u.shape, dtype=bool)
    for _ in range(maxiter):
        idx = np.nonzero(active)[0] if u.ndim else (np.array([0]) if active else np.array([], int))
        if idx.size == 0:
            break
        uu, pp, vv = np.atleast_1d(u)[idx], np.atleast_1d(p)[idx], np.atleast_1d(v)[idx]
        f = h1(par, uu, vv) - pp
        lo_i, hi_i = np.atleast_1d(lo)[idx], np.atleast_1d(hi)[idx]
        lo_i = np.where(f < 0, vv, lo_i)
        hi_i = np.where(f > 0, vv, hi_i)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            dens = np.exp(logpdf(par, uu, vv))
            step = vv - f / dens
        bad = ~np.isfinite(step) | (step <= lo_i) | (step >= hi_i)
        new = np.where(bad, 0.5 * (lo_i + hi_i), step)
        # converged when the residual is at rounding level relative to p, or v stopped moving
        done = ((np.abs(f) <= 4e-16 * np.minimum(pp, 1.0 - pp)) | (hi_i - lo_i < tol)
                | (~bad & (np.abs(step - vv) < 1e-3 * tol * np.maximum(vv, 1e-300))))
        new = np.where(done, vv, new)
        if u.ndim:
            lo[idx], hi[idx], v[idx] = lo_i, hi_i, new
            active[idx] = ~done
        else:
            lo, hi, v, active = lo_i[0], hi_i[0], new[0], not done[0]
    return v


def _g_hinv1(par, u, p):
    return _hinv_numeric(_g_h1, _g_logpdf, par, u, p)


def _bb1_hinv1(par, u, p):
    return _hinv_numeric(_bb1_h1, _bb1_logpdf, par, u, p)


# ---------------------------------------------------------------- rotation / dispatch

def _survival(fam):
    cdf, logpdf, h1, hinv1 = fam
    return (
        lambda par, u, v: u + v - 1.0 + cdf(par, 1.0 - u, 1.0 - v),
        lambda par, u, v: logpdf(par, 1.0 - u, 1.0 - v),
        lambda par, u, v: 1.0 - h1(par, 1.0 - u, 1.0 - v),
        lambda par, u, p: 1.0 - hinv1(par, 1.0 - u, 1.0 - p),
    )


_IMPL = {
    "I": (lambda par, u, v: u * v,
          lambda par, u, v: np.zeros(np.broadcast(u, v).shape),
          lambda par, u, v: v * np.ones_like(u),
          lambda par, u, p: p * np.ones_like(u)),
    "N": (_n_cdf, _n_logpdf, _n_h1, _n_hinv1),
    "t": (_t_cdf, _t_logpdf, _t_h1, _t_hinv1),
    "F": (_f_cdf, _f_logpdf, _f_h1, _f_hinv1),
    "G": (_g_cdf, _g_logpdf, _g_h1, _g_hinv1),
    "BB1": (_bb1_cdf, _bb1_logpdf, _bb1_h1, _bb1_hinv1),
}
_IMPL["G.s"] = _survival(_IMPL["G"])


_REFLECT_SYMMETRIC = ("N", "t", "F")
# parameter values at which a family is exactly the independence copula
_INDEP_AT = {"N": (0.0,), "F": (0.0,), "G": (1.0,), "G.s": (1.0,)}


def _kernel(cop):
    """Implementation tuple, routing independence points to the product copula."""
    if _INDEP_AT.get(cop.family) == cop.params:
        return _IMPL["I"]
    return _IMPL[cop.family]


def hfunc1_sf(cop, u, v):
    """1 - C_{2|1}(v | u) without cancellation where the family allows it.

    Radially symmetric families use 1 - h(u, v) = h(1 - u, 1 - v); the
    survival Gumbel uses the Gumbel h-function at the reflected point.
    Other families fall back to the plain complement.
    """
    u, v = _prep(u, v)
    fam = cop.family
    if fam == "I" or _kernel(cop) is _IMPL["I"]:
        return 1.0 - v * np.ones_like(u)
    if fam in _REFLECT_SYMMETRIC:
        return np.clip(_IMPL[fam][2](cop.params, 1.0 - u, 1.0 - v), 0.0, 1.0)
    if fam == "G.s":
        return np.clip(_IMPL["G"][2](cop.params, 1.0 - u, 1.0 - v), 0.0, 1.0)
    return np.clip(1.0 - _IMPL[fam][2](cop.params, u, v), 0.0, 1.0)


def n_params(family):
    return len(_BOUNDS[family])


def param_bounds(family):
    return list(_BOUNDS[family])


def _check_params(family, params):
    if family not in _IMPL:
        raise ValueError(f"unknown copula family {family!r}; expected one of {FAMILIES}")
    if len(params) != n_params(family):
        raise ValueError(f"family {family} takes {n_params(family)} parameter(s), got {len(params)}")
    if not all(np.isfinite(params)):
        raise ValueError(f"non-finite parameters {params} for family {family}")
    if family in ("N", "t") and not -1.0 < params[0] < 1.0:
        raise ValueError(f"{family} copula needs -1 < rho < 1, got {params[0]}")
    if family == "t" and not params[1] > 2.0:
        raise ValueError(f"t copula needs nu > 2, got {params[1]}")
    if family in ("G", "G.s") and params[0] < 1.0:
        raise ValueError(f"Gumbel copula needs delta >= 1, got {params[0]}")
    if family == "BB1" and not (params[0] > 0.0 and params[1] >= 1.0):
        raise ValueError(f"BB1 copula needs theta > 0 and delta >= 1, got {params}")


@dataclass(frozen=True)
class Bicop:
    """A bivariate copula with fixed family and parameters."""

    family: str = "I"
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        _check_params(self.family, self.params)

    def __repr__(self):
        return f"Bicop({self.family!r}, {self.params})"

    @property
    def n_params(self):
        return len(self.params)

    def cdf(self, u, v):
        u, v = _prep(u, v)
        return np.clip(_kernel(self)[0](self.params, u, v), 0.0, np.minimum(u, v))

    def logpdf(self, u, v):
        u, v = _prep(u, v)
        return _kernel(self)[1](self.params, u, v)

    def pdf(self, u, v):
        return np.exp(self.logpdf(u, v))

    def hfunc1(self, u, v):
        """C_{2|1}(v | u)."""
        u, v = _prep(u, v)
        return np.clip(_kernel(self)[2](self.params, u, v), 0.0, 1.0)

    def hfunc2(self, u, v):
        """C_{1|2}(u | v)."""
        u, v = _prep(u, v)
        return np.clip(_kernel(self)[2](self.params, v, u), 0.0, 1.0)

    def hinv1(self, u, p):
        """v such that C_{2|1}(v | u) = p."""
        u, p = _prep(u, p)
        return _kernel(self)[3](self.params, u, p)

    def hinv2(self, v, p):
        """u such that C_{1|2}(u | v) = p."""
        v, p = _prep(v, p)
        return _kernel(self)[3](self.params, v, p)

    def tau(self):
        """Kendall's tau, for reporting."""
        return par_to_tau(self.family, self.params)

    def to_dict(self):
        return {"family": self.family, "params": list(self.params)}

    @classmethod
    def from_dict(cls, d):
        return cls(d["family"], tuple(d["params"]))


# module-level functional interface
def cdf(family, params, u, v):
    return Bicop(family, params).cdf(u, v)


def pdf(family, params, u, v):
    return Bicop(family, params).pdf(u, v)


def hfunc1(family, params, u, v):
    return Bicop(family, params).hfunc1(u, v)


def hfunc2(family, params, u, v):
    return Bicop(family, params).hfunc2(u, v)


def hinv1(family, params, u, p):
    return Bicop(family, params).hinv1(u, p)


def hinv2(family, params, v, p):
    return Bicop(family, params).hinv2(v, p)


# ---------------------------------------------------------------- Kendall's tau

def _debye1(x):
    if abs(x) < 1e-8:
        return 1.0 - x / 4.0
    val = integrate.quad(lambda t: t / np.expm1(t) if t != 0 else 1.0, 0.0, abs(x))[0] / abs(x)
    return val if x > 0 else val + abs(x) / 2.0


def par_to_tau(family, params):
    if family == "I":
        return 0.0
    if family in ("N", "t"):
        return 2.0 / np.pi * np.arcsin(params[0])
    if family == "F":
        th = params[0]
        if abs(th) < 1e-8:
            return 0.0
        return 1.0 - 4.0 / th * (1.0 - _debye1(th))
    if family in ("G", "G.s"):
        return 1.0 - 1.0 / params[0]
    if family == "BB1":
        th, d = params
        return 1.0 - 2.0 / (d * (th + 2.0))
    raise ValueError(family)


def tau_to_par(family, tau):
    """Starting parameters matching Kendall's tau (clipped to the family's range)."""
    tau = float(np.clip(tau, -0.95, 0.95))
    if family == "I":
        return ()
    if family == "N":
        return (np.sin(np.pi * tau / 2.0),)
    if family == "t":
        return (np.sin(np.pi * tau / 2.0), 8.0)
    if family == "F":
        if abs(tau) < 1e-6:
            return (0.0,)
        lo, hi = (1e-6, 35.0) if tau > 0 else (-35.0, -1e-6)
        f = lambda th: par_to_tau("F", (th,)) - tau
        if f(lo) * f(hi) > 0:
            return (hi if tau > 0 else lo,)
        return (optimize.brentq(f, lo, hi),)
    tau = max(tau, 0.02)
    if family in ("G", "G.s"):
        return (min(1.0 / (1.0 - tau), 16.0),)
    if family == "BB1":
        d = 1.0 + 0.5 * tau
        th = max(2.0 / (d * (1.0 - tau)) - 2.0, 0.05)
        return (min(th, 6.5), d)
    raise ValueError(family)


# ---------------------------------------------------------------- mixed-scale density

def mixed_logpdf(cop, s, w, s_discrete=None, w_discrete=None):
    """log c~ for a pair of u-score vectors, each continuous or discrete.

    ``s`` and ``w`` are :class:`UScorePair` (plus, minus).  The density is the
    copula density, a finite difference of an h-function divided by the
    discrete variable's probability mass, or a rectangle probability divided
    by the product of masses, depending on which sides are discrete.
    Terms are floored at log(1e-300).
    """
    s_disc = s.discrete if s_discrete is None else s_discrete
    w_disc = w.discrete if w_discrete is None else w_discrete
    fam = _kernel(cop)
    par = cop.params
    sp, sm = np.clip(s.plus, EPS, 1 - EPS), np.clip(s.minus, EPS, 1 - EPS)
    wp, wm = np.clip(w.plus, EPS, 1 - EPS), np.clip(w.minus, EPS, 1 - EPS)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if not s_disc and not w_disc:
            out = fam[1](par, sp, wp)
        elif s_disc and not w_disc:
            num = fam[2](par, wp, sp) - fam[2](par, wp, sm)
            out = np.log(np.maximum(num, 0.0)) - np.log(np.maximum(sp - sm, 1e-300))
        elif w_disc and not s_disc:
            num = fam[2](par, sp, wp) - fam[2](par, sp, wm)
            out = np.log(np.maximum(num, 0.0)) - np.log(np.maximum(wp - wm, 1e-300))
        else:
            c = fam[0]
            rect = c(par, sp, wp) - c(par, sm, wp) - c(par, sp, wm) + c(par, sm, wm)
            out = (np.log(np.maximum(rect, 0.0)) - np.log(np.maximum(sp - sm, 1e-300))
                   - np.log(np.maximum(wp - wm, 1e-300)))
    out = np.where(np.isfinite(out) | (out > 0), out, LOG_FLOOR)
    return np.maximum(out, LOG_FLOOR)


def cond_given_first(cop, s, w, s_discrete=None):
    """F(w-variable | s-variable, ...) as a (plus, minus) pair.

    Continuous s: C_{2|1}(w+- | s+).  Discrete s: rectangle finite difference
    [C(s+, w) - C(s-, w)] / (s+ - s-).
    """
    s_disc = s.discrete if s_discrete is None else s_discrete
    fam = _kernel(cop)
    par = cop.params
    sp, sm = np.clip(s.plus, EPS, 1 - EPS), np.clip(s.minus, EPS, 1 - EPS)
    wp, wm = np.clip(w.plus, EPS, 1 - EPS), np.clip(w.minus, EPS, 1 - EPS)
    same_w = w.plus is w.minus or np.array_equal(wp, wm)
    if s_disc:
        den = np.maximum(sp - sm, 1e-300)
        vp = (fam[0](par, sp, wp) - fam[0](par, sm, wp)) / den
        vm = vp if same_w else (fam[0](par, sp, wm) - fam[0](par, sm, wm)) / den
    else:
        vp = fam[2](par, sp, wp)
        vm = vp if same_w else fam[2](par, sp, wm)
    vp = np.clip(vp, 0.0, 1.0)
    vm = vp if vm is vp else np.clip(vm, 0.0, 1.0)
    return UScorePair(vp, vm, discrete=bool(w.discrete))


def cond_given_second(cop, s, w, w_discrete=None):
    """F(s-variable | w-variable, ...) as a (plus, minus) pair."""
    w_disc = w.discrete if w_discrete is None else w_discrete
    fam = _kernel(cop)
    par = cop.params
    sp, sm = np.clip(s.plus, EPS, 1 - EPS), np.clip(s.minus, EPS, 1 - EPS)
    wp, wm = np.clip(w.plus, EPS, 1 - EPS), np.clip(w.minus, EPS, 1 - EPS)
    same_s = s.plus is s.minus or np.array_equal(sp, sm)
    if w_disc:
        den = np.maximum(wp - wm, 1e-300)
        vp = (fam[0](par, sp, wp) - fam[0](par, sp, wm)) / den
        vm = vp if same_s else (fam[0](par, sm, wp) - fam[0](par, sm, wm)) / den
    else:
        vp = fam[2](par, wp, sp)
        vm = vp if same_s else fam[2](par, wp, sm)
    vp = np.clip(vp, 0.0, 1.0)
    vm = vp if vm is vp else np.clip(vm, 0.0, 1.0)
    return UScorePair(vp, vm, discrete=bool(s.discrete))


# ---------------------------------------------------------------- fitting

@dataclass
class EdgeFit:
    bicop: Bicop
    loglik: float
    n: int
    se: tuple = ()

    @property
    def aic(self):
        return -2.0 * self.loglik + 2.0 * self.bicop.n_params

    @property
    def bic(self):
        return -2.0 * self.loglik + np.log(self.n) * self.bicop.n_params

    def criterion(self, name):
        return self.aic if name.lower() == "aic" else self.bic


def numeric_hessian(f, x, rel_step=1e-4):
    x = np.asarray(x, dtype=float)
    k = x.size
    h = rel_step * np.maximum(np.abs(x), 1.0)
    hess = np.empty((k, k))
    f0 = f(x)
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = h[i]
        hess[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i + 1, k):
            ej = np.zeros(k)
            ej[j] = h[j]
            val = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h[i] * h[j])
            hess[i, j] = hess[j, i] = val
    return hess


def _kendall_start(s, w):
    a = 0.5 * (s.plus + s.minus)
    b = 0.5 * (w.plus + w.minus)
    tau = stats.kendalltau(a, b).statistic
    return 0.0 if not np.isfinite(tau) else float(tau)


def fit_edge(family, a, b, compute_se=False, tau=None):
    """Maximum likelihood fit of one copula family to a pair of u-score vectors.

    Parameters
    ----------
    family : str
        Family code.
    a, b : UScorePair
        Pseudo-observations for the first and second copula arguments.
    compute_se : bool
        Attach standard errors from a numeric Hessian.
    tau : float, optional
        Kendall's tau of the pair, reused across candidate families.

    Returns
    -------
    EdgeFit
    """
    n = len(a.plus)
    if n != len(b.plus):
        raise ValueError("u-score vectors differ in length")
    if n < 10:
        raise ValueError(f"need at least 10 observations to fit an edge, got {n}")
    mid_a = 0.5 * (a.plus + a.minus)
    mid_b = 0.5 * (b.plus + b.minus)
    if np.ptp(mid_a) == 0.0 or np.ptp(mid_b) == 0.0:
        raise CopulaFitError("degenerate edge data: all u-scores identical")
    if family == "I":
        return EdgeFit(Bicop("I"), 0.0, n)

    bounds = param_bounds(family)
    if tau is None:
        tau = _kendall_start(a, b)

    def nll(theta):
        theta = np.clip(theta, [lo for lo, _ in bounds], [hi for _, hi in bounds])
        try:
            cop = Bicop(family, tuple(theta))
        except ValueError:
            return 1e300
        val = -np.sum(mixed_logpdf(cop, a, b))
        return val if np.isfinite(val) else 1e300

    starts = [tau_to_par(family, tau)]
    if family == "t":
        starts += [(starts[0][0], 4.0), (starts[0][0], 20.0)]
    if family in ("F",) and abs(tau) < 0.05:
        starts.append((1.0,))
        starts.append((-1.0,))
    best = None
    trace = []
    for x0 in starts:
        x0 = np.clip(np.asarray(x0, float), [lo + 1e-6 for lo, _ in bounds],
                     [hi - 1e-6 for _, hi in bounds])
        res = optimize.minimize(nll, x0, method="L-BFGS-B", bounds=bounds)
        trace.append((tuple(x0), res.fun, res.message))
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not np.isfinite(best.fun) or best.fun >= 1e299:
        raise CopulaFitError(f"fit of family {family} failed: {trace}")
    theta = np.clip(best.x, [lo for lo, _ in bounds], [hi for _, hi in bounds])
    cop = Bicop(family, tuple(theta))
    se = ()
    if compute_se:
        hess = numeric_hessian(nll, theta)
        try:
            se = tuple(np.sqrt(np.diag(np.linalg.inv(hess))))
        except np.linalg.LinAlgError:
            se = tuple([np.nan] * len(theta))
    return EdgeFit(cop, -float(best.fun), n, se)
