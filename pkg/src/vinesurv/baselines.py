"""Weibull AFT and Cox proportional hazards baselines.

AFT: log Y = g0 + x'g + sigma W with W standard minimum extreme value, so
S(y | x) = exp(-exp((log y - g0 - x'g) / sigma)).

Cox: h(y | x) = h0(y) exp(x'b), b from the Breslow partial likelihood and a
Weibull H0(y) = (y / lam)^k fitted afterwards by maximizing the full
likelihood with b held fixed.  Under Weibull data the two agree through
b = -g / sigma.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .bicop import numeric_hessian

SCHEMA_AFT = "vinesurv.aft/1"
SCHEMA_COX = "vinesurv.cox/1"


class BaselineFitError(RuntimeError):
    pass


def _check(X, times, status):
    times = np.asarray(times, dtype=float)
    status = np.asarray(status).astype(int)
    X = np.zeros((times.size, 0)) if X is None else np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != times.size or status.shape != times.shape:
        raise ValueError("X, times and status differ in length")
    if np.any(times <= 0):
        raise ValueError("times must be strictly positive")
    if not np.any(status == 1):
        raise BaselineFitError("no events")
    return X, times, status


# ---------------------------------------------------------------- AFT

@dataclass
class AftModel:
    gamma0: float
    gamma: np.ndarray
    sigma: float
    loglik: float = np.nan
    se: np.ndarray = None
    kind: str = "aft"

    def linpred(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.gamma0 + X @ self.gamma

    def survival(self, y, X):
        z = (np.log(y) - self.linpred(X)[:, None]) / self.sigma
        return np.exp(-np.exp(z))

    def cdf(self, y, X):
        """F(y | x) for each row of X (y broadcast per row)."""
        y = np.asarray(y, dtype=float)
        mu = self.linpred(X)
        return -np.expm1(-np.exp((np.log(y) - mu) / self.sigma))

    def quantile(self, X, q):
        q = np.asarray(q, dtype=float)
        return np.exp(self.linpred(X) + self.sigma * np.log(-np.log1p(-q)))

    def cumhaz(self, y, X):
        return np.exp((np.log(np.asarray(y, float))[None, :] - self.linpred(X)[:, None]) / self.sigma)

    def to_dict(self):
        return {"schema": SCHEMA_AFT, "kind": "aft", "gamma0": self.gamma0, "gamma": list(map(float, self.gamma)),
                "sigma": self.sigma, "loglik": self.loglik,
                "se": None if self.se is None else list(map(float, self.se))}

    @classmethod
    def from_dict(cls, d):
        return cls(d["gamma0"], np.asarray(d["gamma"], float), d["sigma"], d.get("loglik", np.nan),
                   None if d.get("se") is None else np.asarray(d["se"], float))


def _aft_nll(theta, X, ly, status):
    p = X.shape[1]
    mu = theta[0] + X @ theta[1:p + 1]
    ls = theta[p + 1]
    z = (ly - mu) / np.exp(ls)
    ez = np.exp(np.minimum(z, 700.0))
    ll = status * (-ls + z) - ez
    g = status - ez                         # d ll / dz
    dmu = -g / np.exp(ls)
    grad = np.concatenate([[dmu.sum()], X.T @ dmu, [np.sum(-status - g * z)]])
    return -float(np.sum(ll - status * ly)), -grad


def fit_aft(X, times, status):
    """Weibull AFT by maximum likelihood with numeric-Hessian standard errors."""
    X, times, status = _check(X, times, status)
    ly = np.log(times)
    p = X.shape[1]
    D = np.column_stack([np.ones(times.size), X])
    ev = status == 1
    beta0 = np.linalg.lstsq(D[ev], ly[ev], rcond=None)[0] if ev.sum() > p + 1 else np.r_[ly.mean(), np.zeros(p)]
    resid = ly[ev] - D[ev] @ beta0
    s0 = max(np.std(resid) * np.sqrt(6) / np.pi, 1e-3)
    x0 = np.concatenate([beta0 + np.r_[0.5772 * s0, np.zeros(p)], [np.log(s0)]])
    res = optimize.minimize(_aft_nll, x0, args=(X, ly, status), jac=True, method="BFGS",
                            options={"gtol": 1e-8, "maxiter": 2000})
    if not np.all(np.isfinite(res.x)) or not np.isfinite(res.fun):
        raise BaselineFitError(f"AFT fit diverged: {res.message}")
    if abs(res.x[-1]) > 20 or np.any(np.abs(res.x[:-1]) > 1e6):
        raise BaselineFitError(f"AFT fit diverged (parameters {res.x})")
    H = numeric_hessian(lambda t: _aft_nll(t, X, ly, status)[0], res.x)
    try:
        cov = np.linalg.inv(H)
        se_raw = np.sqrt(np.clip(np.diag(cov), 0, None))
    except np.linalg.LinAlgError:
        se_raw = np.full(res.x.size, np.nan)
    sigma = float(np.exp(res.x[-1]))
    se = se_raw.copy()
    se[-1] = sigma * se_raw[-1]             # delta method for sigma
    return AftModel(float(res.x[0]), res.x[1:p + 1].copy(), sigma, -float(res.fun), se)


# ---------------------------------------------------------------- Cox

@dataclass
class CoxModel:
    beta: np.ndarray
    shape: float
    scale: float
    loglik_partial: float = np.nan
    se: np.ndarray = None
    breslow_times: np.ndarray = field(default=None, repr=False)
    breslow_H0: np.ndarray = field(default=None, repr=False)
    kind: str = "cox"

    def H0(self, y):
        return (np.asarray(y, dtype=float) / self.scale) ** self.shape

    def breslow(self, y):
        """Breslow step estimate of H0 (diagnostic only; undefined past the last event)."""
        y = np.asarray(y, dtype=float)
        k = np.searchsorted(self.breslow_times, y, side="right")
        out = np.concatenate([[0.0], self.breslow_H0])[k]
        return np.where(y > self.breslow_times[-1], np.nan, out)

    def linpred(self, X):
        return np.atleast_2d(np.asarray(X, dtype=float)) @ self.beta

    def cdf(self, y, X):
        return -np.expm1(-self.H0(y) * np.exp(self.linpred(X)))

    def quantile(self, X, q):
        q = np.asarray(q, dtype=float)
        return self.scale * (-np.log1p(-q) * np.exp(-self.linpred(X))) ** (1.0 / self.shape)

    def cumhaz(self, y, X):
        return self.H0(y)[None, :] * np.exp(self.linpred(X))[:, None]

    def to_dict(self):
        return {"schema": SCHEMA_COX, "kind": "cox", "beta": list(map(float, self.beta)),
                "shape": self.shape, "scale": self.scale, "loglik_partial": self.loglik_partial,
                "se": None if self.se is None else list(map(float, self.se))}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["beta"], float), d["shape"], d["scale"], d.get("loglik_partial", np.nan),
                   None if d.get("se") is None else np.asarray(d["se"], float))


def _cox_prep(X, times, status):
    order = np.argsort(-times, kind="stable")        # descending time
    Xs, ts, ds = X[order], times[order], status[order]
    # index of the last row sharing each time in descending order -> risk set end
    uniq_rev, first = np.unique(-ts, return_index=True)
    last = np.r_[first[1:], ts.size] - 1
    group = np.searchsorted(uniq_rev, -ts)
    return Xs, ts, ds, last, group


def _cox_nll(beta, Xs, ds, last, group):
    eta = Xs @ beta
    m = eta.max()
    w = np.exp(eta - m)
    cw = np.cumsum(w)[last][group]                   # sum over {t_j >= t_i}
    cwx = np.cumsum(w[:, None] * Xs, axis=0)[last][group]
    ll = np.sum(ds * (eta - m - np.log(cw)))
    grad = (ds[:, None] * (Xs - cwx / cw[:, None])).sum(axis=0)
    return -float(ll), -grad


def fit_cox(X, times, status):
    """Cox PH (Breslow ties) with a Weibull baseline fitted afterwards."""
    X, times, status = _check(X, times, status)
    p = X.shape[1]
    Xs, ts, ds, last, group = _cox_prep(X, times, status)
    if p:
        res = optimize.minimize(_cox_nll, np.zeros(p), args=(Xs, ds, last, group), jac=True,
                                method="BFGS", options={"gtol": 1e-9, "maxiter": 2000})
        beta = res.x
        if not np.all(np.isfinite(beta)) or np.any(np.abs(beta) > 50):
            raise BaselineFitError(f"Cox fit diverged (separation?): {beta}")
        llp = -float(res.fun)
        H = numeric_hessian(lambda b: _cox_nll(b, Xs, ds, last, group)[0], beta)
        try:
            se = np.sqrt(np.clip(np.diag(np.linalg.inv(H)), 0, None))
        except np.linalg.LinAlgError:
            se = np.full(p, np.nan)
    else:
        beta, llp, se = np.zeros(0), -_cox_nll(np.zeros(0), Xs, ds, last, group)[0], np.zeros(0)
    eta = X @ beta
    # Breslow step function
    ev_t = np.unique(times[status == 1])
    risk = np.array([np.exp(eta[times >= t]).sum() for t in ev_t])
    dcount = np.array([((times == t) & (status == 1)).sum() for t in ev_t])
    H0_steps = np.cumsum(dcount / risk)

    # Weibull baseline by full likelihood with beta fixed
    lt = np.log(times)

    def nll(th):
        k, lam = np.exp(th)
        logH = k * (lt - np.log(lam))
        Hx = np.exp(logH + eta)
        ll = status * (np.log(k) + (k - 1.0) * lt - k * np.log(lam) + eta) - Hx
        return -float(np.sum(ll))

    k0 = 1.0
    lam0 = np.exp(np.mean(lt))
    res = optimize.minimize(nll, np.log([k0, lam0]), method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
    k, lam = np.exp(res.x)
    return CoxModel(beta, float(k), float(lam), llp, se, ev_t, H0_steps)


def predict_quantile_aft(model, X, q):
    return model.quantile(X, q)


def predict_quantile_cox(model, X, q):
    return model.quantile(X, q)


# ---------------------------------------------------------------- PH diagnostic

def count_crossings(H, tol=1e-9):
    """Number of pairs of curves (rows of H) whose ordering flips along the y grid."""
    H = np.asarray(H, dtype=float)
    k = 0
    for a in range(H.shape[0]):
        for b in range(a + 1, H.shape[0]):
            diff = H[a] - H[b]
            sig = np.sign(np.where(np.abs(diff) <= tol * np.maximum(1.0, np.abs(H[a])), 0.0, diff))
            sig = sig[sig != 0]
            if sig.size and np.any(sig != sig[0]):
                k += 1
    return k


@dataclass
class CumhazGrid:
    x_grid: np.ndarray
    y_grid: np.ndarray
    H: np.ndarray
    crossings: int

    def to_csv(self, path, covariate="x"):
        with open(path, "w") as fh:
            fh.write(f"{covariate},y,H\n")
            for i, x in enumerate(self.x_grid):
                for k, y in enumerate(self.y_grid):
                    fh.write(f"{x:.10g},{y:.10g},{self.H[i, k]:.10g}\n")


def cumhaz_grid(model, base_row, covariate, x_grid, y_grid):
    """H(y | x) over a grid of one covariate with the others fixed at ``base_row``.

    ``model`` is an AftModel, a CoxModel, or any object exposing
    ``cdf(y, X)`` returning F(y | x) with one row per x (y broadcast).
    """
    x_grid = np.asarray(x_grid, dtype=float)
    y_grid = np.asarray(y_grid, dtype=float)
    X = np.tile(np.asarray(base_row, dtype=float), (x_grid.size, 1))
    X[:, covariate] = x_grid
    if hasattr(model, "cumhaz"):
        H = model.cumhaz(y_grid, X)
    else:
        H = np.empty((x_grid.size, y_grid.size))
        for k, y in enumerate(y_grid):
            S = 1.0 - model.cdf(np.full(x_grid.size, y), X)
            H[:, k] = -np.log(np.maximum(S, 1e-300))
    return CumhazGrid(x_grid, y_grid, H, count_crossings(H))
