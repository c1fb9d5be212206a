"""Point and interval scores, multiple-imputation variants and the C-index.

Any model passed to :func:`impute` or :func:`metrics_mi` exposes
``cdf(y, X)`` (F(y | x) per row) and ``quantile(X, q)`` with ``q`` either a
scalar or one level per row.
"""
import csv
import json
import warnings
from dataclasses import asdict, dataclass

import numpy as np

EPS = 1e-10


class ImputationWarning(RuntimeWarning):
    pass


def mae_rmse(truth, pred):
    e = np.asarray(truth, dtype=float) - np.asarray(pred, dtype=float)
    return float(np.mean(np.abs(e))), float(np.sqrt(np.mean(e * e)))


def _is_terms(y, lower, upper, alpha):
    y, lower, upper = (np.asarray(a, dtype=float) for a in (y, lower, upper))
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if np.any(lower > upper):
        raise ValueError("lower bound exceeds upper bound")
    below = np.where(y < lower, lower - y, 0.0)
    above = np.where(y > upper, y - upper, 0.0)
    return (upper - lower) + (2.0 / alpha) * below + (2.0 / alpha) * above


def interval_score(truth, lower, upper, alpha):
    """Mean interval score of central (1 - alpha) intervals."""
    return float(np.mean(_is_terms(truth, lower, upper, alpha)))


def _row_uniforms(seed, rows, m):
    """m uniforms per row from a stream keyed by (seed, row index)."""
    out = np.empty((len(rows), m))
    for k, r in enumerate(rows):
        out[k] = np.random.default_rng(np.random.SeedSequence([int(seed), int(r)])).uniform(size=m)
    return out


def impute(model, X, ystar, m, seed, rows=None):
    """Draw m values from F(. | x) truncated below at y* for each row.

    Parameters
    ----------
    model : object with ``cdf`` and ``quantile``
    X : (n, p) array
    ystar : (n,) censoring times
    m : int
    seed : int
    rows : sequence of int, optional
        Stream keys; defaults to 0..n-1.  Keying by the row's position in the
        full test set keeps draws independent of which rows are censored.

    Returns
    -------
    (n, m) array, each entry >= y*
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ystar = np.asarray(ystar, dtype=float)
    if m < 1:
        raise ValueError("m must be >= 1")
    if np.any(ystar < 0):
        raise ValueError("censoring times must be >= 0")
    n = ystar.size
    if n == 0:
        return np.empty((0, m))
    rows = np.arange(n) if rows is None else np.asarray(rows)
    F0 = np.where(ystar > 0, model.cdf(np.where(ystar > 0, ystar, 1.0), X), 0.0)
    F0 = np.clip(F0, 0.0, 1.0)
    beyond = F0 >= 1.0 - EPS
    if np.any(beyond):
        warnings.warn(f"{int(beyond.sum())} censoring time(s) beyond the model's support; "
                      "imputing at the 1 - 1e-10 quantile", ImputationWarning, stacklevel=2)
    V = _row_uniforms(seed, rows, m)
    Uq = F0[:, None] + (1.0 - F0[:, None]) * V
    Uq = np.clip(Uq, EPS, 1.0 - EPS)
    Uq[beyond] = 1.0 - EPS
    Xr = np.repeat(X, m, axis=0)
    Y = np.asarray(model.quantile(Xr, Uq.ravel()), dtype=float).reshape(n, m)
    return np.maximum(Y, ystar[:, None])


def c_index(times, status, risk):
    """Harrell's concordance: concordant / (concordant + discordant).

    A pair is comparable when the shorter time is an event.  Higher risk
    should mean shorter time.  Pairs tied in risk or with equal times are
    left out.
    """
    t = np.asarray(times, dtype=float)
    s = np.asarray(status).astype(int)
    r = np.asarray(risk, dtype=float)
    conc = disc = 0
    for i in np.nonzero(s == 1)[0]:
        later = t > t[i]
        conc += int(np.sum(later & (r[i] > r)))
        disc += int(np.sum(later & (r[i] < r)))
    if conc + disc == 0:
        return float("nan")
    return conc / (conc + disc)


@dataclass
class MetricsReport:
    mae: float
    rmse: float
    is_alpha: float
    alpha: float
    mae_mi: float
    rmse_mi: float
    is_mi: float
    c_index: float
    n_test: int
    m_imputations: int
    imputation_model: str
    seed: int
    mc_se_mae_mi: float = 0.0

    def to_dict(self):
        return asdict(self)

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def to_csv(self, path, extra=None):
        row = dict(extra or {})
        row.update(self.to_dict())
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(row))
            w.writeheader()
            w.writerow(row)


def metrics_mi(model, X, times, status, pred, lower, upper, alpha=0.5, m=100, seed=0,
               truth=None, imputation_model="model"):
    """Raw and multiple-imputation scores of point and interval predictions.

    Parameters
    ----------
    model : imputation model (``cdf``/``quantile``)
    times, status : observed test responses
    pred, lower, upper : point predictions and interval bounds
    truth : array, optional
        True responses for the raw metrics (simulations); defaults to
        ``times`` restricted to uncensored rows.

    Notes
    -----
    Censored rows average the per-imputation absolute errors, squared
    errors and interval scores.  RMSE-MI takes a single square root of the
    pooled mean squared error.
    """
    times = np.asarray(times, dtype=float)
    status = np.asarray(status).astype(int)
    pred, lower, upper = (np.asarray(a, dtype=float) for a in (pred, lower, upper))
    n = times.size
    ev = status == 1
    if truth is None:
        mae, rmse = mae_rmse(times[ev], pred[ev]) if ev.any() else (np.nan, np.nan)
        isr = interval_score(times[ev], lower[ev], upper[ev], alpha) if ev.any() else np.nan
    else:
        truth = np.asarray(truth, dtype=float)
        mae, rmse = mae_rmse(truth, pred)
        isr = interval_score(truth, lower, upper, alpha)
    abs_e = np.zeros(n)
    sq_e = np.zeros(n)
    is_t = np.zeros(n)
    e = times[ev] - pred[ev]
    abs_e[ev] = np.abs(e)
    sq_e[ev] = e * e
    is_t[ev] = _is_terms(times[ev], lower[ev], upper[ev], alpha)
    mc_se = 0.0
    cen = np.nonzero(~ev)[0]
    if cen.size:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = impute(model, X[cen], times[cen], m, seed, rows=cen)
        E = Y - pred[cen, None]
        abs_e[cen] = np.mean(np.abs(E), axis=1)
        sq_e[cen] = np.mean(E * E, axis=1)
        is_t[cen] = np.mean(_is_terms(Y, lower[cen, None], upper[cen, None], alpha), axis=1)
        # MC s.e. of the MAE-MI from the spread over imputation index
        per_k = (np.sum(abs_e[ev]) + np.sum(np.abs(E), axis=0)) / n
        mc_se = float(np.std(per_k, ddof=1) / np.sqrt(m)) if m > 1 else float("nan")
    risk = -pred
    return MetricsReport(mae, rmse, isr, alpha, float(np.mean(abs_e)), float(np.sqrt(np.mean(sq_e))),
                         float(np.mean(is_t)), c_index(times, status, risk), n, m, imputation_model,
                         int(seed), mc_se)
