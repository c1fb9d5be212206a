"""Structure and pair-copula selection with the response kept as a leaf."""
import warnings

import numpy as np
from scipy import optimize, stats

from .bicop import (DEFAULT_CANDIDATES, Bicop, CopulaFitError, fit_edge, n_params,
                    param_bounds, par_to_tau, tau_to_par)
from .vine import (VineSpec, build_columns, natural_to_labels, predictor_pass, response_inputs,
                   response_terms, column_forward)


class SelectionWarning(RuntimeWarning):
    pass


def partial_corr(R, a, b, S):
    """Gaussian partial correlation of (a, b) given S from a correlation matrix."""
    idx = [a, b] + list(S)
    P = np.linalg.inv(R[np.ix_(idx, idx)])
    return -P[0, 1] / np.sqrt(P[0, 0] * P[1, 1])


def select_structure(R):
    """Vine array for predictors 1..p and the response d = p + 1 (last row of R).

    Predictors enter the diagonal by decreasing |R(X, Y)|, which is also the
    response column from the top, so the response is a leaf in every tree.
    Each predictor column is grown one level at a time, picking among the
    admissible partners the one with the largest absolute partial
    correlation given the partners already chosen.
    """
    R = np.asarray(R, dtype=float)
    d = R.shape[0]
    p = d - 1
    if p < 1:
        raise ValueError("need at least one predictor")
    ry = np.abs(R[:p, p])
    perm = list(np.argsort(-ry, kind="stable"))      # natural j -> predictor index
    Rn = R[np.ix_(perm + [p], perm + [p])]

    def choose(j, prefix, cands):
        if j == p:                                   # response column: 0..p-1 in order
            nxt = len(prefix)
            return [nxt] if nxt in cands else []
        w = [abs(partial_corr(Rn, j, x, prefix)) for x in cands]
        order = np.argsort(-np.asarray(w), kind="stable")
        return [cands[k] for k in order]

    nat = build_columns(d, choose)
    order = [int(k) + 1 for k in perm] + [d]
    return natural_to_labels(nat, order)


# ---------------------------------------------------------------- predictor edges

def _crit(ll, k, n, criterion):
    return -2.0 * ll + (2.0 if criterion.lower() == "aic" else np.log(n)) * k


def choose_family(s, w, candidates=DEFAULT_CANDIDATES, criterion="aic", fallback=True):
    """Fit each candidate on one edge and keep the lowest criterion.

    Independence is tried last so it only wins when strictly better.
    Returns (EdgeFit, trace dict).
    """
    n = len(s)
    mid_s, mid_w = s.mid, w.mid
    tau = stats.kendalltau(mid_s, mid_w).statistic
    tau = 0.0 if not np.isfinite(tau) else float(tau)
    cands = list(candidates) + (["I"] if fallback and "I" not in candidates else [])
    best, tried = None, {}
    for fam in cands:
        try:
            fit = fit_edge(fam, s, w, tau=tau)
        except (CopulaFitError, ValueError) as err:
            tried[fam] = {"error": str(err)[:200]}
            continue
        c = fit.criterion(criterion)
        tried[fam] = {"loglik": fit.loglik, "criterion": c, "params": list(fit.bicop.params)}
        if best is None or c < best[0]:
            best = (c, fit)
    if best is None:
        raise CopulaFitError(f"no candidate could be fitted: {tried}")
    return best[1], {"tried": tried, "chosen": best[1].bicop.family, "tau": tau}


def select_predictor_edges(A, upairs, discrete=None, candidates=DEFAULT_CANDIDATES,
                           criterion="aic", min_n=10):
    """Sequentially select and fit every edge among the predictors.

    Parameters
    ----------
    A : array
        Full vine array, response at (d, d).
    upairs : list of UScorePair
        Per label; the response entry is not used.

    Returns
    -------
    spec : VineSpec
        Predictor edges fitted; response edges Gaussian placeholders (rho = 0).
    trace : list of per-edge dicts
    """
    A = np.asarray(A, dtype=int)
    d = A.shape[0]
    n = len(upairs[0])
    if n < min_n:
        raise ValueError(f"need at least {min_n} observations, got {n}")
    if discrete is None:
        discrete = [u.discrete for u in upairs]
    pcs = {(l, j): Bicop("I") for j in range(d) for l in range(j)}
    spec = VineSpec(A, pcs, discrete)
    ws = spec.workspace()
    U = ws.to_natural(upairs)
    V, Vp = [None] * d, [None] * d
    trace = []

    def chooser(l, j, s, w):
        fit, tr = choose_family(s, w, candidates, criterion)
        a, b = ws.order[ws.nat[l, j]], ws.order[j]
        tr.update({"edge": [l + 1, j + 1],
                   "vars": [int(a), int(b)],
                   "given": [int(ws.order[x]) for x in ws.nat[:l, j]],
                   "loglik": fit.loglik})
        trace.append(tr)
        return fit.bicop

    for j in range(d - 1):
        column_forward(ws, j, U, V, Vp, density=False, choose=chooser)
    final = {k: ws.cop[k] for k in pcs}
    for l in range(d - 1):
        final[(l, d - 1)] = Bicop("N", (0.0,))
    return VineSpec(A, final, discrete), trace


# ---------------------------------------------------------------- response edges

class _ResponseProblem:
    def __init__(self, spec, upairs, status):
        ws = spec.workspace()
        U = ws.to_natural(upairs)
        V, Vp, pred = predictor_pass(ws, U)
        self.pred_ll = float(np.sum(pred))
        self.s_list = response_inputs(ws, U, V, Vp)
        self.uy = U[-1].plus
        self.status = np.asarray(status).astype(int)
        self.n = len(self.uy)
        self.L = ws.d - 1

    def loglik(self, cops):
        return self.pred_ll + float(np.sum(response_terms(cops, self.s_list, self.uy, self.status)))


def _pack(cops, which):
    x, b = [], []
    for k in which:
        x += list(cops[k].params)
        b += param_bounds(cops[k].family)
    return np.asarray(x, float), b


def _unpack(cops, which, x):
    out = list(cops)
    i = 0
    for k in which:
        m = n_params(cops[k].family)
        out[k] = Bicop(cops[k].family, tuple(x[i:i + m]))
        i += m
    return out


def optimize_response(prob, cops, which, maxiter=200):
    """Maximize the full censored log-likelihood over the parameters of edges ``which``."""
    which = [k for k in which if n_params(cops[k].family) > 0]
    base = prob.loglik(cops)
    if not which:
        return cops, base
    x0, bounds = _pack(cops, which)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    x0 = np.clip(x0, lo, hi)

    def nll(x):
        try:
            val = -prob.loglik(_unpack(cops, which, np.clip(x, lo, hi)))
        except ValueError:
            return 1e300
        return val if np.isfinite(val) else 1e300

    res = optimize.minimize(nll, x0, method="L-BFGS-B", bounds=bounds,
                            options={"maxiter": maxiter})
    if not np.isfinite(res.fun) or res.fun >= 1e299:
        raise CopulaFitError(f"response-edge optimization failed: {res.message}")
    if -res.fun < base:                      # warm start dominance
        return cops, base
    return _unpack(cops, which, np.clip(res.x, lo, hi)), -float(res.fun)


def _start_for(family, current):
    tau = par_to_tau(current.family, current.params) if current.family != "I" else 0.0
    return Bicop(family, tau_to_par(family, tau)) if family != "I" else Bicop("I")


def select_response_edges(spec, upairs, status, candidates=DEFAULT_CANDIDATES, criterion="aic",
                          reoptimize="every"):
    """Stepwise family choice for the response edges, then a joint refit.

    Parameters
    ----------
    spec : VineSpec
        Predictor edges fitted; they stay frozen.
    reoptimize : {"every", "level"}
        "every" re-estimates the lower response edges inside each candidate
        evaluation; "level" estimates only the candidate edge and refits the
        lower edges once after the level is decided.

    Returns
    -------
    spec : VineSpec, trace : dict
    """
    if reoptimize not in ("every", "level"):
        raise ValueError("reoptimize must be 'every' or 'level'")
    prob = _ResponseProblem(spec, upairs, status)
    L, j = prob.L, prob.L
    cops = [Bicop("N", spec.pcs[(l, j)].params if spec.pcs[(l, j)].family == "N" else (0.0,))
            for l in range(L)]
    cops, ll0 = optimize_response(prob, cops, range(L))
    trace = {"init_gaussian_loglik": ll0, "levels": []}
    cands = list(candidates) + (["I"] if "I" not in candidates else [])
    for lev in range(L):
        tried = {}
        best = None
        for fam in cands:
            trial = list(cops)
            trial[lev] = _start_for(fam, cops[lev])
            try:
                if reoptimize == "every":
                    trial, ll = optimize_response(prob, trial, range(lev + 1))
                else:
                    trial, ll = optimize_response(prob, trial, [lev])
            except (CopulaFitError, ValueError) as err:
                tried[fam] = {"error": str(err)[:200]}
                continue
            k = sum(c.n_params for c in trial[:lev + 1])
            c = _crit(ll, k, prob.n, criterion)
            tried[fam] = {"loglik": ll, "criterion": c, "params": list(trial[lev].params)}
            if best is None or c < best[0]:
                best = (c, trial, ll, fam)
        if best is None:
            warnings.warn(f"response level {lev + 1}: all candidates failed; keeping Gaussian",
                          SelectionWarning)
            trace["levels"].append({"level": lev + 1, "tried": tried, "chosen": "N"})
            continue
        cops = best[1]
        if reoptimize == "level" and lev > 0:
            cops, _ = optimize_response(prob, cops, range(lev + 1))
        trace["levels"].append({"level": lev + 1, "tried": tried, "chosen": best[3]})
    step_ll = prob.loglik(cops)
    cops, final_ll = optimize_response(prob, cops, range(L), maxiter=500)
    trace["stepwise_loglik"] = step_ll
    trace["final_loglik"] = final_ll
    new = spec.copy({(l, j): cops[l] for l in range(L)})
    return new, trace
