"""Reference computations written independently of the library's recursions."""
import numpy as np
from scipy import special, stats


def gaussian_vine_corr(spec):
    """Correlation matrix implied by a Gaussian vine, via the partial-correlation recursion.

    Edges are processed tree by tree.  For edge (a, b | S) every correlation
    among S + {a} and S + {b} is already known, and the partial correlation
    is linear in the missing entry:
    R_ab = R_aS R_SS^-1 R_Sb + rho * sqrt(v_a|S * v_b|S).
    """
    d = spec.d
    R = np.eye(d)
    edges = sorted(((l, j) for j in range(d) for l in range(j)), key=lambda e: e[0])
    for l, j in edges:
        a, b, S = spec.edge_vars(l, j)
        cop = spec.pcs[(l, j)]
        assert cop.family == "N", "oracle covers Gaussian vines only"
        rho = cop.params[0]
        a, b = a - 1, b - 1
        S = [s - 1 for s in S]
        if S:
            Ri = np.linalg.inv(R[np.ix_(S, S)])
            ra, rb = R[a, S], R[b, S]
            mean = ra @ Ri @ rb
            va = 1.0 - ra @ Ri @ ra
            vb = 1.0 - rb @ Ri @ rb
            R[a, b] = R[b, a] = mean + rho * np.sqrt(va * vb)
        else:
            R[a, b] = R[b, a] = rho
    return R


def gaussian_copula_logpdf(R, u):
    """log c(u) of a Gaussian copula from the multivariate normal density."""
    z = stats.norm.ppf(u)
    return stats.multivariate_normal(np.zeros(R.shape[0]), R).logpdf(z) - stats.norm.logpdf(z).sum(axis=-1)


def censored_gaussian_term(rho, u1, u2):
    """log P(Z2 > z2 | Z1 = z1) for a bivariate normal with correlation rho."""
    z1, z2 = stats.norm.ppf(u1), stats.norm.ppf(u2)
    return stats.norm.logsf((z2 - rho * z1) / np.sqrt(1.0 - rho * rho))


def sequential_logdensity(spec, u):
    """Vine copula log density by the chain rule over the diagonal order.

    Each variable's conditional density given the variables earlier on the
    diagonal is the product of its edge densities; edge arguments are
    conditional distributions found by searching the edge list for a
    (pair, conditioning set) match.  Scalar per observation, no memo shared
    with the library.
    """
    d = spec.d
    edge = {}
    for j in range(d):
        for l in range(j):
            a, b, S = spec.edge_vars(l, j)
            edge[(frozenset((a, b)), frozenset(S))] = (a, b, spec.pcs[(l, j)])

    def cond(row, v, S, cache):
        key = (v, S)
        if key not in cache:
            if not S:
                cache[key] = row[v - 1]
            else:
                for w in S:
                    rest = S - {w}
                    hit = edge.get((frozenset((v, w)), rest))
                    if hit is None:
                        continue
                    a, b, cop = hit
                    fv, fw = cond(row, v, rest, cache), cond(row, w, rest, cache)
                    # C_{v|w}: conditioning on the other argument of the edge
                    if a == w:
                        val = cop.hfunc1(fw, fv)
                    else:
                        val = cop.hfunc2(fv, fw)
                    cache[key] = float(np.asarray(val).ravel()[0])
                    break
                else:
                    raise KeyError(f"F({v}|{sorted(S)}) not reachable")
        return cache[key]

    out = np.empty(len(u))
    for i, row in enumerate(np.asarray(u, dtype=float)):
        cache = {}
        total = 0.0
        for j in range(d):
            for l in range(j):
                a, b, S = spec.edge_vars(l, j)
                S = frozenset(S)
                cop = spec.pcs[(l, j)]
                total += float(np.asarray(cop.logpdf(cond(row, a, S, cache), cond(row, b, S, cache))).ravel()[0])
        out[i] = total
    return out


def normal_scores_from_ranks(x):
    return special.ndtri((stats.rankdata(x) - 0.5) / len(x))


def discrete_score_bounds(x):
    lv = np.unique(x)
    cum = np.array([np.mean(x <= v) for v in lv])
    lower = np.concatenate([[0.0], cum[:-1]])
    k = np.searchsorted(lv, x)
    return special.ndtri(lower[k]), special.ndtri(np.minimum(cum[k], 1.0))


GRID = np.round(np.arange(-999, 1000) / 1000.0, 3)


def grid_corr_continuous(x, t):
    """Uncensored normal-scores correlation MLE by grid search (step 1e-3)."""
    a, b = normal_scores_from_ranks(x), normal_scores_from_ranks(t)
    n = a.size
    saa, sbb, sab = a @ a, b @ b, a @ b
    r = GRID
    ll = -0.5 * n * np.log(1 - r * r) - (saa - 2 * r * sab + sbb) / (2 * (1 - r * r))
    return float(r[np.argmax(ll)])


def grid_corr_discrete(x, t):
    """Uncensored interval-likelihood correlation MLE by grid search (step 1e-3)."""
    zl, zu = discrete_score_bounds(x)
    z2 = normal_scores_from_ranks(t)
    best, arg = -np.inf, None
    for r in GRID:
        s = np.sqrt(1 - r * r)
        p = stats.norm.cdf((zu - r * z2) / s) - stats.norm.cdf((zl - r * z2) / s)
        ll = np.sum(np.log(np.maximum(p, 1e-300)))
        if ll > best:
            best, arg = ll, r
    return float(arg)


def km_by_hand(times, status, y):
    """Product over distinct event times strictly below y of (1 - d/n)."""
    s = 1.0
    for t in sorted(set(np.asarray(times)[np.asarray(status) == 1])):
        if t < y:
            n_risk = sum(1 for x in times if x >= t)
            d = sum(1 for x, e in zip(times, status) if x == t and e == 1)
            s *= 1 - d / n_risk
    return s


def c_index_by_pairs(times, status, risk):
    """Concordance by explicit pair enumeration (ties in risk not counted)."""
    conc = disc = 0
    n = len(times)
    for i in range(n):
        for j in range(n):
            if status[i] == 1 and times[i] < times[j]:
                if risk[i] > risk[j]:
                    conc += 1
                elif risk[i] < risk[j]:
                    disc += 1
    return conc / (conc + disc)


def mixed_gaussian_logdensity(R, k, zl, zu, zc):
    """Copula-scale log density of a Gaussian vector whose variable k is interval-observed.

    Variable k lies in (zl, zu]; the rest are observed at ``zc`` (columns in
    index order, k removed).  The value is
    log[P(zl < Z_k <= zu | z_rest) * phi_R(z_rest) / prod phi(z_rest) / (Phi(zu) - Phi(zl))].
    """
    d = R.shape[0]
    rest = [i for i in range(d) if i != k]
    Rrr = R[np.ix_(rest, rest)]
    b = np.linalg.solve(Rrr, R[rest, k])
    mu = zc @ b
    sd = np.sqrt(1.0 - R[k, rest] @ b)
    p = stats.norm.cdf((zu - mu) / sd) - stats.norm.cdf((zl - mu) / sd)
    dens = stats.multivariate_normal(np.zeros(d - 1), Rrr).logpdf(zc) - stats.norm.logpdf(zc).sum(axis=-1)
    return np.log(p) + dens - np.log(stats.norm.cdf(zu) - stats.norm.cdf(zl))
