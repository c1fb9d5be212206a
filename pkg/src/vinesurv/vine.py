"""R-vine arrays, censored vine log-likelihood, conditional response CDF and simulation.

Arrays are stored as in the usual upper-triangular presentation with 1-based
variable labels: ``A[l, j]`` for ``l < j`` is the partner of the diagonal
variable ``A[j, j]`` in tree ``l + 1``, conditioned on ``A[0:l, j]``.  The
edge copula takes ``A[l, j]`` as its first argument and ``A[j, j]`` as its
second.  Below the diagonal the array holds zeros.

Internally every computation relabels variables so the diagonal reads
0..d-1 ("natural order") and walks the array column by column.  Column j
only ever reads from columns m < j, so the left-to-right walk reproduces the
level-by-level recursion while letting the response column (always last)
be handled on its own.
"""
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bicop import (EPS, LOG_FLOOR, Bicop, _kernel, cond_given_first, cond_given_second, hfunc1_sf,
                    mixed_logpdf)
from .margins import UScorePair

SCHEMA_VINE = "vinesurv.vinespec/1"


class VineArrayError(ValueError):
    """The array violates the vine-array conditions."""


class UnderflowWarning(RuntimeWarning):
    """Some log-likelihood terms were floored at log(1e-300)."""


class QuantileBracketError(RuntimeError):
    """The conditional CDF did not bracket the requested probability."""


# ---------------------------------------------------------------- arrays

def array_violations(A):
    """List the ways ``A`` fails to be a valid vine array (empty if valid)."""
    A = np.asarray(A)
    out = []
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        return ["array is not square"]
    d = A.shape[0]
    diag = [int(A[j, j]) for j in range(d)]
    if sorted(diag) != list(range(1, d + 1)):
        out.append(f"diagonal {diag} is not a permutation of 1..{d}")
        return out
    for j in range(d):
        col = [int(A[l, j]) for l in range(j + 1)]
        if len(set(col)) != j + 1:
            out.append(f"column {j + 1} repeats a variable: {col}")
        elif set(col) != set(diag[:j + 1]):
            out.append(f"column {j + 1} {col} does not use exactly the first {j + 1} diagonal variables")
        for l in range(j + 1, d):
            if A[l, j] != 0:
                out.append(f"entry ({l + 1},{j + 1}) below the diagonal is nonzero")
    if out:
        return out
    # for rows 2..j-1 the prefix set {a_1j..a_lj} must equal some earlier column's
    # {a_1k..a_(l-1)k, a_kk}, k in l..j-1
    for j in range(2, d):
        for l in range(1, j):
            target = set(int(A[r, j]) for r in range(l + 1))
            ok = any(target == set(int(A[r, k]) for r in range(l)) | {int(A[k, k])}
                     for k in range(l, j))
            if not ok:
                out.append(f"column {j + 1}, row {l + 1}: set {sorted(target)} matches no earlier column")
    return out


def validate(A, response=None):
    """Raise :class:`VineArrayError` when ``A`` is not a valid vine array.

    With ``response`` given, also require it to sit at the bottom-right corner
    (the only place where a variable is a leaf in every tree).
    """
    bad = array_violations(A)
    A = np.asarray(A)
    if not bad and response is not None and int(A[-1, -1]) != int(response):
        bad.append(f"response {response} is not at position (d,d)")
    if bad:
        raise VineArrayError("; ".join(bad))
    return True


def natural_order(A):
    """Relabel so the diagonal is 0..d-1.

    Returns
    -------
    nat : (d, d) int array, 0-based natural labels (-1 below the diagonal)
    order : list of the original 1-based label of natural variable j
    """
    A = np.asarray(A, dtype=int)
    d = A.shape[0]
    order = [int(A[j, j]) for j in range(d)]
    pos = {lab: j for j, lab in enumerate(order)}
    nat = -np.ones((d, d), dtype=int)
    for j in range(d):
        for l in range(j + 1):
            nat[l, j] = pos[int(A[l, j])]
    return nat, order


def max_array(nat):
    """m_lj = max(a_0j, ..., a_lj) on the upper triangle."""
    d = nat.shape[0]
    M = -np.ones_like(nat)
    for j in range(d):
        for l in range(j):
            M[l, j] = nat[: l + 1, j].max()
    return M


def prime_needed(nat, M):
    """Set of (m, l) whose 'prime' value F(a_lm | m, a_0m..a_(l-1)m) is read later.

    This is the needed-flag array: column j at level l >= 1 reads the prime
    output of column m_lj at level l-1 whenever a_lj differs from m_lj.
    """
    d = nat.shape[0]
    need = set()
    for j in range(d):
        for l in range(1, j):
            m = M[l, j]
            if nat[l, j] != m:
                need.add((int(m), l - 1))
    return need


# ---------------------------------------------------------------- spec

def _parse_par(p):
    if p is None:
        return ()
    if np.isscalar(p):
        return (float(p),)
    return tuple(float(x) for x in p)


@dataclass
class VineSpec:
    """Vine array, per-edge copulas and per-variable scale flags.

    Parameters
    ----------
    A : (d, d) int array
        1-based labels, upper triangular.
    pcs : dict
        ``{(l, j): Bicop}`` for 0-based row ``l < j``.
    discrete : tuple of bool
        Scale flag per variable label (index ``label - 1``).
    """

    A: np.ndarray
    pcs: dict
    discrete: tuple = None
    names: list = None

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=int)
        d = self.A.shape[0]
        validate(self.A)
        if self.discrete is None:
            self.discrete = (False,) * d
        self.discrete = tuple(bool(x) for x in self.discrete)
        if len(self.discrete) != d:
            raise ValueError("discrete flags do not match the array dimension")
        for j in range(d):
            for l in range(j):
                if (l, j) not in self.pcs:
                    raise ValueError(f"missing copula for edge ({l + 1},{j + 1})")
        self._ws = None

    @property
    def d(self):
        return self.A.shape[0]

    @property
    def response(self):
        return int(self.A[-1, -1])

    def edge_vars(self, l, j):
        """(first, second, conditioning) labels of edge (l, j)."""
        return int(self.A[l, j]), int(self.A[j, j]), [int(x) for x in self.A[:l, j]]

    def copy(self, pcs=None):
        new = dict(self.pcs)
        if pcs:
            new.update(pcs)
        return VineSpec(self.A.copy(), new, self.discrete, self.names)

    @classmethod
    def from_matrices(cls, A, F, P, discrete=None, names=None):
        """Build from full d x d family and parameter matrices (None off the upper triangle)."""
        A = np.asarray(A, dtype=int)
        d = A.shape[0]
        pcs = {}
        for j in range(d):
            for l in range(j):
                pcs[(l, j)] = Bicop(F[l][j], _parse_par(P[l][j]))
        return cls(A, pcs, discrete, names)

    @classmethod
    def from_rows(cls, A_rows, F_rows, P_rows, discrete=None, names=None):
        """Build from the compact upper-triangular row listing.

        ``A_rows[i]`` lists row i from column i onwards; ``F_rows[i]`` and
        ``P_rows[i]`` list row i from column i + 1 onwards.
        """
        d = len(A_rows)
        A = np.zeros((d, d), dtype=int)
        F = [[None] * d for _ in range(d)]
        P = [[None] * d for _ in range(d)]
        for i, row in enumerate(A_rows):
            A[i, i:] = row
        for i, (frow, prow) in enumerate(zip(F_rows, P_rows)):
            for k, (f, p) in enumerate(zip(frow, prow)):
                F[i][i + 1 + k] = f
                P[i][i + 1 + k] = p
        return cls.from_matrices(A, F, P, discrete, names)

    def family_matrix(self):
        d = self.d
        return [[self.pcs[(l, j)].family if l < j else None for j in range(d)] for l in range(d)]

    def param_matrix(self):
        d = self.d
        return [[list(self.pcs[(l, j)].params) if l < j else None for j in range(d)] for l in range(d)]

    def to_dict(self):
        return {"schema": SCHEMA_VINE, "d": self.d, "A": self.A.tolist(),
                "F": self.family_matrix(), "P": self.param_matrix(),
                "discrete": list(self.discrete), "names": self.names}

    @classmethod
    def from_dict(cls, doc):
        return cls.from_matrices(doc["A"], doc["F"], doc["P"], doc.get("discrete"), doc.get("names"))

    def to_json(self, path=None):
        text = dumps_matrix_json(self.to_dict())
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_json(cls, path_or_text):
        text = path_or_text
        if not str(path_or_text).lstrip().startswith("{"):
            with open(path_or_text) as fh:
                text = fh.read()
        return cls.from_dict(json.loads(text))

    def workspace(self):
        if self._ws is None:
            self._ws = _Workspace(self)
        return self._ws


def dumps_matrix_json(doc, indent=2):
    """JSON text with each matrix row on one line for eyeball diffs."""
    def enc(obj, level):
        pad = " " * (indent * level)
        if isinstance(obj, dict):
            items = [f'{pad}{" " * indent}{json.dumps(k)}: {enc(v, level + 1).lstrip()}' for k, v in obj.items()]
            return pad + "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(obj, list) and obj and all(isinstance(r, list) for r in obj):
            rows = [pad + " " * indent + json.dumps(r) for r in obj]
            return pad + "[\n" + ",\n".join(rows) + "\n" + pad + "]"
        return pad + json.dumps(obj)
    return enc(doc, 0) + "\n"


class _Workspace:
    """Natural-order relabeling and the derived M / needed-prime structures."""

    def __init__(self, spec):
        self.nat, self.order = natural_order(spec.A)
        self.d = spec.d
        self.M = max_array(self.nat)
        self.need = prime_needed(self.nat, self.M)
        self.discrete = [spec.discrete[lab - 1] for lab in self.order]
        self.cop = {k: v for k, v in spec.pcs.items()}

    def to_natural(self, upairs):
        """Reorder per-label u-score pairs into natural order."""
        return [upairs[lab - 1] for lab in self.order]


# ---------------------------------------------------------------- column recursion

def _s_input(ws, U, V, Vp, l, j):
    if l == 0:
        return U[ws.nat[0, j]]
    m = ws.M[l, j]
    return V[m][l] if ws.nat[l, j] == m else Vp[m][l - 1]


def _edge_step(cop, s, w, need_prime):
    if cop.family == "I":
        return w, (s if need_prime else None)
    v = cond_given_first(cop, s, w)
    vp = cond_given_second(cop, s, w) if need_prime else None
    return v, vp


def column_forward(ws, j, U, V, Vp, density=True, choose=None, levels=None):
    """Run column ``j`` (natural index) through its edges.

    Fills ``V[j]`` (list: level -> conditional of variable j) and ``Vp[j]``
    (dict: level -> prime value) and returns per-observation log densities.
    ``choose(l, j, s, w)``, when given, returns the copula for edge (l, j)
    and may fit it on the fly.
    """
    V[j] = [U[j]]
    Vp[j] = {}
    total = 0.0
    nlev = j if levels is None else min(levels, j)
    for l in range(nlev):
        s = _s_input(ws, U, V, Vp, l, j)
        w = V[j][l]
        cop = ws.cop[(l, j)] if choose is None else choose(l, j, s, w)
        if choose is not None:
            ws.cop[(l, j)] = cop
        if density and cop.family != "I":
            total = total + mixed_logpdf(cop, s, w)
        v, vp = _edge_step(cop, s, w, (j, l) in ws.need)
        V[j].append(v)
        if vp is not None:
            Vp[j][l] = vp
    return total


def predictor_pass(ws, U, density=True):
    """Columns 0..d-2; returns (V, Vp, per-observation predictor log density)."""
    d = ws.d
    V, Vp = [None] * d, [None] * d
    total = np.zeros(len(U[0]))
    for j in range(d - 1):
        total = total + column_forward(ws, j, U, V, Vp, density=density)
    return V, Vp, total


def response_inputs(ws, U, V, Vp):
    """The first-argument inputs s_l of every response edge, which depend only on predictors."""
    j = ws.d - 1
    V[j] = None
    return [_s_input(ws, U, V, Vp, l, j) for l in range(j)]


def response_terms(cops, s_list, uy, status):
    """Per-observation response-edge contributions.

    Uncensored subjects add every response-edge density; censored subjects
    add only the terminal log[1 - F(y | all predictors)] at the last level.
    """
    status = np.asarray(status)
    ev = status == 1
    uy = np.clip(np.asarray(uy, dtype=float), EPS, 1.0 - EPS)
    w = UScorePair(uy, uy, False)
    out = np.zeros(uy.size)
    L = len(cops)
    for l, (cop, s) in enumerate(zip(cops, s_list)):
        last = l == L - 1
        if cop.family != "I":
            if np.any(ev):
                out[ev] += mixed_logpdf(cop, s.take(ev), w.take(ev))
        v = cond_given_first(cop, s, w) if cop.family != "I" else w
        if last and np.any(~ev):
            cen = ~ev
            if s.discrete or cop.family == "I":
                surv = 1.0 - v.plus[cen]
            else:
                surv = hfunc1_sf(cop, np.clip(s.plus[cen], EPS, 1 - EPS), np.clip(w.plus[cen], EPS, 1 - EPS))
            out[cen] += np.log(np.maximum(surv, 1e-300))
        w = v
    return out


def _warn_floor(terms):
    k = int(np.sum(terms <= LOG_FLOOR + 1e-9))
    if k:
        warnings.warn(f"{k} log-likelihood term(s) floored at log(1e-300)", UnderflowWarning, stacklevel=3)


def loglik_terms(spec, upairs, status):
    """Per-observation censored vine log-likelihood (copula scale).

    Parameters
    ----------
    spec : VineSpec
        The response must be the variable at (d, d).
    upairs : list of UScorePair
        One per variable label (index ``label - 1``).
    status : array_like
        Event indicators for the response.
    """
    ws = spec.workspace()
    U = ws.to_natural(upairs)
    if U[-1].discrete:
        raise ValueError("the response must be continuous")
    status = np.asarray(status).astype(int)
    V, Vp, pred = predictor_pass(ws, U)
    s_list = response_inputs(ws, U, V, Vp)
    j = ws.d - 1
    cops = [ws.cop[(l, j)] for l in range(j)]
    terms = pred + response_terms(cops, s_list, U[-1].plus, status)
    _warn_floor(terms)
    return terms


def loglik_censored(spec, upairs, status):
    return float(np.sum(loglik_terms(spec, upairs, status)))


# ---------------------------------------------------------------- prediction

class ResponseConditional:
    """Precomputed predictor inputs for evaluating pi(u | x) on many u."""

    def __init__(self, spec, upairs_pred):
        """``upairs_pred``: pairs for all labels; the response slot is ignored."""
        ws = spec.workspace()
        n = len(next(p for p in upairs_pred if p is not None))
        up = list(upairs_pred)
        resp = spec.response - 1
        up[resp] = UScorePair(np.full(n, 0.5))
        U = ws.to_natural(up)
        V, Vp, _ = predictor_pass(ws, U, density=False)
        self.s_list = response_inputs(ws, U, V, Vp)
        j = ws.d - 1
        self.cops = [ws.cop[(l, j)] for l in range(j)]
        self.n = n

    def cdf(self, u, rows=None):
        """pi(u | x) for each row (u broadcast against rows)."""
        s_list = self.s_list if rows is None else [s.take(rows) for s in self.s_list]
        n = len(s_list[0]) if s_list else self.n
        u = np.broadcast_to(np.clip(np.asarray(u, dtype=float), EPS, 1.0 - EPS), (n,)).copy()
        w = UScorePair(u, u, False)
        for cop, s in zip(self.cops, s_list):
            if cop.family != "I":
                w = cond_given_first(cop, s, w)
        return w.plus

    def quantile(self, q, tol=1e-9, maxiter=200):
        """Solve pi(u | x) = q by bisection on (1e-10, 1 - 1e-10) for every row."""
        q = np.broadcast_to(np.asarray(q, dtype=float), (self.n,)).copy()
        if np.any((q <= 0) | (q >= 1)):
            raise ValueError("quantile levels must lie in (0, 1)")
        lo = np.full(self.n, EPS)
        hi = np.full(self.n, 1.0 - EPS)
        flo, fhi = self.cdf(lo), self.cdf(hi)
        bad = (flo > q + tol) | (fhi < q - tol)
        if np.any(bad):
            raise QuantileBracketError(f"{int(bad.sum())} row(s): pi does not bracket q")
        mid = 0.5 * (lo + hi)
        active = np.ones(self.n, dtype=bool)
        for _ in range(maxiter):
            idx = np.nonzero(active)[0]
            if idx.size == 0:
                break
            mid[idx] = 0.5 * (lo[idx] + hi[idx])
            f = self.cdf(mid[idx], rows=idx)
            below = f < q[idx]
            lo[idx] = np.where(below, mid[idx], lo[idx])
            hi[idx] = np.where(below, hi[idx], mid[idx])
            done = (np.abs(f - q[idx]) <= tol) | (hi[idx] - lo[idx] < 1e-15)
            active[idx[done]] = False
        return mid


def conditional_cdf(spec, upairs_pred, u):
    return ResponseConditional(spec, upairs_pred).cdf(u)


def conditional_quantile(spec, upairs_pred, q, response_margin=None):
    """Conditional q-quantile of the response; on the u scale unless a margin is given."""
    u = ResponseConditional(spec, upairs_pred).quantile(q)
    return u if response_margin is None else response_margin.ppf(u)


# ---------------------------------------------------------------- simulation

def _invert_edge(cop, s, target):
    """w with cond_given_first(cop, s, w) = target (elementwise)."""
    if cop.family == "I":
        return target
    fam = _kernel(cop)
    if not s.discrete:
        return np.clip(fam[3](cop.params, np.clip(s.plus, EPS, 1 - EPS), np.clip(target, EPS, 1 - EPS)),
                       EPS, 1.0 - EPS)
    # safeguarded Newton on the rectangle cdf; its w-derivative is a difference of h-functions
    # (every family here is exchangeable, so dC(s, w)/dw = h(w, s))
    sp, sm = np.clip(s.plus, EPS, 1 - EPS), np.clip(s.minus, EPS, 1 - EPS)
    den = np.maximum(sp - sm, 1e-300)
    lo = np.full(target.shape, EPS)
    hi = np.full(target.shape, 1.0 - EPS)
    w = np.clip(target, EPS, 1 - EPS)
    idx = np.arange(target.size)
    for _ in range(60):
        a, b, x, t = sp[idx], sm[idx], w[idx], target[idx]
        f = (fam[0](cop.params, a, x) - fam[0](cop.params, b, x)) / den[idx] - t
        done = np.abs(f) <= 1e-12
        lo[idx] = np.where(f < 0, x, lo[idx])
        hi[idx] = np.where(f < 0, hi[idx], x)
        g = (fam[2](cop.params, x, a) - fam[2](cop.params, x, b)) / den[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            step = x - f / g
        ok = np.isfinite(step) & (step > lo[idx]) & (step < hi[idx])
        w[idx] = np.where(ok, step, 0.5 * (lo[idx] + hi[idx]))
        done |= hi[idx] - lo[idx] < 1e-15
        w[idx[done]] = x[done]
        idx = idx[~done]
        if idx.size == 0:
            break
    return w


@dataclass
class Discretization:
    """Cutpoints on the latent scale and the value taken in each category."""

    cutpoints: tuple
    values: tuple

    def __post_init__(self):
        c = np.asarray(self.cutpoints, dtype=float)
        if c.ndim != 1 or np.any(np.diff(c) <= 0):
            raise ValueError("cutpoints must be strictly increasing")
        if len(self.values) != c.size + 1:
            raise ValueError("need one value per category (len(cutpoints) + 1)")


def simulate(spec, n, seed=None, margins=None, discretization=None, return_u=False):
    """Draw n observations from a vine with continuous and discrete variables.

    Parameters
    ----------
    spec : VineSpec
    n : int
    seed : int or numpy Generator
    margins : list, optional
        Per label, an object with ``cdf``/``ppf`` (latent margin for discrete
        variables).  Defaults to uniform margins.
    discretization : dict, optional
        ``{label: Discretization}`` for every discrete variable.

    Returns
    -------
    X : (n, d) array in label order (and the u-score pairs if ``return_u``)
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    discretization = discretization or {}
    ws = spec.workspace()
    d = ws.d
    for lab in range(1, d + 1):
        if spec.discrete[lab - 1] and lab not in discretization:
            raise ValueError(f"discrete variable {lab} needs a discretization")
    P = rng.uniform(size=(n, d))     # column = natural index
    U = [None] * d
    V, Vp = [None] * d, [None] * d
    X = np.empty((n, d))
    for j in range(d):
        lab = ws.order[j]
        w = P[:, lab - 1].copy()
        for l in range(j - 1, -1, -1):
            s = _s_input(ws, U, V, Vp, l, j)
            w = _invert_edge(ws.cop[(l, j)], s, w)
        marg = None if margins is None else margins[lab - 1]
        if spec.discrete[lab - 1]:
            disc = discretization[lab]
            cut = np.asarray(disc.cutpoints, dtype=float)
            cum = cut if marg is None else np.asarray(marg.cdf(cut), dtype=float)
            cum = np.concatenate([[0.0], cum, [1.0]])
            k = np.clip(np.searchsorted(cum, w, side="right") - 1, 0, cut.size)
            U[j] = UScorePair(np.clip(cum[k + 1], EPS, 1 - EPS), np.clip(cum[k], 0.0, 1 - EPS), True)
            X[:, lab - 1] = np.asarray(disc.values, dtype=float)[k]
        else:
            U[j] = UScorePair(w, w, False)
            X[:, lab - 1] = w if marg is None else marg.ppf(w)
        column_forward(ws, j, U, V, Vp, density=False)
    if return_u:
        return X, [U[ws.order.index(lab)] for lab in range(1, d + 1)]
    return X


# ---------------------------------------------------------------- density oracle

def density_uncensored(spec, u):
    """Log copula density of a continuous vine by direct set recursion.

    Evaluates every edge density at conditional distributions obtained from a
    memoized recursion F(v | S) over conditioning sets, looking edges up by
    their (conditioned pair, conditioning set).  Independent of the array
    walk used by :func:`loglik_terms`; used as its oracle.

    Parameters
    ----------
    u : (n, d) array of u-scores in label order
    """
    if any(spec.discrete):
        raise ValueError("the set-recursion oracle covers continuous vines only")
    u = np.atleast_2d(np.asarray(u, dtype=float))
    d = spec.d
    edges = {}
    for j in range(d):
        for l in range(j):
            a, b, cond = spec.edge_vars(l, j)
            edges[(frozenset((a, b)), frozenset(cond))] = (a, b, spec.pcs[(l, j)])
    memo = {}

    def F(v, S):
        key = (v, S)
        if key in memo:
            return memo[key]
        if not S:
            val = u[:, v - 1]
        else:
            for w in sorted(S):
                rest = S - {w}
                e = edges.get((frozenset((v, w)), rest))
                if e is None:
                    continue
                a, b, cop = e
                fv, fw = F(v, rest), F(w, rest)
                val = cop.hfunc2(fv, fw) if a == v else cop.hfunc1(fw, fv)
                break
            else:
                raise VineArrayError(f"no edge gives F({v} | {sorted(S)})")
        memo[key] = val
        return val

    total = np.zeros(u.shape[0])
    for (pair, cond), (a, b, cop) in edges.items():
        total += cop.logpdf(F(a, cond), F(b, cond))
    return total


# ---------------------------------------------------------------- construction

def admissible_next(nat, j, prefix):
    """Natural labels x that can follow ``prefix`` in column j.

    ``nat`` holds the finished columns 0..j-1 (natural order).  The new set
    prefix + {x} must equal {a_0k..a_(l-1)k, k} for some earlier column k >= l,
    with l = len(prefix).
    """
    l = len(prefix)
    if l == 0:
        return list(range(j))
    pre = set(prefix)
    out = []
    for k in range(l, j):
        cand = set(int(v) for v in nat[:l, k]) | {k}
        extra = cand - pre
        if len(extra) == 1 and pre <= cand:
            x = extra.pop()
            if x not in out:
                out.append(x)
    return sorted(out)


def build_columns(d, choose, max_backtrack=10000):
    """Build a natural-order array column by column.

    ``choose(j, prefix, candidates)`` returns the candidates ranked by
    preference; depth-first search backtracks when a column dead-ends.
    """
    nat = -np.ones((d, d), dtype=int)
    for j in range(d):
        nat[j, j] = j
    budget = [max_backtrack]

    def fill(j, prefix):
        if len(prefix) == j:
            return prefix
        cands = admissible_next(nat, j, prefix)
        for x in choose(j, list(prefix), cands):
            budget[0] -= 1
            if budget[0] < 0:
                raise VineArrayError("column construction exceeded its search budget")
            got = fill(j, prefix + [x])
            if got is not None:
                return got
        return None

    for j in range(1, d):
        col = fill(j, [])
        if col is None:
            raise VineArrayError(f"no admissible column {j + 1}")
        nat[:j, j] = col
    return nat


def natural_to_labels(nat, order):
    """Map a natural-order array back to 1-based labels ``order[j]``."""
    d = nat.shape[0]
    A = np.zeros((d, d), dtype=int)
    for j in range(d):
        for l in range(j + 1):
            A[l, j] = order[nat[l, j]]
    return A


def random_array(d, rng=None):
    """A random valid vine array with a random diagonal (1-based labels)."""
    rng = np.random.default_rng(rng)
    nat = build_columns(d, lambda j, prefix, c: list(rng.permutation(c)) if c else [])
    order = [int(x) + 1 for x in rng.permutation(d)]
    return natural_to_labels(nat, order)


def load_structure(name="pbc"):
    """Packaged vine structure (array, families, variable names) without parameters.

    Returns the parsed document with ``A`` as an int array; the array is
    validated with the last variable as the response.
    """
    from importlib import resources
    text = resources.files("vinesurv").joinpath("data", f"{name}_structure.json").read_text()
    doc = json.loads(text)
    doc["A"] = np.asarray(doc["A"], dtype=int)
    validate(doc["A"], response=doc["A"].shape[0])
    return doc


def spec_from_structure(doc, tau=0.3):
    """VineSpec on a packaged structure with every edge set to Kendall's ``tau``."""
    from .bicop import tau_to_par
    d = doc["A"].shape[0]
    F = doc["F"]
    P = [[tau_to_par(F[l][j], tau) if l < j else None for j in range(d)] for l in range(d)]
    return VineSpec.from_matrices(doc["A"], F, P, doc.get("discrete"), doc.get("names"))
