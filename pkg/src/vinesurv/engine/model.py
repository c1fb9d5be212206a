"""Fitted-model orchestration and the versioned JSON model document."""
import json
import time
import warnings

import numpy as np

from ..assoc import build_R
from ..baselines import AftModel, CoxModel, fit_aft, fit_cox
from ..bicop import DEFAULT_CANDIDATES, EPS
from ..margins import (RESPONSE_CANDIDATES, MarginFitError, MarginSpec, UScorePair, fit_margin,
                       fit_response_margin)
from ..select import select_predictor_edges, select_response_edges, select_structure
from ..vine import ResponseConditional, VineSpec, dumps_matrix_json, loglik_terms
from .data import Config, Preprocessor

SCHEMA_MODEL = "vinesurv.model/1"
METHODS = ("vine", "aft", "cox")
REAL_CANDIDATES = ("normal", "skew-normal")
POSITIVE_CANDIDATES = ("normal", "lognormal", "exponential", "weibull", "generalized-gamma")


class StageError(RuntimeError):
    """A pipeline failure tagged with the stage that raised it."""

    def __init__(self, stage, err):
        super().__init__(f"[{stage}] {type(err).__name__}: {err}")
        self.stage = stage
        self.__cause__ = err


def fit_predictor_margin(x, scale="continuous", margin="auto"):
    """Margin for one predictor; ``auto`` ranks parametric candidates by AIC."""
    if scale == "discrete":
        return fit_margin(x, family="empirical-discrete"), {}
    if margin == "empirical":
        return fit_margin(x, family="empirical-continuous"), {}
    if margin != "auto":
        return fit_margin(x, family=margin), {}
    cands = POSITIVE_CANDIDATES if np.all(x > 0) else REAL_CANDIDATES
    fits, tried = [], {}
    for fam in cands:
        try:
            f = fit_margin(x, family=fam)
        except (MarginFitError, ValueError) as err:
            tried[fam] = {"error": str(err)[:200]}
            continue
        fits.append(f)
        tried[fam] = {"loglik": f.loglik, "aic": f.aic}
    if not fits:
        return fit_margin(x, family="empirical-continuous"), tried
    return min(fits, key=lambda m: m.aic), tried


def flip_pair(p):
    """u' = 1 - u; a discrete pair (u+, u-) becomes (1 - u-, 1 - u+)."""
    if not p.discrete:
        u = 1.0 - p.plus
        return UScorePair(u, u, False)
    plus = np.clip(1.0 - p.minus, EPS, 1.0 - EPS)
    minus = np.clip(1.0 - p.plus, 0.0, None)
    return UScorePair(plus, np.minimum(minus, plus - EPS), True)


class FittedModel:
    """Preprocessing plus one of: vine copula regression, Weibull AFT, Cox.

    Every kind exposes ``cdf(y, X)`` and ``quantile(X, q)`` on raw
    (untransformed) covariates so the metrics module can impute from any
    of them.
    """

    def __init__(self, kind, names, discrete, preprocess, margins=None, response_margin=None,
                 flips=None, spec=None, baseline=None, options=None, report=None, config=None):
        if kind not in METHODS:
            raise ValueError(f"unknown model kind {kind!r}")
        self.kind = kind
        self.names = list(names)
        self.discrete = [bool(x) for x in discrete]
        self.preprocess = preprocess
        self.margins = margins
        self.response_margin = response_margin
        self.flips = None if flips is None else np.asarray(flips, dtype=bool)
        self.spec = spec
        self.baseline = baseline
        self.options = options or {}
        self.report = report or {}
        self.config = config

    @property
    def p(self):
        return len(self.names)

    # ------------------------------------------------------------ scores
    def predictor_pairs(self, X, Xp=None):
        """Per-label u-score pairs for the predictors (flips applied) plus a response slot."""
        if Xp is None:
            Xp = self.preprocess.transform(np.atleast_2d(np.asarray(X, dtype=float)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            pairs = [m.pit(Xp[:, j]) for j, m in enumerate(self.margins)]
        pairs = [flip_pair(u) if f else u for u, f in zip(pairs, self.flips)]
        return pairs + [None]

    def conditional(self, X):
        return ResponseConditional(self.spec, self.predictor_pairs(X))

    # ------------------------------------------------------------ distribution
    def cdf(self, y, X):
        """F(y | x) row-wise; y broadcast against the rows of X."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.broadcast_to(np.asarray(y, dtype=float), (X.shape[0],))
        if self.kind != "vine":
            return self.baseline.cdf(y, self.preprocess.transform(X))
        u = np.clip(self.response_margin.cdf(y), EPS, 1.0 - EPS)
        return self.conditional(X).cdf(u)

    def quantile(self, X, q):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        q = np.broadcast_to(np.asarray(q, dtype=float), (X.shape[0],))
        if self.kind != "vine":
            return self.baseline.quantile(self.preprocess.transform(X), q)
        return self.response_margin.ppf(self.conditional(X).quantile(q))

    def predict(self, X, quantiles=(0.5,)):
        """{q: per-row conditional q-quantile}."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind != "vine":
            return {q: self.quantile(X, q) for q in quantiles}
        rc = self.conditional(X)
        return {q: self.response_margin.ppf(rc.quantile(q)) for q in quantiles}

    def survival(self, y, X):
        return 1.0 - self.cdf(y, X)

    # ------------------------------------------------------------ persistence
    def to_dict(self):
        doc = {"schema": SCHEMA_MODEL, "kind": self.kind, "names": self.names,
               "discrete": self.discrete, "preprocess": self.preprocess.to_dict(),
               "options": self.options}
        if self.config is not None:
            doc["config"] = self.config.to_dict()
        if self.kind == "vine":
            doc["margins"] = [m.to_dict() for m in self.margins]
            doc["response_margin"] = self.response_margin.to_dict()
            doc["flips"] = [bool(f) for f in self.flips]
            doc["vine"] = self.spec.to_dict()
        else:
            doc["baseline"] = self.baseline.to_dict()
        doc["report"] = self.report
        return doc

    def to_json(self, path=None):
        text = dumps_matrix_json(_jsonable(self.to_dict()))
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, doc):
        if doc.get("schema") != SCHEMA_MODEL:
            raise ValueError(f"unsupported model schema {doc.get('schema')!r} (expected {SCHEMA_MODEL})")
        kind = doc["kind"]
        pre = Preprocessor.from_dict(doc["preprocess"])
        cfg = Config.from_dict(doc["config"]) if doc.get("config") else None
        if kind == "vine":
            return cls(kind, doc["names"], doc["discrete"], pre,
                       [MarginSpec.from_dict(m) for m in doc["margins"]],
                       MarginSpec.from_dict(doc["response_margin"]), doc["flips"],
                       VineSpec.from_dict(doc["vine"]), None, doc.get("options"), doc.get("report"), cfg)
        base = (AftModel if kind == "aft" else CoxModel).from_dict(doc["baseline"])
        return cls(kind, doc["names"], doc["discrete"], pre, baseline=base,
                   options=doc.get("options"), report=doc.get("report"), config=cfg)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except StageError:
        raise
    except Exception as err:          # noqa: BLE001 - re-raised with the stage tag
        raise StageError(name, err) from err


def fit_model(dataset, method="vine", criterion="aic", candidates=DEFAULT_CANDIDATES,
              response_margin="auto", reoptimize="every", margins=None):
    """Fit one model on a :class:`Dataset`.

    Parameters
    ----------
    method : {"vine", "aft", "cox"}
    response_margin : str
        Family name or ``auto`` (censored AIC over the default candidates).
    margins : list, optional
        Per-predictor margin override (family name, ``auto`` or ``empirical``);
        defaults to the config's ``margin`` entries.

    Returns
    -------
    (FittedModel, trace dict)
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    cfg = dataset.config
    preds = cfg.predictors if cfg is not None else None
    transforms = [list(c.transforms) for c in preds] if preds else [[] for _ in dataset.names]
    pre = _stage("preprocess", Preprocessor(transforms).fit, dataset.X)
    Xp = pre.transform(dataset.X)
    times, status = dataset.times, dataset.status
    options = {"method": method, "criterion": criterion, "candidates": list(candidates),
               "reoptimize": reoptimize}
    trace = {"method": method, "n": int(dataset.n), "censoring_rate": float(1 - status.mean())}
    t0 = time.perf_counter()
    if method in ("aft", "cox"):
        fit = fit_aft if method == "aft" else fit_cox
        base = _stage(method, fit, Xp, times, status)
        trace["baseline"] = base.to_dict()
        trace["seconds"] = time.perf_counter() - t0
        report = {"seconds": trace["seconds"]}
        return FittedModel(method, dataset.names, dataset.discrete, pre, baseline=base,
                           options=options, report=report, config=cfg), trace

    p = Xp.shape[1]
    if margins is None:
        margins = [c.margin for c in preds] if preds else ["auto"] * p
    mfits, mtrace = [], []
    for j in range(p):
        scale = "discrete" if dataset.discrete[j] else "continuous"
        m, tried = _stage(f"margin:{dataset.names[j]}", fit_predictor_margin, Xp[:, j], scale, margins[j])
        mfits.append(m)
        mtrace.append({"name": dataset.names[j], "family": m.family, "params": list(m.params),
                       "tried": tried})
    rm_choice = response_margin
    if rm_choice == "auto" and cfg is not None and cfg.time_column.margin != "auto":
        rm_choice = cfg.time_column.margin
    if rm_choice == "auto":
        rmarg, rfits = _stage("margin:response", fit_response_margin, times, status)
        rtried = {f.family: {"loglik": f.loglik, "aic": f.aic} for f in rfits}
    else:
        rmarg = _stage("margin:response", fit_margin, times, status, rm_choice)
        rtried = {rm_choice: {"loglik": rmarg.loglik, "aic": rmarg.aic}}
    trace["margins"] = mtrace
    trace["response_margin"] = {"family": rmarg.family, "params": list(rmarg.params), "tried": rtried}

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        pairs = [m.pit(Xp[:, j]) for j, m in enumerate(mfits)]
        ypair = rmarg.pit(times)
    forced = pre.forced_flips()
    pairs = [flip_pair(u) if f else u for u, f in zip(pairs, forced)]
    # orientation is estimated on the (possibly force-flipped) scores
    cm = _stage("assoc", build_R, np.column_stack([np.where(f, -x, x) for x, f in zip(Xp.T, forced)]),
                dataset.discrete, times, status)
    flips = cm.flips ^ forced
    pairs = [flip_pair(u) if f else u for u, f in zip(pairs, cm.flips)]
    upairs = pairs + [ypair]
    trace["correlation"] = cm.to_dict()
    trace["flips"] = [bool(f) for f in flips]

    A = _stage("structure", select_structure, cm.R)
    disc = list(dataset.discrete) + [False]
    spec, etrace = _stage("predictor-edges", select_predictor_edges, A, upairs, disc, candidates, criterion)
    spec, rtrace = _stage("response-edges", select_response_edges, spec, upairs, status, candidates,
                          criterion, reoptimize)
    names = list(dataset.names) + [cfg.time_column.name if cfg is not None else "time"]
    spec.names = names
    terms = loglik_terms(spec, upairs, status)
    trace["structure"] = {"A": spec.A.tolist()}
    trace["predictor_edges"] = etrace
    trace["response_edges"] = rtrace
    trace["vine"] = spec.to_dict()
    trace["copula_loglik"] = float(np.sum(terms))
    trace["seconds"] = time.perf_counter() - t0
    report = {"copula_loglik": trace["copula_loglik"], "seconds": trace["seconds"],
              "n": int(dataset.n)}
    model = FittedModel("vine", dataset.names, dataset.discrete, pre, mfits, rmarg, flips, spec,
                        options=options, report=report, config=cfg)
    return model, trace


def dump_trace(trace, path):
    with open(path, "w") as fh:
        json.dump(_jsonable(trace), fh, indent=1)
        fh.write("\n")
