"""Benchmark, evaluation, cumulative-hazard diagnostic and quantile sweeps."""
import csv
import time
import traceback
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy import special

from ..baselines import cumhaz_grid
from ..metrics import metrics_mi
from .data import ColumnSpec, Config, Dataset
from .model import fit_model
from .scenarios import SCENARIOS, simulate_scenario, truth_model

METRIC_FIELDS = ("mae", "rmse", "is_alpha", "mae_mi", "rmse_mi", "is_mi", "c_index")


def scenario_config(sd):
    cols = [ColumnSpec(n, scale="discrete" if d else "continuous") for n, d in zip(sd.names, sd.discrete)]
    cols += [ColumnSpec("time", "response-time"), ColumnSpec("status", "status")]
    return Config(cols)


def train_dataset(sd):
    return Dataset(list(sd.names), sd.X_train, sd.times_train, sd.status_train, list(sd.discrete),
                   scenario_config(sd))


def interval_levels(alpha):
    return (alpha / 2.0, 0.5, 1.0 - alpha / 2.0)


def evaluate(model, X, times, status, alpha=0.5, m=100, seed=0, imputation=None, truth=None):
    """Score a fitted model's median and central (1 - alpha) interval on a test set."""
    lo, med, hi = interval_levels(alpha)
    pred = model.predict(X, (lo, med, hi))
    imp = model if imputation is None else imputation
    return metrics_mi(imp, X, times, status, pred[med], pred[lo], pred[hi], alpha, m, seed, truth,
                      imputation_model=imp.kind)


def run_replicate(key, censoring, replicate, seed=0, methods=("vine", "aft"), n_train=1000,
                  n_test=1000, m=100, alpha=0.5, criterion="aic"):
    """One simulated dataset: fit every method and score it.  Returns a list of row dicts."""
    sc = SCENARIOS[key]
    sd = simulate_scenario(key, censoring, seed, n_train, n_test, replicate)
    ds = train_dataset(sd)
    rm = "generalized-gamma" if sc.response_margin == "generalized-gamma" else "auto"
    fitted, rows, errors = {}, [], {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for meth in methods:
            t0 = time.perf_counter()
            try:
                fitted[meth] = (fit_model(ds, meth, criterion=criterion, response_margin=rm)[0],
                                time.perf_counter() - t0)
            except Exception as err:                    # noqa: BLE001 - recorded per row
                errors[meth] = f"{type(err).__name__}: {err}"
        imp_key = sc.imputation if sc.imputation in fitted else None
        imputation = fitted[imp_key][0] if imp_key else None
        mi_seed = int(np.random.SeedSequence([seed, replicate, 7]).generate_state(1)[0])
        for meth in methods:
            base = {"scenario": key, "censoring": censoring, "replicate": replicate, "method": meth,
                    "achieved_censoring": sd.achieved_censoring, "n_train": n_train, "n_test": n_test,
                    "m": m, "alpha": alpha, "imputation": imp_key or ""}
            if meth not in fitted:
                rows.append({**base, "error": errors[meth]})
                continue
            model, secs = fitted[meth]
            try:
                t0 = time.perf_counter()
                rep = evaluate(model, sd.X_test, sd.times_test, sd.status_test, alpha, m, mi_seed,
                               imputation or model, sd.true_test)
                base.update({f: getattr(rep, f) for f in METRIC_FIELDS})
                base.update({"fit_seconds": secs, "eval_seconds": time.perf_counter() - t0, "error": ""})
            except Exception as err:                    # noqa: BLE001
                base["error"] = f"{type(err).__name__}: {err}"
            rows.append(base)
    return rows


def _run_job(args):
    try:
        return run_replicate(*args[:3], **args[3])
    except Exception:                                   # noqa: BLE001
        key, cens, rep = args[:3]
        return [{"scenario": key, "censoring": cens, "replicate": rep, "method": "*",
                 "error": traceback.format_exc(limit=3)}]


def summarize(rows):
    """Mean of each metric per (scenario, censoring, method) over successful replicates."""
    groups = {}
    for r in rows:
        if r.get("error"):
            continue
        groups.setdefault((r["scenario"], r["censoring"], r["method"]), []).append(r)
    out = []
    for (key, cens, meth), rs in sorted(groups.items()):
        row = {"scenario": key, "censoring": cens, "replicate": "mean", "method": meth,
               "n_replicates": len(rs)}
        for f in METRIC_FIELDS + ("achieved_censoring", "fit_seconds"):
            row[f] = float(np.mean([r[f] for r in rs]))
        out.append(row)
    return out


def benchmark(scenarios=("B", "D"), censorings=(0.2, 0.5, 0.8), replicates=20, seed=0,
              methods=("vine", "aft"), n_train=1000, n_test=1000, m=100, alpha=0.5, criterion="aic",
              workers=1, out=None):
    """Run every method over replicated simulated datasets and average the metrics.

    Each replicate draws its own stream from (scenario, censoring,
    replicate, seed), so results do not depend on scheduling or
    ``workers``.  Returns (per-replicate rows, summary rows).
    """
    jobs = [(k, c, r, {"seed": seed, "methods": tuple(methods), "n_train": n_train, "n_test": n_test,
                       "m": m, "alpha": alpha, "criterion": criterion})
            for k in scenarios for c in censorings for r in range(replicates)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]
    rows = [r for res in results for r in res]
    rows.sort(key=lambda r: (r["scenario"], r["censoring"], r["replicate"], r["method"]))
    summary = summarize(rows)
    if out:
        write_rows(out, rows + summary)
    return rows, summary


def write_rows(path, rows):
    fields = []
    for r in rows:
        fields += [k for k in r if k not in fields]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        for r in rows:
            w.writerow(r)


# ---------------------------------------------------------------- diagnostics

def default_x_grid(levels=10):
    """Normal quantiles from the 5% to the 95% level."""
    return special.ndtri(np.linspace(0.05, 0.95, levels))


def diagnose(model, covariate, x_grid, y_grid, base_row, out=None, name=None):
    """Cumulative hazard H(y | x) over a covariate grid plus a crossing count."""
    grid = cumhaz_grid(model, base_row, covariate, x_grid, y_grid)
    if out:
        grid.to_csv(out, name or f"x{covariate + 1}")
    return grid


def model_a_diagnostic(seed=0, levels=10, n_y=60, out=None):
    """Crossing check on the generating Model A at random values of x2..x4."""
    model = truth_model("A")
    rng = np.random.default_rng(seed)
    base = rng.standard_normal(4)
    y_grid = -np.log1p(-np.linspace(0.01, 0.99, n_y))         # Exp(1) quantiles
    return diagnose(model, 0, default_x_grid(levels), y_grid, base, out, "x1"), base


def quantile_sweep(model, base_row, covariate, values, quantiles=(0.5,)):
    """Predicted quantiles as one covariate moves over ``values``; others fixed."""
    values = np.asarray(values, dtype=float)
    X = np.tile(np.asarray(base_row, dtype=float), (values.size, 1))
    X[:, covariate] = values
    pred = model.predict(X, tuple(quantiles))
    return values, {q: np.asarray(pred[q]) for q in quantiles}


def write_sweep(path, covariate_name, values, preds, extra=None):
    """Long-format CSV: one row per (model, covariate value, quantile level)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", covariate_name, "q", "prediction"])
        series = preds if extra is None else {**{("model", k): v for k, v in preds.items()}, **extra}
        for key, arr in series.items():
            label, q = key if isinstance(key, tuple) else ("model", key)
            for v, p in zip(values, arr):
                w.writerow([label, repr(float(v)), q, repr(float(p))])
