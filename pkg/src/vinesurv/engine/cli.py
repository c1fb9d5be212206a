"""Command-line entry point: ``vinesurv [global flags] <command> ...``."""
import argparse
import json
import os
import sys
import warnings

import numpy as np

from .data import Config, ingest, read_csv, write_csv
from .harness import (benchmark, default_x_grid, diagnose, evaluate, quantile_sweep, scenario_config,
                      write_sweep)
from .model import FittedModel, StageError, dump_trace, fit_model
from .scenarios import SCENARIOS, simulate_scenario, truth_model


def _floats(text):
    return [float(t) for t in str(text).split(",") if t.strip()]


def _settings(args):
    """Global flag values, falling back to the config file, then defaults."""
    extra = {}
    if args.config:
        extra = Config.load(args.config).to_dict()
    pick = lambda flag, key, default: flag if flag is not None else extra.get(key, default)  # noqa: E731
    return {"seed": int(pick(args.seed, "seed", 0)), "criterion": pick(args.criterion, "criterion", "aic"),
            "imputations": int(pick(args.imputations, "imputations", 100)),
            "alpha": float(pick(args.alpha, "alpha", 0.5))}


def _outdir(path):
    os.makedirs(path, exist_ok=True)
    return path


def cmd_fit(args, st):
    ds = ingest(args.data, args.config, seed=st["seed"])
    model, trace = fit_model(ds, args.method, criterion=st["criterion"], response_margin=args.response_margin,
                             reoptimize=args.reoptimize)
    out = _outdir(args.out)
    model.to_json(os.path.join(out, "model.json"))
    trace["audit"] = ds.audit
    dump_trace(trace, os.path.join(out, "trace.json"))
    print(f"wrote {os.path.join(out, 'model.json')} and trace.json "
          f"({model.kind}, {trace.get('seconds', 0):.1f}s)")


def _predictor_matrix(model, path):
    cfg = model.config or Config.infer(read_csv(path)[0])
    ds = ingest(path, cfg, require_response=False)
    return ds


def cmd_predict(args, st):
    model = FittedModel.load(args.model)
    ds = _predictor_matrix(model, args.data)
    qs = _floats(args.quantiles) if args.quantiles else [st["alpha"] / 2, 0.5, 1 - st["alpha"] / 2]
    pred = model.predict(ds.X, qs)
    names = ["row"] + [f"q{q:g}" for q in qs]
    write_csv(args.out, names, [np.arange(1, ds.n + 1)] + [pred[q] for q in qs])
    print(f"wrote {args.out} ({ds.n} rows)")


def cmd_simulate(args, st):
    sd = simulate_scenario(args.scenario, args.censoring, st["seed"], args.n_train, args.n_test,
                           args.replicate)
    out = _outdir(args.out)
    names = sd.names + ["time", "status", "true_time"]
    write_csv(os.path.join(out, "train.csv"), names,
              list(sd.X_train.T) + [sd.times_train, sd.status_train, sd.true_train])
    write_csv(os.path.join(out, "test.csv"), names,
              list(sd.X_test.T) + [sd.times_test, sd.status_test, sd.true_test])
    scenario_config(sd).dump(os.path.join(out, "config.yaml"))
    with open(os.path.join(out, "simulation.json"), "w") as fh:
        json.dump({"scenario": sd.scenario, "target_censoring": sd.censoring,
                   "achieved_censoring": sd.achieved_censoring, "censoring_rate_param": sd.censor_rate_param,
                   "seed": sd.seed, "replicate": args.replicate}, fh, indent=2)
    print(f"wrote train.csv, test.csv, config.yaml to {out} (censoring {sd.achieved_censoring:.3f})")


def cmd_evaluate(args, st):
    model = FittedModel.load(args.model)
    imp = FittedModel.load(args.imputation_model) if args.imputation_model else None
    ds = ingest(args.data, model.config, extra_columns=("true_time",))
    truth = ds.extra.get("true_time") if args.use_truth else None
    rep = evaluate(model, ds.X, ds.times, ds.status, st["alpha"], st["imputations"], st["seed"], imp, truth)
    rep.to_csv(args.out, {"model": args.model})
    if args.json:
        rep.to_json(args.json)
    print(rep.to_json())


def cmd_diagnose(args, st):
    if args.scenario:
        model = truth_model(args.scenario)
    else:
        model = FittedModel.load(args.model)
    names = model.names
    cov = names.index(args.covariate) if args.covariate in names else int(args.covariate) - 1
    if args.base:
        base = np.asarray(_floats(args.base))
    elif args.data:
        ds = ingest(args.data, model.config, require_response=False)
        base = ds.X[args.row - 1]
    else:
        base = np.random.default_rng(st["seed"]).standard_normal(len(names))
    x_grid = np.asarray(_floats(args.x_grid)) if args.x_grid else default_x_grid()
    if args.y_grid:
        y_grid = np.asarray(_floats(args.y_grid))
    elif model.kind == "vine":
        y_grid = model.response_margin.ppf(np.linspace(0.01, 0.99, 60))
    else:
        y_grid = model.quantile(np.atleast_2d(base), 0.5)[0] * np.linspace(0.05, 4.0, 60)
    grid = diagnose(model, cov, x_grid, y_grid, base, args.out, names[cov])
    print(f"wrote {args.out}: {grid.crossings} crossing pair(s) across {len(x_grid)} levels of {names[cov]}")


def cmd_sweep(args, st):
    model = FittedModel.load(args.model)
    ds = ingest(args.data, model.config, require_response=False)
    cov = model.names.index(args.covariate) if args.covariate in model.names else int(args.covariate) - 1
    levels = np.linspace(args.q_lo, args.q_hi, args.points)
    values = np.quantile(ds.X[:, cov], levels)
    qs = _floats(args.quantiles)
    series = {}
    for path in [args.model] + list(args.compare or []):
        m = model if path == args.model else FittedModel.load(path)
        _, pred = quantile_sweep(m, ds.X[args.row - 1], cov, values, qs)
        for q, v in pred.items():
            series[(path, q)] = v
    write_sweep(args.out, model.names[cov], values, series)
    print(f"wrote {args.out}")


def cmd_benchmark(args, st):
    rows, summary = benchmark(args.scenarios.split(","), _floats(args.censoring), args.replicates, st["seed"],
                              args.methods.split(","), args.n_train, args.n_test, st["imputations"],
                              st["alpha"], st["criterion"], args.workers, args.out)
    for r in summary:
        print(f"{r['scenario']} {r['censoring']:.1f} {r['method']:5s} MAE {r['mae']:.3f} RMSE {r['rmse']:.3f} "
              f"IS {r['is_alpha']:.3f} MAE-MI {r['mae_mi']:.3f} ({r['n_replicates']} reps)")
    bad = [r for r in rows if r.get("error")]
    if bad:
        print(f"{len(bad)} row(s) failed; see the error column of {args.out}", file=sys.stderr)


def build_parser():
    p = argparse.ArgumentParser(prog="vinesurv", description="Vine copula regression for censored survival data")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None, help="YAML column/run configuration")
    p.add_argument("--criterion", choices=("aic", "bic"), default=None)
    p.add_argument("--imputations", type=int, default=None, metavar="m")
    p.add_argument("--alpha", type=float, default=None)
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit a model to a CSV")
    f.add_argument("data")
    f.add_argument("--out", default=".")
    f.add_argument("--method", choices=("vine", "aft", "cox"), default="vine")
    f.add_argument("--response-margin", default="auto")
    f.add_argument("--reoptimize", choices=("every", "level"), default="every")
    f.set_defaults(fn=cmd_fit)

    pr = sub.add_parser("predict", help="per-row conditional quantiles")
    pr.add_argument("model")
    pr.add_argument("data")
    pr.add_argument("--quantiles", default=None, help="comma list; default alpha/2, 0.5, 1-alpha/2")
    pr.add_argument("--out", default="predictions.csv")
    pr.set_defaults(fn=cmd_predict)

    s = sub.add_parser("simulate", help="train/test CSVs from a simulation model")
    s.add_argument("--scenario", choices=sorted(SCENARIOS), required=True)
    s.add_argument("--censoring", type=float, default=0.2)
    s.add_argument("--n-train", type=int, default=1000)
    s.add_argument("--n-test", type=int, default=1000)
    s.add_argument("--replicate", type=int, default=0)
    s.add_argument("--out", default=".")
    s.set_defaults(fn=cmd_simulate)

    e = sub.add_parser("evaluate", help="MAE/RMSE/IS, their MI versions and the C-index")
    e.add_argument("model")
    e.add_argument("data")
    e.add_argument("--imputation-model", default=None)
    e.add_argument("--use-truth", action="store_true", help="score raw metrics against a true_time column")
    e.add_argument("--out", default="metrics.csv")
    e.add_argument("--json", default=None)
    e.set_defaults(fn=cmd_evaluate)

    d = sub.add_parser("diagnose", help="cumulative hazard over a covariate grid")
    g = d.add_mutually_exclusive_group(required=True)
    g.add_argument("--model")
    g.add_argument("--scenario", choices=[k for k, v in SCENARIOS.items() if v.kind == "vine"])
    d.add_argument("--covariate", default="1", help="name or 1-based index")
    d.add_argument("--data", default=None, help="CSV supplying the base row")
    d.add_argument("--row", type=int, default=1)
    d.add_argument("--base", default=None, help="comma list of covariate values")
    d.add_argument("--x-grid", default=None)
    d.add_argument("--y-grid", default=None)
    d.add_argument("--out", default="cumhaz.csv")
    d.set_defaults(fn=cmd_diagnose)

    w = sub.add_parser("sweep", help="predicted quantiles as one covariate varies")
    w.add_argument("model")
    w.add_argument("data", help="CSV whose covariate quantiles define the grid and base row")
    w.add_argument("--row", type=int, default=1)
    w.add_argument("--covariate", required=True)
    w.add_argument("--quantiles", default="0.5")
    w.add_argument("--q-lo", type=float, default=0.01)
    w.add_argument("--q-hi", type=float, default=0.99)
    w.add_argument("--points", type=int, default=50)
    w.add_argument("--compare", nargs="*", help="further model files evaluated on the same grid")
    w.add_argument("--out", default="sweep.csv")
    w.set_defaults(fn=cmd_sweep)

    b = sub.add_parser("benchmark", help="replicated simulation study over scenarios and censoring levels")
    b.add_argument("--scenarios", default="B,D")
    b.add_argument("--censoring", default="0.2,0.5,0.8")
    b.add_argument("--replicates", type=int, default=20)
    b.add_argument("--methods", default="vine,aft")
    b.add_argument("--n-train", type=int, default=1000)
    b.add_argument("--n-test", type=int, default=1000)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", default="benchmark.csv")
    b.set_defaults(fn=cmd_benchmark)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    st = _settings(args)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            args.fn(args, st)
    except (StageError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
