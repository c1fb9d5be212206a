"""Simulation models A-E and censoring calibration.

Matrices are written in the upper-triangular row layout: ``A_rows[i]``
starts at the diagonal, ``F_rows[i]``/``P_rows[i]`` start one column to its
right.  t-copula entries are (rho, nu).
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, stats

from ..margins import MarginSpec
from ..vine import Discretization, VineSpec, simulate

NORMAL_CUTS = Discretization((-1.0, 0.0, 1.0), (-1.5, -0.5, 0.5, 1.5))
EXP_CUTS = Discretization((0.35, 0.7, 1.25), (0.2, 0.5, 0.9, 1.6))


@dataclass
class ScenarioDef:
    key: str
    A_rows: list
    F_rows: list
    P_rows: list
    discrete: tuple            # per label of the vine
    kind: str                  # "vine" (response inside the vine) or "aft"
    coef: tuple = ()           # AFT coefficients
    sigma: float = 0.0
    predictor_margin: str = "normal"
    response_margin: str = "lognormal"
    imputation: str = "vine"
    notes: str = ""

    def spec(self):
        return VineSpec.from_rows(self.A_rows, self.F_rows, self.P_rows, self.discrete)

    @property
    def p(self):
        return len(self.A_rows) - (1 if self.kind == "vine" else 0)


SCENARIOS = {
    "A": ScenarioDef(
        "A",
        [[1, 1, 1, 1, 1], [2, 2, 2, 2], [3, 3, 3], [4, 4], [5]],
        [["G", "G", "G", "G"], ["t", "t", "t"], ["F", "F"], ["N"]],
        [[4.67, 2.67, 5.32, 3.09], [(0.75, 6), (0.61, 6), (0.7, 6)], [3.14, 3.86], [0.25]],
        (False,) * 5, "vine", predictor_margin="normal", response_margin="exponential",
        notes="C-vine; N(0,1) predictors, Exp(1) response"),
    "B": ScenarioDef(
        "B",
        [[1, 1, 1, 1], [2, 2, 2], [3, 3], [4]],
        [["t", "t", "t"], ["N", "N"], ["N"]],
        [[(0.49, 6), (0.46, 6), (0.50, 6)], [0.22, 0.34], [0.05]],
        (False, True, False, True), "aft", coef=(0.08, 0.06, 0.09, 0.07), sigma=0.2,
        predictor_margin="normal", response_margin="generalized-gamma", imputation="aft"),
    "C": ScenarioDef(
        "C",
        [[1] * 7, [2] * 6, [3] * 5, [4] * 4, [5] * 3, [6] * 2, [7]],
        [["t"] * 6, ["t"] * 5, ["N"] * 4, ["N"] * 3, ["N"] * 2, ["N"]],
        [[(0.64, 6), (0.60, 6), (0.65, 6), (0.57, 6), (0.65, 6), (0.54, 6)],
         [(0.40, 8), (0.45, 8), (0.45, 8), (0.38, 8), (0.30, 8)],
         [0.12, 0.25, 0.23, 0.29], [0.01, 0.07, 0.09], [0.03, 0.09], [0.03]],
        (False, True, False, True, False, False, False), "aft",
        coef=(0.04, 0.05, 0.04, 0.03, 0.04, 0.05, 0.03), sigma=0.1,
        predictor_margin="normal", response_margin="generalized-gamma", imputation="aft"),
    "D": ScenarioDef(
        "D",
        [[1, 1, 3, 3, 4], [3, 1, 2, 3], [2, 1, 2], [4, 1], [5]],
        [["G", "G", "G", "F"], ["N", "N", "F"], ["F", "F"], ["F"]],
        [[2.34, 1.74, 2.46, 5.85], [0.48, 0.44, 2.89], [1.47, 1.29], [0.24]],
        (True, False, False, True, False), "vine", predictor_margin="exponential",
        response_margin="lognormal", imputation="vine"),
    "E": ScenarioDef(
        "E",
        [[5, 5, 3, 3, 3, 3, 2, 5], [3, 5, 5, 5, 5, 3, 3], [7, 7, 7, 2, 5, 2], [2, 2, 7, 7, 1],
         [6, 6, 6, 7], [1, 1, 6], [4, 4], [8]],
        [["G"] * 6 + ["F"], ["G"] * 5 + ["F"], ["N"] * 4 + ["F"], ["N"] * 3 + ["F"],
         ["F"] * 3, ["F"] * 2, ["F"]],
        [[1.67, 1.84, 1.76, 1.76, 1.52, 1.62, 4.82], [1.45, 1.26, 1.26, 1.42, 1.47, 2.19],
         [0.25, 0.14, 0.30, 0.26, 1.08], [0.13, 0.18, 0.18, 0.92], [0.29, 0.41, 0.47],
         [0.13, 0.23], [0.45]],
        (False, False, False, False, False, True, True, False), "vine", predictor_margin="exponential",
        response_margin="lognormal", imputation="vine"),
}


def _frozen(name):
    return {"normal": stats.norm(), "exponential": stats.expon(), "lognormal": stats.lognorm(1.0)}[name]


def true_margin(name):
    """MarginSpec of a scenario's standard margin."""
    return {"normal": MarginSpec("normal", (0.0, 1.0)),
            "exponential": MarginSpec("exponential", (1.0,), (0.0, np.inf)),
            "lognormal": MarginSpec("lognormal", (0.0, 1.0), (0.0, np.inf))}[name]


def true_discrete_margin(name, disc):
    """Empirical-discrete MarginSpec with the latent category probabilities."""
    cp = np.append(_frozen(name).cdf(np.asarray(disc.cutpoints, float)), 1.0)
    lv = np.asarray(disc.values, dtype=float)
    return MarginSpec("empirical-discrete", (), (lv[0], lv[-1]), {"levels": lv, "cumprob": cp})


def discretization_for(sc):
    return NORMAL_CUTS if sc.predictor_margin == "normal" else EXP_CUTS


def draw_complete(sc, n, rng):
    """Covariates and true event times from a scenario (label order, response last)."""
    spec = sc.spec()
    d = spec.d
    disc = discretization_for(sc)
    dmap = {lab: disc for lab in range(1, d + 1) if spec.discrete[lab - 1]}
    if sc.kind == "vine":
        margins = [_frozen(sc.predictor_margin)] * (d - 1) + [_frozen(sc.response_margin)]
        Z = simulate(spec, n, rng, margins=margins, discretization=dmap)
        resp = spec.response - 1
        X = np.delete(Z, resp, axis=1)
        y = Z[:, resp]
        return X, y
    margins = [_frozen(sc.predictor_margin)] * d
    X = simulate(spec, n, rng, margins=margins, discretization=dmap)
    W = np.log(rng.exponential(size=n))            # standard minimum extreme value
    y = np.exp(X @ np.asarray(sc.coef) + sc.sigma * W)
    return X, y


def calibrate_censoring(y, target, E, tol=0.01):
    """Rate r of exponential censoring C = E / r giving mean(C < y) ~ target.

    Solved by bisection on log r with the standard-exponential draws E held
    fixed, so the achieved rate is reproducible from the seed.
    """
    if target <= 0:
        return 0.0, 0.0
    if not 0 < target < 1:
        raise ValueError("censoring rate must lie in [0, 1)")

    def rate(lr):
        return float(np.mean(E / np.exp(lr) < y))

    lo, hi = -30.0, 30.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if rate(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    best = min((lo, hi), key=lambda lr: abs(rate(lr) - target))
    achieved = rate(best)
    if abs(achieved - target) > tol:
        raise RuntimeError(f"censoring calibration reached {achieved:.4f}, target {target}")
    return float(np.exp(best)), achieved


@dataclass
class SimulatedData:
    scenario: str
    censoring: float
    seed: int
    X_train: np.ndarray
    times_train: np.ndarray
    status_train: np.ndarray
    true_train: np.ndarray
    X_test: np.ndarray
    times_test: np.ndarray
    status_test: np.ndarray
    true_test: np.ndarray
    censor_rate_param: float
    achieved_censoring: float
    names: list = field(default_factory=list)
    discrete: list = field(default_factory=list)


def scenario_seed(master, key, censoring, replicate):
    """Replicate stream keyed by (scenario, censoring level, replicate, master seed)."""
    return np.random.SeedSequence([int(master), ord(key), int(round(censoring * 1000)), int(replicate)])


def simulate_scenario(key, censoring, seed, n_train=1000, n_test=1000, replicate=0):
    """Train/test draws from scenario ``key`` with calibrated exponential censoring.

    ``seed`` is a master integer; the stream also depends on the scenario,
    censoring level and replicate index.
    """
    sc = SCENARIOS[key]
    ss = scenario_seed(seed, key, censoring, replicate)
    rng = np.random.default_rng(ss)
    X, y = draw_complete(sc, n_train + n_test, rng)
    E = rng.exponential(size=n_train + n_test)
    ytr, yte = y[:n_train], y[n_train:]
    r, achieved = calibrate_censoring(ytr, censoring, E[:n_train])
    if r > 0:
        C = E / r
        t = np.minimum(y, C)
        s = (y <= C).astype(int)
    else:
        t, s = y.copy(), np.ones(y.size, dtype=int)
    p = X.shape[1]
    spec = sc.spec()
    labels = [lab for lab in range(1, spec.d + 1) if lab != spec.response] if sc.kind == "vine" \
        else list(range(1, p + 1))
    names = [f"x{lab}" for lab in labels]
    discrete = [bool(spec.discrete[lab - 1]) for lab in labels]
    return SimulatedData(key, censoring, int(seed), X[:n_train], t[:n_train], s[:n_train], ytr,
                         X[n_train:], t[n_train:], s[n_train:], yte, r, achieved, names, discrete)


def truth_model(key):
    """The generating model of a vine scenario as a FittedModel (true margins, true spec)."""
    from .data import Preprocessor
    from .model import FittedModel
    sc = SCENARIOS[key]
    if sc.kind != "vine":
        raise ValueError(f"scenario {key} is not a vine model")
    spec = sc.spec()
    labels = [lab for lab in range(1, spec.d + 1) if lab != spec.response]
    # relabel so predictors are 1..p in column order and the response is d
    perm = {lab: k + 1 for k, lab in enumerate(labels)}
    perm[spec.response] = spec.d
    A = np.zeros_like(spec.A)
    for i in range(spec.d):
        for j in range(i, spec.d):
            A[i, j] = perm[int(spec.A[i, j])]
    disc = [spec.discrete[lab - 1] for lab in labels] + [False]
    rel = VineSpec(A, dict(spec.pcs), disc)
    dz = discretization_for(sc)
    margins = [true_discrete_margin(sc.predictor_margin, dz) if spec.discrete[lab - 1]
               else true_margin(sc.predictor_margin) for lab in labels]
    return FittedModel("vine", [f"x{lab}" for lab in labels], disc[:-1], Preprocessor([[] for _ in labels]),
                       margins, true_margin(sc.response_margin), np.zeros(len(labels), bool), rel,
                       options={"truth": key})
