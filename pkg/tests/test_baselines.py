import numpy as np
import pytest

from vinesurv.baselines import (AftModel, BaselineFitError, CoxModel, count_crossings, cumhaz_grid, fit_aft,
                                fit_cox, predict_quantile_aft, predict_quantile_cox)
from vinesurv.bicop import Bicop
from vinesurv.engine.model import FittedModel
from vinesurv.engine.scenarios import SCENARIOS, draw_complete, truth_model
from vinesurv.margins import fit_margin

GAMMA = np.array([0.5, -0.3])


def _weibull_aft(rng, n, gamma0=0.2, gamma=GAMMA, sigma=0.7, censor=True):
    X = rng.standard_normal((n, gamma.size))
    y = np.exp(gamma0 + X @ gamma + sigma * np.log(rng.exponential(size=n)))
    if not censor:
        return X, y, np.ones(n, int)
    c = rng.exponential(3.0, size=n)
    return X, np.minimum(y, c), (y <= c).astype(int)


def test_model_b_coefficients_within_3se():
    # [PAPER] log y = 0.08 x1 + 0.06 x2 + 0.09 x3 + 0.07 x4 + 0.2 W
    sc = SCENARIOS["B"]
    X, y = draw_complete(sc, 1000, np.random.default_rng(8))
    m = fit_aft(X, y, np.ones(1000))
    truth = np.r_[0.0, sc.coef, sc.sigma]
    est = np.r_[m.gamma0, m.gamma, m.sigma]
    assert np.all(np.abs(est - truth) < 3 * m.se), (est, m.se)


def test_no_covariates_is_univariate_weibull(rng):
    _, t, s = _weibull_aft(rng, 800)
    m = fit_aft(None, t, s)
    w = fit_margin(t, s, "weibull")
    shape, scale = w.params
    assert m.sigma == pytest.approx(1 / shape, rel=1e-4)
    assert m.gamma0 == pytest.approx(np.log(scale), abs=1e-4)


def test_cox_matches_minus_gamma_over_sigma(rng):
    # [PAPER] beta = -gamma / sigma under Weibull data
    X, t, s = _weibull_aft(rng, 2000)
    a, c = fit_aft(X, t, s), fit_cox(X, t, s)
    target = -a.gamma / a.sigma
    se_t = np.sqrt((a.se[1:-1] / a.sigma) ** 2 + (a.gamma * a.se[-1] / a.sigma ** 2) ** 2)
    assert np.all(np.abs(c.beta - target) < 3 * np.sqrt(c.se ** 2 + se_t ** 2))


def test_cox_binary_covariate_sign(rng):
    x = rng.integers(0, 2, 600).astype(float)
    y = rng.exponential(1 / np.exp(1.5 * x))
    assert fit_cox(x[:, None], y, np.ones(600)).beta[0] > 0


def test_no_events_rejected(rng):
    X = rng.standard_normal((20, 1))
    for fit in (fit_aft, fit_cox):
        with pytest.raises(BaselineFitError):
            fit(X, rng.exponential(size=20), np.zeros(20))


def test_nonpositive_times_rejected():
    with pytest.raises(ValueError):
        fit_aft(np.zeros((3, 1)), [1.0, 0.0, 2.0], [1, 1, 1])


def test_aft_quantile_at_one_minus_inverse_e():
    # [DERIVED] with gamma = 0, F(e^g0) = 1 - exp(-1)
    m = AftModel(0.7, np.zeros(2), 0.4)
    assert m.quantile(np.zeros((1, 2)), 1 - np.exp(-1))[0] == pytest.approx(np.exp(0.7), rel=1e-12)


@pytest.mark.parametrize("model", [AftModel(0.3, GAMMA, 0.6), CoxModel(np.array([0.4, -0.2]), 1.3, 2.0)])
def test_quantiles_monotone_vanishing_and_inverting(model, rng):
    X = rng.standard_normal((5, 2))
    predict = predict_quantile_aft if model.kind == "aft" else predict_quantile_cox
    qs = np.linspace(0.01, 0.99, 99)
    Q = np.array([predict(model, X, q) for q in qs])
    assert np.all(np.diff(Q, axis=0) > 0)
    assert np.all(predict(model, X, 1e-300) < 1e-50)
    for q, row in zip(qs, Q):
        assert np.allclose(model.cdf(row, X), q, atol=1e-8)


def test_aft_and_cox_survival_agree(rng):
    X, t, s = _weibull_aft(rng, 2000)
    a, c = fit_aft(X, t, s), fit_cox(X, t, s)
    y = np.quantile(t, np.linspace(0.01, 0.99, 60))
    Xs = X[:20]
    Sa = np.array([1 - a.cdf(np.full(20, v), Xs) for v in y])
    Sc = np.array([1 - c.cdf(np.full(20, v), Xs) for v in y])
    assert np.max(np.abs(Sa - Sc)) < 0.05


def test_breslow_step_function(rng):
    X, t, s = _weibull_aft(rng, 300)
    c = fit_cox(X, t, s)
    H = c.breslow(np.sort(t))
    assert np.all(np.diff(H[np.isfinite(H)]) >= 0)
    assert np.isnan(c.breslow(c.breslow_times[-1] + 1.0))
    assert c.H0(0.0) == 0.0


def test_round_trip_dicts():
    a = AftModel(0.1, GAMMA, 0.5, -10.0, np.ones(4))
    b = AftModel.from_dict(a.to_dict())
    assert b.gamma0 == a.gamma0 and np.array_equal(b.gamma, a.gamma) and b.sigma == a.sigma
    c = CoxModel(np.array([0.2]), 1.1, 3.0)
    d = CoxModel.from_dict(c.to_dict())
    assert d.shape == c.shape and d.scale == c.scale and np.array_equal(d.beta, c.beta)


# ---------------------------------------------------------------- cumulative hazard diagnostic

def test_count_crossings():
    H = np.array([[1.0, 2.0, 3.0], [1.5, 2.5, 2.0], [0.1, 0.2, 0.3]])
    assert count_crossings(H) == 1
    assert count_crossings(np.sort(H, axis=0)) == 0


def test_aft_never_crosses(rng):
    y = np.linspace(0.05, 5.0, 40)
    for _ in range(10):
        m = AftModel(rng.normal(), rng.normal(size=3), rng.uniform(0.2, 2.0))
        grid = cumhaz_grid(m, rng.normal(size=3), 1, np.linspace(-2, 2, 10), y)
        assert grid.crossings == 0


def test_model_a_crosses():
    # [PAPER] crossing cumulative hazards under the generating vine
    from vinesurv.engine.harness import model_a_diagnostic
    grid, _ = model_a_diagnostic(seed=0)
    assert grid.crossings >= 1


def test_independence_vine_has_identical_hazards(rng):
    tm = truth_model("A")
    spec = tm.spec.copy({k: Bicop("I") for k in tm.spec.pcs})
    m = FittedModel("vine", tm.names, tm.discrete, tm.preprocess, tm.margins, tm.response_margin,
                    tm.flips, spec)
    grid = cumhaz_grid(m, rng.normal(size=4), 0, np.linspace(-1.6, 1.6, 10), np.linspace(0.1, 3, 30))
    assert grid.crossings == 0 and np.ptp(grid.H, axis=0).max() == 0.0


def test_cumhaz_csv(tmp_path):
    grid = cumhaz_grid(AftModel(0.0, np.zeros(1), 1.0), [0.0], 0, [0.0, 1.0], [1.0, 2.0])
    path = tmp_path / "cumhaz.csv"
    grid.to_csv(path, "x1")
    lines = path.read_text().splitlines()
    assert lines[0] == "x1,y,H" and len(lines) == 5
