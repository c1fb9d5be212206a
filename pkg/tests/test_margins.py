import numpy as np
import pytest
from scipy import stats

from vinesurv.margins import (MarginFitError, MarginSpec, PitClampWarning, fit_margin,
                              fit_response_margin, kaplan_meier, km_midpoint_scores, qq_points,
                              rank_scores)

from oracles import km_by_hand

CONTINUOUS = {
    "normal": (0.3, 1.7),
    "lognormal": (0.2, 0.6),
    "exponential": (1.5,),
    "weibull": (1.8, 2.5),
    "generalized-gamma": (0.4, 0.7, 0.6),
    "truncated-normal": (1.0, 2.0),
    "skew-normal": (0.0, 1.3, 3.0),
}


def _spec(fam, params):
    support = (0.0, np.inf) if fam == "truncated-normal" else (-np.inf, np.inf)
    if fam in ("lognormal", "exponential", "weibull", "generalized-gamma"):
        support = (0.0, np.inf)
    return MarginSpec(fam, params, support)


# ---------------------------------------------------------------- Kaplan-Meier

def test_km_no_censoring_at_2_5():
    # [TRIVIAL] three events: F(2.5) = 1 - (2/3)(1/2)
    km = kaplan_meier([1.0, 2.0, 3.0], [1, 1, 1])
    assert km.cdf(2.5) == pytest.approx(2 / 3, abs=1e-15)


def test_km_one_censored_hand_product():
    # [DERIVED] hand product over risk sets: S(3+) = (1 - 1/3)(1 - 1/1)
    times, status = [1.0, 2.0, 3.0], [1, 0, 1]
    km = kaplan_meier(times, status)
    assert km.surv_right(3.0) == pytest.approx(0.0)
    assert km.surv(3.0) == pytest.approx(km_by_hand(times, status, 3.0))
    assert km.surv(3.0) == pytest.approx(2 / 3)
    assert km.cdf_right(3.0) == pytest.approx(1.0)


def test_km_all_censored_is_flat():
    km = kaplan_meier([1.0, 2.0, 5.0], [0, 0, 0])
    assert np.all(km.surv(np.array([0.5, 1.5, 10.0])) == 1.0)


def test_km_empty_rejected():
    with pytest.raises(ValueError):
        kaplan_meier([], [])


def test_km_matches_ecdf_without_censoring(rng):
    t = rng.exponential(size=200)
    km = kaplan_meier(t, np.ones(200, int))
    for y in np.sort(t):
        assert km.cdf_right(y) == np.mean(t <= y)
        assert km.cdf(y) == np.mean(t < y)


# ---------------------------------------------------------------- pit / scores

def test_pit_normal_median():
    p = MarginSpec("normal", (0.0, 1.0)).pit(0.0)
    assert (p.plus[0], p.minus[0]) == (0.5, 0.5)


def test_pit_discrete_four_equal_categories():
    m = fit_margin(np.repeat([1.0, 2.0, 3.0, 4.0], 5), family="empirical-discrete")
    p = m.pit(2.0)
    assert (p.plus[0], p.minus[0]) == (0.5, 0.25)


def test_pit_weibull_closed_form():
    p = MarginSpec("weibull", (1.0, 1.0), (0.0, np.inf)).pit(1.0)
    assert p.plus[0] == pytest.approx(1 - np.exp(-1), abs=1e-15)
    assert p.minus[0] == p.plus[0]


def test_pit_outside_support_clamps_with_warning():
    m = MarginSpec("weibull", (1.0, 1.0), (0.0, np.inf))
    with pytest.warns(PitClampWarning):
        p = m.pit(-1.0)
    assert p.plus[0] == pytest.approx(1e-10)


def test_unseen_category_maps_to_nearest():
    m = fit_margin(np.repeat([1.0, 2.0, 4.0], 4), family="empirical-discrete")
    with pytest.warns(PitClampWarning):
        p = m.pit(3.9)
    q = m.pit(4.0)
    assert p.plus[0] == q.plus[0] and p.minus[0] == q.minus[0]


def test_rank_scores():
    # [PAPER] (rank - 1/2) / n
    assert np.allclose(rank_scores([1.0, 2.0, 3.0]), [1 / 6, 3 / 6, 5 / 6], atol=0)
    m = fit_margin([3.0, 1.0, 2.0, 5.0, 4.0], family="empirical-continuous")
    assert np.allclose(m.cdf([1.0, 3.0, 5.0]), [0.1, 0.5, 0.9])


def test_km_midpoint_scores_uncensored_are_rank_scores(rng):
    t = rng.exponential(size=50)
    assert np.allclose(km_midpoint_scores(t, np.ones(50, int)), rank_scores(t), atol=1e-14)


# ---------------------------------------------------------------- Q-Q

def test_qq_uncensored_positions():
    m = MarginSpec("normal", (0.0, 1.0))
    pts = qq_points([4.0, 1.0, 3.0, 2.0], [1, 1, 1, 1], m)
    assert np.allclose(pts[:, 0], stats.norm.ppf([0.125, 0.375, 0.625, 0.875]))
    assert np.array_equal(pts[:, 1], [1.0, 2.0, 3.0, 4.0])


def test_qq_one_censored_hand_km():
    # [DERIVED] times 1, 2+, 3: F(1-)=0, F(1+)=1/3; F(3-)=1/3, F(3+)=1
    m = MarginSpec("normal", (0.0, 1.0))
    pts = qq_points([1.0, 2.0, 3.0], [1, 0, 1], m)
    assert np.allclose(pts[:, 0], stats.norm.ppf([1 / 6, 2 / 3]))


def test_qq_all_censored_rejected():
    with pytest.raises(ValueError):
        qq_points([1.0, 2.0], [0, 0], MarginSpec("normal", (0.0, 1.0)))


# ---------------------------------------------------------------- fitting

def test_exponential_mle_within_3se(rng):
    # [DERIVED] closed-form MLE rate = 1 / mean, s.e. = rate / sqrt(n)
    x = rng.exponential(size=1000)
    m = fit_margin(x, family="exponential")
    assert m.params[0] == pytest.approx(1 / x.mean(), rel=1e-6)
    assert abs(m.params[0] - 1.0) < 3 * m.params[0] / np.sqrt(1000)


def test_constant_values_rejected():
    with pytest.raises(ValueError):
        fit_margin(np.full(10, 2.0), family="normal")


def test_weibull_rejects_nonpositive():
    with pytest.raises(ValueError):
        fit_margin(np.array([0.0, 1.0, 2.0, 3.0, 4.0]), family="weibull")


def test_too_few_values_rejected():
    with pytest.raises(ValueError):
        fit_margin([1.0, 2.0, 3.0], family="normal")


def test_fit_is_deterministic(rng):
    x = rng.lognormal(size=300)
    a = fit_margin(x, family="generalized-gamma")
    b = fit_margin(x, family="generalized-gamma")
    assert a.params == b.params and a.loglik == b.loglik


def test_censored_weibull_recovers_truth(rng):
    y = stats.weibull_min(1.5, scale=2.0).rvs(size=3000, random_state=rng)
    c = rng.exponential(4.0, size=3000)
    t, s = np.minimum(y, c), (y <= c).astype(int)
    m = fit_margin(t, s, "weibull")
    assert m.params[0] == pytest.approx(1.5, abs=0.1)
    assert m.params[1] == pytest.approx(2.0, abs=0.15)


def test_response_margin_selection_prefers_generating_family(rng):
    y = rng.lognormal(0.5, 0.4, size=1500)
    best, fits = fit_response_margin(y, np.ones(y.size, int))
    assert best.family in ("lognormal", "generalized-gamma")
    assert {f.family for f in fits} == {"weibull", "lognormal", "generalized-gamma", "truncated-normal"}


def test_inadmissible_params_rejected():
    with pytest.raises(ValueError):
        MarginSpec("normal", (0.0, -1.0))
    with pytest.raises(ValueError):
        MarginSpec("truncated-normal", (0.0, 1.0), (2.0, 1.0))


def test_margin_fit_error_type():
    assert issubclass(MarginFitError, RuntimeError)


# ---------------------------------------------------------------- invariants

@pytest.mark.parametrize("fam", sorted(CONTINUOUS))
def test_cdf_derivative_matches_pdf(fam, rng):
    m = _spec(fam, CONTINUOUS[fam])
    x = m.ppf(np.linspace(0.03, 0.97, 20))
    h = 1e-5 * np.maximum(np.abs(x), 1.0)
    num = (m.cdf(x + h) - m.cdf(x - h)) / (2 * h)
    assert np.allclose(num, m.pdf(x), rtol=1e-4)


@pytest.mark.parametrize("fam", sorted(CONTINUOUS))
def test_quantile_inverts_cdf(fam):
    m = _spec(fam, CONTINUOUS[fam])
    x = m.ppf(np.linspace(0.01, 0.99, 41))
    assert np.allclose(m.ppf(m.cdf(x)), x, rtol=1e-6)
    assert np.allclose(m.ppf(m.pit(x).plus), x, rtol=1e-6)


@pytest.mark.parametrize("fam", sorted(CONTINUOUS))
def test_cdf_bounds_and_monotone(fam):
    m = _spec(fam, CONTINUOUS[fam])
    lo, hi = m.support
    x = m.ppf(np.linspace(1e-4, 1 - 1e-4, 200))
    assert np.all(np.diff(m.cdf(x)) >= 0)
    assert m.cdf(lo if np.isfinite(lo) else -1e300) == pytest.approx(0.0, abs=1e-9)
    assert m.cdf(1e300) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("fam", ["normal", "lognormal", "exponential", "weibull"])
def test_mle_dominates_truth(fam):
    # [DERIVED] the maximized log-likelihood is never below the generating parameters'
    truth = _spec(fam, CONTINUOUS[fam])
    rng = np.random.default_rng(5)
    for _ in range(50):
        x = truth.ppf(rng.uniform(size=60))
        fit = fit_margin(x, family=fam)
        assert fit.loglik >= np.sum(truth.logpdf(x)) - 1e-7


def test_margin_json_round_trip():
    m = fit_margin(np.repeat([0.2, 0.5, 0.9], 3), family="empirical-discrete")
    back = MarginSpec.from_dict(m.to_dict())
    assert np.array_equal(back.cdf([0.2, 0.5, 0.9]), m.cdf([0.2, 0.5, 0.9]))
    t = MarginSpec("truncated-normal", (1.0, 2.0), (0.0, np.inf))
    assert MarginSpec.from_dict(t.to_dict()).support == (0.0, np.inf)
