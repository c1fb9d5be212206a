"""Property-based checks across modules."""
import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vinesurv.assoc import cont_censored_loglik, vdw_cont_censored
from vinesurv.bicop import Bicop, par_to_tau, param_bounds
from vinesurv.margins import UScorePair, kaplan_meier, km_midpoint_scores, rank_scores
from vinesurv.metrics import c_index, interval_score, mae_rmse
from vinesurv.select import select_structure
from vinesurv.vine import ResponseConditional, VineSpec, loglik_terms, random_array, validate

from oracles import sequential_logdensity

FAMILIES = ["N", "t", "F", "G", "G.s", "BB1"]
unit = st.floats(1e-6, 1 - 1e-6)
finite = st.floats(-1e3, 1e3, allow_nan=False)


@st.composite
def copulas(draw, max_tau=0.85):
    fam = draw(st.sampled_from(FAMILIES))
    par = tuple(draw(st.floats(lo, hi)) for lo, hi in param_bounds(fam))
    assume(abs(par_to_tau(fam, par)) <= max_tau)
    return Bicop(fam, par)


@st.composite
def gaussian_vines(draw, dmin=3, dmax=5):
    d = draw(st.integers(dmin, dmax))
    A = random_array(d, draw(st.integers(0, 2**32 - 1)))
    pcs = {(l, j): Bicop("N", (draw(st.floats(-0.9, 0.9)),)) for j in range(d) for l in range(j)}
    return VineSpec(A, pcs)


# ---------------------------------------------------------------- bicop

@given(copulas(), unit, unit)
def test_h_functions_in_unit_interval(c, u, v):
    for h in (c.hfunc1(u, v), c.hfunc2(u, v)):
        assert 0.0 <= float(h) <= 1.0


@given(copulas(), st.floats(0.001, 0.999), st.floats(0.001, 0.999))
def test_hinv_round_trip_in_probability(c, u, p):
    assert abs(float(c.hfunc1(u, c.hinv1(u, p))) - p) < 1e-8
    assert abs(float(c.hfunc2(c.hinv2(u, p), u)) - p) < 1e-8


@given(copulas(), unit, unit)
def test_cdf_within_frechet_bounds(c, u, v):
    C = float(c.cdf(u, v))
    assert max(u + v - 1.0, 0.0) - 1e-12 <= C <= min(u, v) + 1e-12


@given(copulas(), unit, unit)
def test_density_nonnegative(c, u, v):
    assert float(c.pdf(u, v)) >= 0.0


# ---------------------------------------------------------------- margins

@given(arrays(float, st.integers(1, 40), elements=st.floats(0.01, 100.0)), st.data())
def test_km_survival_nonincreasing_in_unit_interval(t, data):
    s = np.asarray(data.draw(st.lists(st.integers(0, 1), min_size=t.size, max_size=t.size)))
    km = kaplan_meier(t, s)
    grid = np.linspace(0.0, 101.0, 200)
    S = km.surv(grid)
    assert np.all((S >= 0) & (S <= 1)) and np.all(np.diff(S) <= 1e-15)


@given(arrays(float, st.integers(2, 60), elements=st.floats(-1e6, 1e6), unique=True))
def test_rank_scores_are_a_permutation_of_midpoints(x):
    n = x.size
    assert np.allclose(np.sort(rank_scores(x)), (np.arange(1, n + 1) - 0.5) / n)


@given(arrays(float, st.integers(2, 50), elements=st.floats(0.01, 10.0)), st.data())
def test_km_midpoint_scores_inside_unit_interval(t, data):
    s = np.asarray(data.draw(st.lists(st.integers(0, 1), min_size=t.size, max_size=t.size)))
    assume(s.any())
    u = km_midpoint_scores(t, s)
    assert np.all((u > 0) & (u < 1))


# ---------------------------------------------------------------- assoc

@given(st.integers(0, 10_000), st.floats(-0.8, 0.8))
def test_vdw_estimate_dominates_zero_and_rank_invariant(seed, rho):
    from scipy import special
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((80, 2))
    x, y = z[:, 0], rho * z[:, 0] + np.sqrt(1 - rho ** 2) * z[:, 1]
    t, c = np.exp(y), rng.exponential(2.0, 80)
    s = (t <= c).astype(int)
    assume(s.sum() >= 2)
    times = np.minimum(t, c)
    fit = vdw_cont_censored(x, times, s, return_fit=True)
    z1, z2 = special.ndtri(rank_scores(x)), special.ndtri(km_midpoint_scores(times, s))
    assert fit.loglik >= cont_censored_loglik(0.0, z1, z2, s) - 1e-12
    assert vdw_cont_censored(np.arctan(x), times, s) == fit.rho


# ---------------------------------------------------------------- metrics

@given(arrays(float, st.integers(1, 30), elements=finite), st.data())
def test_mae_at_most_rmse(y, data):
    p = data.draw(arrays(float, y.size, elements=finite))
    mae, rmse = mae_rmse(y, p)
    assert 0.0 <= mae <= rmse * (1 + 1e-12) + 1e-12


@given(arrays(float, st.integers(1, 30), elements=finite), st.floats(0.01, 0.99), st.data())
def test_interval_score_at_least_width(y, alpha, data):
    lo = data.draw(arrays(float, y.size, elements=finite))
    w = data.draw(arrays(float, y.size, elements=st.floats(0, 100)))
    hi = lo + w
    assert interval_score(y, lo, hi, alpha) >= np.mean(hi - lo) - 1e-9
    inside = np.clip(y, lo, hi)
    assert interval_score(inside, lo, hi, alpha) == np.mean(hi - lo)


@given(st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_c_index_in_unit_interval(n, seed):
    rng = np.random.default_rng(seed)
    c = c_index(rng.exponential(size=n), rng.integers(0, 2, n), rng.normal(size=n))
    assert np.isnan(c) or 0.0 <= c <= 1.0


# ---------------------------------------------------------------- vine and select

@given(gaussian_vines(), st.integers(0, 2**32 - 1))
def test_uncensored_loglik_matches_sequential_oracle(spec, seed):
    u = np.random.default_rng(seed).uniform(0.01, 0.99, size=(5, spec.d))
    got = loglik_terms(spec, [UScorePair(u[:, k]) for k in range(spec.d)], np.ones(5))
    assert np.allclose(got, sequential_logdensity(spec, u), atol=1e-8, rtol=0)


@given(gaussian_vines(), st.integers(0, 2**32 - 1))
def test_conditional_cdf_monotone(spec, seed):
    u = np.random.default_rng(seed).uniform(0.05, 0.95, size=(3, spec.d))
    rc = ResponseConditional(spec, [UScorePair(u[:, k]) for k in range(spec.d)])
    vals = np.array([rc.cdf(np.full(3, g)) for g in np.linspace(0.01, 0.99, 25)])
    assert np.all(np.diff(vals, axis=0) >= -1e-14) and np.all((vals >= 0) & (vals <= 1))


@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_selected_structure_valid_with_response_leaf(d, seed):
    G = np.random.default_rng(seed).standard_normal((d, 2 * d + 2))
    A = select_structure(np.corrcoef(G))
    assert validate(A, response=d)


@given(st.integers(2, 9), st.integers(0, 2**32 - 1))
def test_random_arrays_valid(d, seed):
    assert validate(random_array(d, seed))
