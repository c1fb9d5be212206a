import numpy as np
import pytest
from scipy import integrate, stats

from vinesurv._bvn import bvn_cdf, bvt_cdf
from vinesurv.bicop import (Bicop, ClampWarning, CopulaFitError, cdf, fit_edge, hfunc1_sf, hinv1,
                            mixed_logpdf, par_to_tau, pdf, tau_to_par)
from vinesurv.margins import UScorePair

FAMS = {"N": (0.55,), "t": (-0.4, 5.0), "F": (4.0,), "G": (1.8,), "G.s": (2.2,), "BB1": (0.8, 1.6)}


def _pts(rng, n=200, lo=0.02, hi=0.98):
    return rng.uniform(lo, hi, n), rng.uniform(lo, hi, n)


# ---------------------------------------------------------------- examples

def test_gumbel_delta_one_is_product():
    u, v = np.meshgrid(np.linspace(0.01, 0.99, 30), np.linspace(0.01, 0.99, 30))
    assert np.array_equal(cdf("G", (1.0,), u, v), u * v)


def test_frank_near_zero_is_independent():
    assert pdf("F", (1e-9,), 0.3, 0.7) == pytest.approx(1.0, abs=1e-6)
    assert pdf("F", (-1e-9,), 0.3, 0.7) == pytest.approx(1.0, abs=1e-6)


def test_gaussian_orthant():
    # [DERIVED] 1/4 + arcsin(rho) / (2 pi) = 1/3 at rho = 0.5
    assert cdf("N", (0.5,), 0.5, 0.5) == pytest.approx(1 / 3, abs=1e-12)


def test_inadmissible_params():
    for fam, par in [("N", (1.0,)), ("t", (0.2, 1.5)), ("G", (0.9,)), ("BB1", (0.0, 1.2)),
                     ("BB1", (1.0, 0.5)), ("X", ())]:
        with pytest.raises(ValueError):
            Bicop(fam, par)


def test_boundary_arguments_clamped_with_warning():
    with pytest.warns(ClampWarning):
        val = Bicop("N", (0.3,)).hfunc1(0.0, 1.0)
    assert 0.0 <= val <= 1.0


# ---------------------------------------------------------------- identities

@pytest.mark.parametrize("fam", sorted(FAMS))
def test_h_functions_are_cdf_derivatives(fam, rng):
    c = Bicop(fam, FAMS[fam])
    u, v = _pts(rng, 100, 0.05, 0.95)
    e = 1e-6
    du = (c.cdf(u + e, v) - c.cdf(u - e, v)) / (2 * e)
    dv = (c.cdf(u, v + e) - c.cdf(u, v - e)) / (2 * e)
    assert np.allclose(du, c.hfunc1(u, v), atol=1e-4)
    assert np.allclose(dv, c.hfunc2(u, v), atol=1e-4)


@pytest.mark.parametrize("fam", sorted(FAMS))
def test_pdf_is_mixed_derivative(fam, rng):
    c = Bicop(fam, FAMS[fam])
    u, v = _pts(rng, 50, 0.05, 0.95)
    e = 1e-6
    num = (c.hfunc1(u, v + e) - c.hfunc1(u, v - e)) / (2 * e)
    assert np.allclose(num, c.pdf(u, v), rtol=1e-4, atol=1e-6)


@pytest.mark.parametrize("fam", sorted(FAMS))
def test_h_inverse_round_trip(fam, rng):
    c = Bicop(fam, FAMS[fam])
    u, v = _pts(rng, 300, 0.001, 0.999)
    assert np.allclose(c.hinv1(u, c.hfunc1(u, v)), v, atol=1e-8)
    assert np.allclose(c.hinv2(v, c.hfunc2(u, v)), u, atol=1e-8)


@pytest.mark.parametrize("fam", sorted(FAMS))
def test_h_increasing_and_in_unit_interval(fam):
    c = Bicop(fam, FAMS[fam])
    v = np.linspace(0.001, 0.999, 400)
    for u in (0.05, 0.5, 0.95):
        h = c.hfunc1(np.full_like(v, u), v)
        assert np.all(np.diff(h) > 0) and np.all((h > 0) & (h < 1))


@pytest.mark.parametrize("fam", sorted(FAMS))
def test_cdf_frechet_bounds(fam, rng):
    c = Bicop(fam, FAMS[fam])
    u, v = _pts(rng)
    C = c.cdf(u, v)
    assert np.all(C <= np.minimum(u, v) + 1e-15) and np.all(C >= np.maximum(u + v - 1, 0) - 1e-15)


def test_survival_gumbel_reflection_exact(rng):
    u, v = _pts(rng)
    assert np.array_equal(Bicop("G.s", (2.3,)).pdf(u, v), Bicop("G", (2.3,)).pdf(1 - u, 1 - v))


@pytest.mark.parametrize("fam,par", [("N", (0.7,)), ("N", (-0.4,)), ("t", (0.5, 4.0)), ("F", (-6.0,)),
                                     ("F", (9.0,))])
def test_radial_symmetry(fam, par, rng):
    c = Bicop(fam, par)
    u, v = _pts(rng)
    assert np.allclose(c.pdf(u, v), c.pdf(1 - u, 1 - v), rtol=1e-10, atol=0)


def test_t_large_nu_tends_to_gaussian(rng):
    u, v = _pts(rng, 20)
    assert np.allclose(Bicop("t", (0.6, 1e6)).pdf(u, v), Bicop("N", (0.6,)).pdf(u, v), atol=1e-3)


@pytest.mark.parametrize("fam", sorted(FAMS))
def test_complement_of_h(fam, rng):
    c = Bicop(fam, FAMS[fam])
    u, v = _pts(rng)
    assert np.allclose(hfunc1_sf(c, u, v), 1 - c.hfunc1(u, v), atol=1e-14)


def test_complement_of_h_keeps_tail_digits():
    # [DERIVED] Gaussian: 1 - C_{2|1}(v|u) = Phi(-(z2 - rho z1) / sqrt(1 - rho^2))
    u, v, r = 0.02, 0.98, 0.9
    z1, z2 = stats.norm.ppf([u, v])
    ref = stats.norm.sf((z2 - r * z1) / np.sqrt(1 - r * r))
    assert hfunc1_sf(Bicop("N", (r,)), u, v) == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("fam", ["N", "t", "F", "G", "G.s", "BB1"])
def test_tau_round_trip(fam):
    for tau in (0.1, 0.4, 0.7):
        assert par_to_tau(fam, tau_to_par(fam, tau)) == pytest.approx(tau, abs=2e-3)


# ---------------------------------------------------------------- mixed-scale density

def test_discrete_continuous_density_is_rectangle_derivative():
    # [PAPER] [C_{1|2}(s+|w) - C_{1|2}(s-|w)] / (s+ - s-), checked against d/dw of C
    c = Bicop("G", (2.0,))
    sp, sm, w = 0.6, 0.35, 0.4
    got = np.exp(mixed_logpdf(c, UScorePair([sp], [sm], True), UScorePair([w])))[0]
    e = 1e-6
    direct = ((c.cdf(sp, w + e) - c.cdf(sp, w - e)) - (c.cdf(sm, w + e) - c.cdf(sm, w - e))) / (2 * e)
    assert got == pytest.approx(direct / (sp - sm), rel=1e-7)


def test_both_discrete_independence_density_is_one():
    s = UScorePair([0.25, 0.5, 1.0 - 1e-10], [0.0, 0.25, 0.75], True)
    w = UScorePair([0.4, 0.9, 0.2], [0.1, 0.4, 0.0], True)
    for cop in (Bicop("I"), Bicop("F", (0.0,)), Bicop("N", (0.0,))):
        assert np.allclose(mixed_logpdf(cop, s, w), 0.0, atol=1e-12)


def test_both_discrete_density_is_rectangle_mass():
    c = Bicop("F", (3.0,))
    s = UScorePair([0.6], [0.3], True)
    w = UScorePair([0.8], [0.5], True)
    rect = c.cdf(0.6, 0.8) - c.cdf(0.3, 0.8) - c.cdf(0.6, 0.5) + c.cdf(0.3, 0.5)
    assert np.exp(mixed_logpdf(c, s, w))[0] == pytest.approx(rect / (0.3 * 0.3), rel=1e-12)


# ---------------------------------------------------------------- fitting

def test_frank_refit_within_3se(rng):
    # [DERIVED] simulate and refit
    n = 2000
    u = rng.uniform(size=n)
    v = hinv1("F", (3.0,), u, rng.uniform(size=n))
    fit = fit_edge("F", UScorePair(u), UScorePair(v), compute_se=True)
    assert abs(fit.bicop.params[0] - 3.0) < 3 * fit.se[0]


def test_fit_edge_rejects_degenerate_and_short():
    with pytest.raises(CopulaFitError):
        fit_edge("N", UScorePair(np.full(20, 0.5)), UScorePair(np.linspace(0.1, 0.9, 20)))
    with pytest.raises(ValueError):
        fit_edge("N", UScorePair(np.linspace(0.1, 0.9, 5)), UScorePair(np.linspace(0.1, 0.9, 5)))


def test_fit_edge_on_discrete_pairs(rng):
    n = 1500
    u = rng.uniform(size=n)
    v = hinv1("N", (0.6,), u, rng.uniform(size=n))
    cut = np.array([0.0, 0.3, 0.6, 1.0])
    k = np.searchsorted(cut, u, side="right") - 1
    s = UScorePair(cut[k + 1], cut[k], True)
    fit = fit_edge("N", s, UScorePair(v), compute_se=True)
    assert abs(fit.bicop.params[0] - 0.6) < 3 * fit.se[0]


# ---------------------------------------------------------------- bivariate normal / t kernels

def test_bvn_matches_scipy(rng):
    for r in (-0.95, -0.5, 0.0, 0.3, 0.9, 0.999):
        x, y = rng.normal(size=2)
        ref = stats.multivariate_normal([0, 0], [[1, r], [r, 1]]).cdf([x, y])
        assert bvn_cdf(np.array([x]), np.array([y]), r)[0] == pytest.approx(ref, abs=1e-7)


def _bvt_quad(x, y, r, nu):
    f = lambda s: stats.t.pdf(s, nu) * stats.t.cdf(
        (y - r * s) / np.sqrt((nu + s * s) * (1 - r * r) / (nu + 1)), nu + 1)
    return integrate.quad(f, -np.inf, x, epsabs=1e-13, epsrel=1e-12, limit=400)[0]


@pytest.mark.parametrize("r", [-0.99, -0.6, 0.0, 0.5, 0.95, 0.995])
@pytest.mark.parametrize("nu", [2.5, 6.0, 40.0])
def test_bvt_matches_quadrature(r, nu):
    pts = [(-1.0, 0.5), (0.3, 0.3), (2.0, -1.5), (-2.5, -2.0)]
    for x, y in pts:
        got = bvt_cdf(np.array([x]), np.array([y]), r, nu)[0]
        assert got == pytest.approx(_bvt_quad(x, y, r, nu), abs=1e-8)
