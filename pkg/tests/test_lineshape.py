import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import erfcx, wofz

from holelock.analysis import kramers_kronig
from holelock.atomic import HoleShape, hole_shape
from holelock.errors import ParameterError
from holelock.lineshape import (PR_YSO_STRENGTHS, Gaussian, Infinite, InhomProfile, Lorentzian,
                                Species, SpeciesMix, background_alpha, composite_alpha,
                                faddeeva, hole_alpha, intensity_transmission, pr_yso_mix,
                                propagate)

from .conftest import sinh_grid

# ---------------------------------------------------------------------------
# Faddeeva function
# ---------------------------------------------------------------------------


def test_faddeeva_special_values():
    assert faddeeva(0.0) == pytest.approx(1.0, abs=1e-12)
    assert faddeeva(1j).real == pytest.approx(erfcx(1.0), rel=1e-13)
    assert faddeeva(1j).real == pytest.approx(0.42758, abs=1e-5)
    assert abs(faddeeva(1j).imag) < 1e-14


def test_faddeeva_matches_reference_upper_half_plane():
    rng = np.random.default_rng(3)
    z = rng.uniform(-30, 30, 4000) + 1j * 10 ** rng.uniform(-6, 1.5, 4000)
    ref = wofz(z)
    assert np.max(np.abs(faddeeva(z) - ref) / np.abs(ref)) < 1e-11


def test_faddeeva_lower_half_plane():
    rng = np.random.default_rng(4)
    z = rng.uniform(-4, 4, 500) - 1j * rng.uniform(0, 3, 500)
    ref = wofz(z)
    assert np.max(np.abs(faddeeva(z) - ref) / np.abs(ref)) < 1e-9


@given(x=st.floats(-50, 50), y=st.floats(0, 50))
def test_faddeeva_reflection(x, y):
    z = complex(x, y)
    assert faddeeva(-z.conjugate()) == pytest.approx(np.conj(faddeeva(z)), rel=1e-12, abs=1e-300)


# ---------------------------------------------------------------------------
# background profiles
# ---------------------------------------------------------------------------


def test_lorentzian_background_points():
    p = Lorentzian(2.0)
    ar, ai = background_alpha(p, 3.0, 1e-3, [0.0, 1.0])
    assert ar[0] == pytest.approx(3.0)
    assert ai[0] == 0.0
    assert ar[1] == pytest.approx(1.5)
    assert ai[1] == pytest.approx(1.5)


def test_gaussian_background_centre():
    ar, _ = background_alpha(Gaussian(1000.0), 2.0, 1.0, [0.0])
    assert ar[0] == pytest.approx(2.0, rel=1e-3)


def test_infinite_background_is_flat():
    ar, ai = background_alpha(Infinite(), 1.5, 1.0, np.linspace(-3, 3, 7))
    assert np.all(ar == 1.5)
    assert np.all(ai == 0.0)


def _voigt_quadrature(omega, gamma_inh, gamma_h):
    """Gaussian profile (unit peak) folded with a unit-area Lorentzian of FWHM Γ_h."""
    hw = gamma_h / 2
    a = 4 * math.log(2) / gamma_inh**2

    def integrand_r(x):
        return math.exp(-a * x * x) * (hw / math.pi) / (hw * hw + (omega - x) ** 2)

    def integrand_i(x):
        return math.exp(-a * x * x) * ((omega - x) / math.pi) / (hw * hw + (omega - x) ** 2)

    lim = 8 * gamma_inh
    pts = [omega]
    r = quad(integrand_r, -lim, lim, points=pts, limit=500, epsabs=0, epsrel=1e-11)[0]
    i = quad(integrand_i, -lim, lim, points=pts, limit=500, epsabs=1e-13, epsrel=1e-11)[0]
    return r, i


@pytest.mark.parametrize("omega", [0.0, 0.3, 1.0, 2.5])
def test_gaussian_background_is_voigt(omega):
    g_inh, gh = 1.0, 0.2
    ar, ai = background_alpha(Gaussian(g_inh), 1.0, gh, [omega])
    r, i = _voigt_quadrature(omega, g_inh, gh)
    assert ar[0] == pytest.approx(r, rel=1e-4)
    assert ai[0] == pytest.approx(i, rel=1e-4, abs=1e-8)


def test_profile_validation():
    with pytest.raises(ParameterError):
        InhomProfile("lorentzian", math.inf)
    with pytest.raises(ParameterError):
        InhomProfile("triangle", 1.0)


# ---------------------------------------------------------------------------
# holes
# ---------------------------------------------------------------------------


def test_hole_on_centre_absorption():
    h = hole_shape(0.9, 2.0, 1.0, delta0=0.4)
    ar, ai = hole_alpha(2.0, Infinite(), h, 1.0, [0.4])
    d_meas = h.gamma_hole * h.d_hole / (h.gamma_hole + 1.0)
    assert ar[0] == pytest.approx(2.0 * (1 - d_meas))
    assert ai[0] == 0.0


def test_zero_depth_hole_is_background():
    w = np.linspace(-500, 500, 101)
    p = Lorentzian(400.0)
    h = HoleShape(0.0, 1.0, 0.0, 1.0)
    ar, ai = hole_alpha(1.3, p, h, 1.0, w)
    br, bi = background_alpha(p, 1.3, 1.0, w)
    assert np.allclose(ar, br, rtol=4e-16, atol=0)
    assert np.allclose(ai, bi, rtol=4e-16, atol=0)


def test_hole_parity_infinite_profile():
    h = hole_shape(1.2, 3.0, 1.0, delta0=2.0)
    u = np.linspace(0, 20, 41)
    ar_p, ai_p = hole_alpha(1.0, Infinite(), h, 1.0, 2.0 + u)
    ar_m, ai_m = hole_alpha(1.0, Infinite(), h, 1.0, 2.0 - u)
    assert np.allclose(ar_p, ar_m, rtol=0, atol=1e-15)
    assert np.allclose(ai_p, -ai_m, rtol=0, atol=1e-15)


def test_measured_width_of_dip():
    gh = 1.0
    h = hole_shape(2.0, 3.0, gh)
    depth = lambda w: 1.0 - hole_alpha(1.0, Infinite(), h, gh, [w])[0][0]
    half = depth(0.0) / 2
    edge = brentq(lambda w: depth(w) - half, 0.0, 20.0, xtol=1e-12)
    assert 2 * edge == pytest.approx(h.gamma_hole + gh, rel=1e-9)


def test_hole_dispersion_is_kramers_kronig_consistent():
    gh = 1.0
    h = HoleShape(0.6, 2.0, float("nan"), gh)
    w = sinh_grid(4000, 8001, 0.5)
    ar, ai = hole_alpha(1.0, Infinite(), h, gh, w)
    ki = kramers_kronig(w, ar, baseline="edges")
    near = np.abs(w) <= 10 * h.gamma_hole
    assert np.max(np.abs(ki - ai)[near]) < 0.01 * np.max(np.abs(ai))


def test_narrow_profile_warns():
    h = hole_shape(0.5, 1.0, 1.0)
    with pytest.warns(RuntimeWarning):
        hole_alpha(1.0, Lorentzian(10.0), h, 1.0, [0.0])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        hole_alpha(1.0, Lorentzian(1e4), h, 1.0, [0.0])


# ---------------------------------------------------------------------------
# species mixtures
# ---------------------------------------------------------------------------


def test_single_species_equals_hole_alpha():
    w = np.linspace(-10, 10, 51)
    h = hole_shape(0.7, 2.0, 1.0)
    mix = SpeciesMix((Species(1.4, 1.0, h),))
    ar, ai = composite_alpha(mix, Infinite(), 1.0, w)
    rr, ri = hole_alpha(1.4, Infinite(), h, 1.0, w)
    assert np.allclose(ar, rr, rtol=0, atol=1e-15)
    assert np.allclose(ai, ri, rtol=0, atol=1e-15)


def test_split_species_is_linear():
    w = np.linspace(-10, 10, 51)
    h = hole_shape(0.7, 2.0, 1.0)
    one = composite_alpha(SpeciesMix((Species(2.0, 1.0, h),)), Lorentzian(500.0), 1.0, w)
    two = composite_alpha(SpeciesMix((Species(1.0, 1.0, h), Species(1.0, 1.0, h))),
                          Lorentzian(500.0), 1.0, w)
    assert np.allclose(one[0], two[0], rtol=1e-14)
    assert np.allclose(one[1], two[1], rtol=1e-14, atol=1e-15)


def test_pr_yso_preset():
    assert PR_YSO_STRENGTHS == (0.55, 0.38, 0.40, 0.60, 0.93)
    mix = pr_yso_mix(2.0, 0.5, 3.0, 1.0)
    assert mix.alpha0 == pytest.approx(2.0)
    weights = np.array([sp.weight for sp in mix.species])
    assert np.allclose(weights / weights.sum(), np.array(PR_YSO_STRENGTHS) / sum(PR_YSO_STRENGTHS))
    widths = [sp.hole.gamma_hole for sp in mix.species]
    # stronger classes burn wider holes
    order = np.argsort(PR_YSO_STRENGTHS)
    assert np.all(np.diff(np.array(widths)[order]) > 0)
    with pytest.raises(ParameterError):
        pr_yso_mix(1.0, 0.5, 3.0, 1.0, strengths=(0.0, 0.0))


# ---------------------------------------------------------------------------
# propagation
# ---------------------------------------------------------------------------


def test_propagation_limits():
    amp, ph = propagate(1.0, 0.2, 0.0, 0.0)
    assert amp == 1.0 and ph == 0.2
    amp, ph = propagate(1.0, 0.0, 2.0, 0.4, L=0.5)
    assert amp == pytest.approx(math.exp(-0.5))
    assert ph == pytest.approx(0.1)


def test_background_transmissions():
    assert intensity_transmission(1.15) == pytest.approx(0.32, abs=0.005)
    assert intensity_transmission(0.66) == pytest.approx(0.52, abs=0.005)
