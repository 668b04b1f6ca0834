import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from holelock.atomic import (HoleShape, OpticalParams, ThreeLevel, ThreeLevelRFEraser, TwoLevel,
                             hole_shape, homogeneous_linewidth, steady_state_populations,
                             trapping_params)
from holelock.drift import (DriftParams, alphaI_drift, drift_error_signal, drift_phase_difference,
                            drift_profile_ode, drift_stability_oracle, drift_threshold,
                            drift_time_constant, g_drift, matrix_A, nonlinear_drift_phase,
                            profile_alphaI, sign_threshold)
from holelock.errors import ParameterError
from holelock.pdh import bessel_weights, f_of_x, mid_band_constant

T1 = 150e-6
OPT = OpticalParams(T1=T1, T2_0=18e-6, alpha0L=1.0)
SCHEMES = [ThreeLevelRFEraser(T_rg=4e-3), TwoLevel(),
           ThreeLevel(T_rg=2e-3, T_gr=8e-3, b_er=0.4, b_eg=0.6)]


# ---------------------------------------------------------------------------
# expansion matrix
# ---------------------------------------------------------------------------


@given(s=st.floats(0.0, 50.0), t_rg=st.floats(1e-5, 1e-1), t_gr=st.floats(1e-5, 1e3),
       b_er=st.floats(0.0, 1.0))
def test_matrix_inverse(s, t_rg, t_gr, b_er):
    levels = ThreeLevel(T_rg=t_rg, T_gr=t_gr, b_er=b_er, b_eg=1 - b_er)
    A, A_inv = matrix_A(s, levels, T1)
    assert np.allclose(A[2], 1.0)
    scale = max(1.0, np.max(np.abs(A)) * np.max(np.abs(A_inv)))
    assert np.max(np.abs(A @ A_inv - np.eye(3))) < 1e-10 * scale


def test_matrix_zero_drive_steady_state():
    levels = ThreeLevel(T_rg=3e-3, T_gr=6e-3, b_er=0.5, b_eg=0.5)
    G, _ = trapping_params(levels, T1)
    _, A_inv = matrix_A(0.0, levels, T1)
    assert np.allclose(A_inv @ [0, 0, 1], [0, G, 1 - G], atol=1e-14)


@pytest.mark.parametrize("s", [0.1, 1.0, 7.0])
def test_matrix_reproduces_populations(s):
    levels = ThreeLevelRFEraser(T_rg=4e-3)
    _, A_inv = matrix_A(s, levels, T1)
    p = steady_state_populations(s, levels, T1)
    assert np.allclose(A_inv @ [0, 0, 1], [p.rho_e, p.rho_g, p.rho_r], rtol=1e-12, atol=1e-15)


def test_matrix_needs_reservoir_time():
    with pytest.raises(ParameterError):
        matrix_A(1.0, ThreeLevel(T_rg=0.0), T1)


# ---------------------------------------------------------------------------
# drift corrections
# ---------------------------------------------------------------------------


def _args(levels, s0=0.5):
    gh = homogeneous_linewidth(OPT, levels)
    _, R = trapping_params(levels, T1)
    return gh, hole_shape(s0, R, gh)


def test_drift_params_warnings():
    with pytest.warns(RuntimeWarning):
        DriftParams.from_beta(1e9, 4e-3, 1e5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        p = DriftParams.from_beta(1e3, 4e-3, 1e5)
    assert p.xi == pytest.approx(1e3 * 4e-3 / 1e5)


@pytest.mark.parametrize("levels", SCHEMES)
def test_g_drift_odd_and_zero_without_drift(levels):
    gh, h = _args(levels)
    u = np.linspace(0, 5 * h.gamma_hole, 51)
    assert np.all(g_drift(u, 0.0, 0.0, 0.5, gh, h.gamma_hole, levels, T1) == 0)
    gp = g_drift(1.0 + u, 1.0, 1e6, 0.5, gh, h.gamma_hole, levels, T1)
    gm = g_drift(1.0 - u, 1.0, 1e6, 0.5, gh, h.gamma_hole, levels, T1)
    assert np.allclose(gp, -gm, rtol=1e-13, atol=0)
    assert gp[0] == 0.0


def _line_integral(f, scale):
    """∫ f over the real line, mapped onto (-π/2, π/2) by Δ = scale·tan θ."""
    g = lambda th: f(scale * math.tan(th)) * scale / math.cos(th) ** 2
    lim = math.pi / 2
    size = quad(lambda th: abs(g(th)), -lim, lim, points=[0.0], limit=400, epsrel=1e-10)[0]
    # the signed integral is near zero, so its tolerance is set relative to the size
    total = quad(g, -lim, lim, points=[0.0], limit=400, epsabs=1e-12 * size, epsrel=0)[0]
    return total, size


@pytest.mark.parametrize("levels", SCHEMES)
def test_g_drift_integral_vanishes(levels):
    gh, h = _args(levels)
    f = lambda d: float(g_drift(d, 0.0, 1e6, 0.5, gh, h.gamma_hole, levels, T1))
    total, size = _line_integral(f, h.gamma_hole)
    assert abs(total) < 1e-8 * size


@pytest.mark.parametrize("levels", SCHEMES)
def test_first_order_absorption_unchanged(levels):
    """The odd correction cannot change α_R at the hole centre (even kernel)."""
    gh, h = _args(levels)
    hw = gh / 2
    kern = lambda d: (hw / math.pi) / (hw**2 + d**2)
    f = lambda d: float(g_drift(d, 0.0, 1e6, 0.5, gh, h.gamma_hole, levels, T1)) * kern(d)
    total, size = _line_integral(f, h.gamma_hole)
    assert abs(total) < 1e-8 * size


@pytest.mark.parametrize("levels", SCHEMES)
def test_g_drift_matches_ode_profile(levels):
    s0 = 0.5
    gh, h = _args(levels, s0)
    T_rg = getattr(levels, "T_rg", T1)
    beta = 1e-3 * h.gamma_hole / T_rg
    prof = drift_profile_ode(s0, levels, T1, gh, beta, n_points=2001, tol=1e-11)
    odd = 0.5 * (prof.g - prof.g[::-1])
    ref = g_drift(prof.u, 0.0, beta, s0, gh, h.gamma_hole, levels, T1)
    assert np.max(np.abs(odd - ref)) < 0.03 * np.max(np.abs(ref))


def test_alphaI_drift_zero_and_scaling():
    levels = ThreeLevelRFEraser(T_rg=4e-3)
    h = HoleShape(0.4, 2e5, 0.3, 1e5)
    assert alphaI_drift(0.0, h, levels, T1, 1.0) == 0.0
    narrow = HoleShape(0.4, 1e5, 0.3, 1e5)
    a1 = alphaI_drift(1e6, h, levels, T1, 1.0)
    a4 = alphaI_drift(2e6, narrow, levels, T1, 1.0)
    assert a4 == pytest.approx(4 * a1, rel=1e-14)


def test_two_level_reduction():
    h = HoleShape(0.3, 2e5, 0.5, 1.5e5)
    beta = 3e6
    two = alphaI_drift(beta, h, TwoLevel(), T1, 2.0)
    reduced = alphaI_drift(beta, h, ThreeLevel(T_rg=0.0, T_gr=math.inf, b_er=1.0, b_eg=0.0), T1, 2.0)
    direct = -(2.0 / 2) * (beta * T1 / h.gamma_hole) * h.d_hole
    assert two == pytest.approx(direct, rel=1e-10)
    assert reduced == pytest.approx(direct, rel=1e-10)


def test_strong_reservoir_limit():
    for T_gr in (math.inf, 8e-3):
        levels = ThreeLevel(T_rg=4e-3, T_gr=T_gr, b_er=0.5, b_eg=0.5)
        K = drift_time_constant(levels, 1e-9)
        r = 4e-3 / T_gr
        assert K / 4e-3 == pytest.approx(1 / (2 * (1 + r)), rel=1e-4)


@pytest.mark.parametrize("levels", SCHEMES)
@pytest.mark.parametrize("s0", [0.1, 1.0])
@pytest.mark.parametrize("xi", [1e-3, 1e-2])
def test_analytic_alphaI_matches_ode(levels, s0, xi):
    gh, h = _args(levels, s0)
    T_rg = getattr(levels, "T_rg", T1)
    beta = xi * h.gamma_hole / T_rg
    prof = drift_profile_ode(s0, levels, T1, gh, beta, n_points=4001, tol=1e-10)
    num = profile_alphaI(prof, gh)
    ana = alphaI_drift(beta, h, levels, T1, 1.0)
    assert num == pytest.approx(ana, rel=0.05)


def test_oracle_rejects_zero_drift():
    with pytest.raises(ParameterError):
        drift_profile_ode(0.5, TwoLevel(), T1, 1e5, 0.0)


def test_drift_formulas_need_ode_schemes():
    from holelock.atomic import FourLevelSym
    with pytest.raises(ParameterError):
        drift_time_constant(FourLevelSym(1e-3, 1e-3, 0.3, 0.4, 0.3), T1)


# ---------------------------------------------------------------------------
# drift error signal
# ---------------------------------------------------------------------------


def test_drift_error_signal_restores(ref_trio, ref_levels):
    assert drift_error_signal(0.0, ref_trio, ref_levels, T1, 1e-3) == 0.0
    c, s = ref_trio.carrier, ref_trio.sideband
    assert c.d_hole / c.gamma_hole > s.d_hole / s.gamma_hole
    for beta in (1e5, -1e5):
        assert drift_error_signal(beta, ref_trio, ref_levels, T1, 1e-3) * beta < 0
    assert drift_phase_difference(1e5, ref_trio, ref_levels, T1) < 0


def test_drift_signal_compares_with_ramp_response(ref_trio, ref_levels):
    """A ramp through T(ω) ≈ C_m iωT_rg leaves a steady error 4PJ0J1·C_m·β·T_rg."""
    beta = 1e-3 * ref_trio.carrier.gamma_hole / 4e-3
    P = 0.23e-3
    J0, J1 = bessel_weights(ref_trio.m)
    drift = drift_error_signal(beta, ref_trio, ref_levels, T1, P)
    ramp = 4 * P * J0 * J1 * mid_band_constant(ref_trio) * beta * 4e-3
    assert drift * ramp > 0
    assert 0.1 < drift / ramp < 10


# ---------------------------------------------------------------------------
# thresholds
# ---------------------------------------------------------------------------


def test_drift_threshold_values():
    assert drift_threshold(0.0) == 1.0
    assert drift_threshold(1e-4) == pytest.approx(1.0, abs=2e-3)
    assert drift_threshold(0.56) == pytest.approx(0.66, abs=0.01)


def test_drift_threshold_monotone():
    m = np.linspace(0.01, 1.08, 300)
    d = np.array([drift_threshold(x) for x in m])
    assert np.all((d > 0) & (d < 1))
    assert np.all(np.diff(d) < 0)


def test_sign_threshold_limits_and_ordering():
    assert sign_threshold(0.0) == 1.0
    assert sign_threshold(1e-3) > 0.99
    for m in np.linspace(0.05, 1.0, 40):
        assert sign_threshold(m) >= drift_threshold(m)


@pytest.mark.parametrize("m", [0.2, 0.56, 0.9])
def test_sign_threshold_bracket_changes_sign(m):
    from holelock.drift import _widths_from_depth, _y_ratio
    d = sign_threshold(m, xtol=1e-8)
    y = _y_ratio(m)
    for dd, sign in ((d - 1e-3, 1), (d + 1e-3, -1)):
        x_c, x_s = _widths_from_depth(dd, y)
        assert sign * (f_of_x(x_c) - f_of_x(x_s)) > 0


def test_oracle_verdicts():
    gh = homogeneous_linewidth(OPT, ThreeLevelRFEraser(T_rg=4e-3))
    lv = ThreeLevelRFEraser(T_rg=4e-3)
    kw = dict(n_points=2001, tol=1e-8)
    assert drift_stability_oracle(0.45, 0.56, lv, T1, gh, **kw).verdict == "stable"
    assert drift_stability_oracle(0.85, 0.56, lv, T1, gh, **kw).verdict == "bistable"


# ---------------------------------------------------------------------------
# beyond first order
# ---------------------------------------------------------------------------


def test_nonlinear_phase_small_drift_limit(ref_trio, ref_levels):
    beta = 1e-3 * ref_trio.carrier.gamma_hole / 4e-3
    ph = nonlinear_drift_phase(ref_trio, ref_levels, T1, [0.0, beta, -beta], n_points=2001,
                               tol=1e-10)
    lin = drift_phase_difference(beta, ref_trio, ref_levels, T1)
    assert ph[0] == 0.0
    assert ph[1] == pytest.approx(lin, rel=0.05)
    assert ph[2] == pytest.approx(-ph[1], rel=1e-3)
