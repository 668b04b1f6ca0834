import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from holelock.analysis import (fid_phase_stats, gate_fidelity, heterodyne_phase_extract,
                               hole_asymmetry, kramers_kronig, phase_error_epsilon,
                               principal_value, unwrap_degrees)
from holelock.atomic import ThreeLevelRFEraser, hole_shape, trapping_params
from holelock.drift import alphaI_drift, drift_profile_ode, profile_alphaI
from holelock.errors import ParameterError
from holelock.lineshape import Lorentzian, background_alpha

from .conftest import sinh_grid

T1 = 150e-6

# ---------------------------------------------------------------------------
# Kramers-Kronig
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def lorentz_pair():
    w = sinh_grid(2000, 8001, 0.5)
    ar, ai = background_alpha(Lorentzian(1.0), 1.0, 1.0, w)
    return w, ar, ai


def test_kk_lorentzian_pair(lorentz_pair):
    w, ar, ai = lorentz_pair
    c = np.abs(w) < 5
    assert np.max(np.abs(kramers_kronig(w, ar) - ai)[c]) < 0.01 * ai.max()
    back = kramers_kronig(w, ai, direction="I_to_R")
    assert np.max(np.abs(back - ar)[c]) < 0.01 * ar.max()


def test_kk_round_trip(lorentz_pair):
    w, ar, _ = lorentz_pair
    c = np.abs(w) < 5
    rt = kramers_kronig(w, kramers_kronig(w, ar), direction="I_to_R")
    assert np.max(np.abs(rt - ar)[c]) < 0.02 * ar.max()


def test_kk_symmetric_input_gives_odd_output():
    w = np.linspace(-50, 50, 2001)
    ar = 1.0 / (1 + w**2) + 0.3 / (1 + (w / 4) ** 2)
    ai = kramers_kronig(w, ar)
    assert np.allclose(ai, -ai[::-1], atol=1e-12)
    assert ai[1000] == pytest.approx(0.0, abs=1e-12)


def test_kk_flat_background_needs_baseline():
    w = np.linspace(-10, 10, 401)
    flat = np.full_like(w, 2.0)
    assert np.max(np.abs(kramers_kronig(w, flat, baseline="edges"))) == 0.0
    assert np.max(np.abs(kramers_kronig(w, flat, baseline=2.0))) == 0.0
    assert np.max(np.abs(kramers_kronig(w, flat))) > 0.1


def test_kk_validation():
    with pytest.raises(ParameterError):
        kramers_kronig([0.0, 1.0, 1.0], [1.0, 1.0, 1.0])
    with pytest.raises(ParameterError):
        kramers_kronig([0.0, 1.0], [1.0, 1.0])
    with pytest.raises(ParameterError):
        kramers_kronig([0.0, 1.0, 2.0], [1.0, np.nan, 1.0])
    with pytest.raises(ParameterError):
        kramers_kronig([0.0, 1.0, 2.0], [1.0, 1.0, 1.0], direction="sideways")
    with pytest.raises(ParameterError):
        kramers_kronig([0.0, 1.0, 2.0], [1.0, 1.0, 1.0], baseline="median")


def test_principal_value_of_odd_kernel():
    # PV ∫_{-a}^{a} 1/(x - x0) dx = ln((a - x0)/(a + x0))
    w = np.linspace(-1, 1, 2001)
    x0 = np.array([-0.5, 0.0, 0.3])
    pv = principal_value(w, np.ones_like(w), x0)
    assert np.allclose(pv, np.log((1 - x0) / (1 + x0)), atol=1e-10)


def _convolved_spectrum(profile, gh, w):
    """Complex response of a sampled hole profile seen through the homogeneous line."""
    u = profile.u
    dg = profile.g - 1.0
    hw = gh / 2
    x = u[None, :] - w[:, None]
    den = hw * hw + x * x
    ar = trapezoid(dg * hw / den, u, axis=1) / math.pi
    ai = -trapezoid(dg * x / den, u, axis=1) / math.pi
    return ar, ai


@pytest.mark.parametrize("xi", [3e-3, -3e-3])
def test_drifting_hole_asymmetry_recovered(xi):
    levels = ThreeLevelRFEraser(T_rg=4e-3)
    gh = 2 * math.pi * 17.7e3
    s0 = 1.0
    _, R = trapping_params(levels, T1)
    h = hole_shape(s0, R, gh)
    beta = xi * h.gamma_hole / levels.T_rg
    prof = drift_profile_ode(s0, levels, T1, gh, beta, n_points=3001, tol=1e-10)
    w = sinh_grid(200 * h.gamma_hole, 4001, 0.05 * gh)
    ar, ai = _convolved_spectrum(prof, gh, w)
    direct = profile_alphaI(prof, gh)
    assert ai[np.argmin(np.abs(w))] == pytest.approx(direct, rel=1e-3)
    est = hole_asymmetry(w, ar, 0.0)
    assert est == pytest.approx(direct, rel=0.05)
    assert est == pytest.approx(alphaI_drift(beta, h, levels, T1, 1.0), rel=0.05)
    assert np.sign(est) == -np.sign(xi)


# ---------------------------------------------------------------------------
# heterodyne extraction
# ---------------------------------------------------------------------------


def test_heterodyne_round_trip():
    dt, n, f_het = 10e-9, 20000, 5e6
    t = np.arange(n) * dt
    phi = 0.8 * np.sin(2 * math.pi * 20e3 * t) + 0.3
    amp = 1.5 * (1 + 0.2 * np.cos(2 * math.pi * 10e3 * t))      # periodic over the record
    res = heterodyne_phase_extract(amp * np.cos(2 * math.pi * f_het * t + phi), dt, f_het, 2e6)
    core = slice(n // 10, -n // 10)
    assert np.max(np.abs(res.phase[core] - phi[core])) < 1e-2
    assert np.max(np.abs(res.amplitude[core] / amp[core] - 1)) < 1e-2
    assert res.t[1] == pytest.approx(dt)


def test_heterodyne_validation():
    with pytest.raises(ParameterError):
        heterodyne_phase_extract(np.zeros(100), 1e-8, 49e6, 4e6)
    with pytest.raises(ParameterError):
        heterodyne_phase_extract(np.zeros(3), 1e-8, 1e6, 1e5)
    with pytest.raises(ParameterError):
        heterodyne_phase_extract(np.zeros(100), -1e-8, 1e6, 1e5)


def test_unwrap_degrees():
    x = np.array([170.0, -175.0, -160.0, 175.0])
    assert np.allclose(unwrap_degrees(x), [170, 185, 200, 175])


# ---------------------------------------------------------------------------
# FID phase statistics
# ---------------------------------------------------------------------------


def test_fid_detection_noise_recovered():
    rng = np.random.default_rng(2)
    n = 4000
    # detection noise is negligible while the decay signal is strong, then grows
    sig = np.r_[np.zeros(10), np.linspace(1.0, 5.0, 20)]
    x = sig[:, None] * rng.standard_normal((len(sig), n))
    r = fid_phase_stats(x, 1e-6)
    assert np.allclose(r.std_n[12:], sig[12:], rtol=0.1)
    assert np.all(r.std_phidiff[12:] < 0.5 * r.std_xdiff[12:])


def test_fid_random_walk():
    rng = np.random.default_rng(3)
    nb, n, dt, D = 40, 4000, 1e-6, 4.0e6        # D in deg²/s
    steps = math.sqrt(D * dt) * rng.standard_normal((nb, n))
    steps[0] = 0
    x = np.cumsum(steps, axis=0)
    r = fid_phase_stats(x, dt)
    assert r.noise_constant == pytest.approx(D * dt, rel=0.1)
    assert np.allclose(r.std_phidiff[5:], np.sqrt(D * r.t[5:]), rtol=0.15)
    assert np.all(r.std_n < 0.3 * math.sqrt(D * dt))


def _reference_fid_record():
    rng = np.random.default_rng(7)
    nb, n, dt = 29, 100, 500e-9
    t = np.arange(nb) * dt
    z = rng.standard_normal(n)
    z = (z - z.mean()) / z.std(ddof=1)
    phi = np.outer(2.0 + 2e5 * t, z)
    phi[0] = 0
    sig = np.linspace(0.3, 4.0, nb)
    return phi + sig[:, None] * rng.standard_normal((nb, n)), dt


def test_fid_constant_offset_is_irrelevant():
    x, dt = _reference_fid_record()
    a, b = fid_phase_stats(x, dt), fid_phase_stats(x + 37.0, dt)
    for key in ("std_x", "std_n", "std_phidiff", "std_f"):
        assert np.allclose(getattr(a, key), getattr(b, key), rtol=1e-10, equal_nan=True)
    assert a.fit == pytest.approx(b.fit, rel=1e-10)


def test_fid_reference_fixture():
    # frozen outputs of the estimator on a seeded synthetic record
    x, dt = _reference_fid_record()
    r = fid_phase_stats(x + 37.0, dt)
    assert r.fit[0] == pytest.approx(2.115, abs=5e-3)
    assert r.fit[1] == pytest.approx(2.079e5, rel=2e-3)
    assert float(r.std_f_fit(10e-6)) == pytest.approx(1165, rel=2e-3)
    assert np.isnan(r.std_f[0])
    cols = r.as_columns()
    assert len(cols) == 8 and all(len(v) == 29 for v in cols.values())


def test_fid_wrapped_input():
    x, dt = _reference_fid_record()
    wrapped = (x + 170.0 + 180.0) % 360.0 - 180.0
    a, b = fid_phase_stats(x, dt), fid_phase_stats(wrapped, dt)
    assert np.allclose(a.std_phidiff, b.std_phidiff, atol=1e-9)


def test_fid_validation():
    with pytest.raises(ParameterError):
        fid_phase_stats(np.zeros(10), 1e-6)
    with pytest.raises(ParameterError):
        fid_phase_stats(np.zeros((2, 10)), 1e-6)
    with pytest.raises(ParameterError):
        fid_phase_stats(np.zeros((10, 10)), 0.0)


# ---------------------------------------------------------------------------
# gate fidelity
# ---------------------------------------------------------------------------


def test_fidelity_reference_value():
    assert gate_fidelity(0.5, math.radians(10)) == pytest.approx(0.992419, abs=1e-6)
    assert gate_fidelity(0.5, 0.0) == 1.0


@given(a2=st.floats(0.0, 1.0), rms=st.floats(0.0, 1.0))
def test_fidelity_bounds(a2, rms):
    f = gate_fidelity(a2, rms)
    assert 0.0 <= f <= 1.0
    assert f >= gate_fidelity(0.5, rms) - 1e-15


@pytest.mark.parametrize("a2", [0.0, 1.0])
def test_fidelity_of_eigenstates(a2):
    assert gate_fidelity(a2, 0.7) == 1.0


@pytest.mark.parametrize("rms", [0.01, 0.1, 0.5])
def test_tophat_closed_form_matches_quadrature(rms):
    a = math.sqrt(3) * rms
    box = lambda p: 1.0 if abs(p) <= a else 0.0
    num = phase_error_epsilon(rms, lambda p: box(p))
    assert num == pytest.approx(phase_error_epsilon(rms, "tophat"), abs=1e-6)
    gauss = lambda p: math.exp(-p * p / (2 * rms * rms))
    assert phase_error_epsilon(rms, gauss) == pytest.approx(phase_error_epsilon(rms, "gaussian"),
                                                             abs=1e-6)


def test_fidelity_validation():
    with pytest.raises(ParameterError):
        gate_fidelity(1.5, 0.1)
    with pytest.raises(ParameterError):
        phase_error_epsilon(-0.1)
    with pytest.raises(ParameterError):
        phase_error_epsilon(0.1, "cauchy")
