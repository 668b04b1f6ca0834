"""First-order theory of a laser that drifts linearly while locked.

A drift rate β [rad/s²] makes the laser sweep across its own hole.  To first
order in ``ξ = β T_rg / Γ_hole`` the hole acquires an odd distortion
(:func:`g_drift`) and hence a dispersion at its centre (:func:`alphaI_drift`).
Whether that dispersion pushes the laser back or further away decides if a
zero-drift lock is stable (:func:`drift_threshold`).

The module also contains a brute-force oracle that integrates the population
equations for a laser ramp and reads the same quantities off the numerical
hole profile.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import bisect, brentq

from .atomic import (AtomicLevels, HoleShape, ThreeLevel, ThreeLevelRFEraser, TwoLevel,
                     _inv, integrate_populations, steady_state_populations, trapping_params)
from .errors import NumericalError, ParameterError
from .pdh import HoleTrio, bessel_weights, eta_phi, f_of_x


@dataclass(frozen=True)
class DriftParams:
    """Drift rate β [rad/s²] and its dimensionless form ξ = β T_rg / Γ_hole."""

    beta: float
    xi: float

    @classmethod
    def from_beta(cls, beta: float, T_rg: float, gamma_hole: float, gamma_h: float | None = None):
        xi = beta * T_rg / gamma_hole
        if abs(xi) > 0.1:
            warnings.warn(f"|xi| = {abs(xi):.3g} is outside the first-order regime",
                          RuntimeWarning, stacklevel=2)
        if gamma_h is not None and abs(beta) > 0.01 * gamma_h**2:
            warnings.warn("drift is not adiabatic on the coherence time scale",
                          RuntimeWarning, stacklevel=2)
        return cls(beta, xi)


def _drift_reservoir(levels: AtomicLevels):
    """(T_rg, T_gr, b_er, b_eg) entering the drift formulas.

    A two-level system is the limit of an instantly returning reservoir that
    takes every decay.
    """
    if isinstance(levels, TwoLevel):
        return 0.0, math.inf, 1.0, 0.0
    if isinstance(levels, (ThreeLevel, ThreeLevelRFEraser)):
        return levels.T_rg, levels.T_gr, levels.b_er, levels.b_eg
    raise ParameterError("drift formulas are available for two- and three-level schemes only")


# ---------------------------------------------------------------------------
# expansion matrices
# ---------------------------------------------------------------------------


class ExpansionMatrices(NamedTuple):
    A: np.ndarray
    A_inv: np.ndarray


def matrix_A(s: float, levels: AtomicLevels, T1: float, check: bool = True) -> ExpansionMatrices:
    """Matrix of the drift series and its closed-form inverse.

    Rows of ``A`` act on ``(ρe, ρg, ρr)``; the last row expresses population
    conservation.  ``A⁻¹ (0, 0, 1)ᵀ`` gives the steady state.
    """
    T_rg, T_gr, b_er, _ = _drift_reservoir(levels)
    if T_rg <= 0:
        raise ParameterError("the expansion matrix needs T_rg > 0")
    a = T_rg / T1
    r = T_rg * _inv(T_gr)
    A = np.array([
        [a * (s / 2 + 1), -a * s / 2, 0.0],
        [-a * b_er, -r, 1.0],
        [1.0, 1.0, 1.0],
    ])
    G, R = trapping_params(levels, T1)
    pref = G / (s / 2 * (1 + R) + 1) / a
    A_inv = pref * np.array([
        [1 + r, -a * s / 2, a * s / 2],
        [-1 - b_er * a, -a * (s / 2 + 1), a * (s / 2 + 1)],
        [b_er * a - r, a * (s + 1), a * (r * (s / 2 + 1) + b_er * a * s / 2)],
    ])
    if check:
        err = np.max(np.abs(A @ A_inv - np.eye(3)))
        if not err < 1e-10:
            raise NumericalError(f"closed-form inverse failed the identity check ({err:.2e})")
    return ExpansionMatrices(A, A_inv)


# ---------------------------------------------------------------------------
# first-order drift corrections
# ---------------------------------------------------------------------------


def drift_time_constant(levels: AtomicLevels, T1: float) -> float:
    """Effective time K [s] with α_I(Δ0) = -α0 β K d_hole / Γ_hole.

    For a two-level system K = T1/2; for a long-lived reservoir fed strongly
    (b_er T_rg ≫ T1) it approaches T_rg / (2(1 + T_rg/T_gr)).
    """
    T_rg, T_gr, b_er, b_eg = _drift_reservoir(levels)
    r = T_rg * _inv(T_gr)
    num = T1 * (1 + 1.5 * r + 0.5 * r * r) + 0.5 * T_rg * (b_er * (1 + T_rg / T1) - b_eg * r)
    return num / ((1 + r) * (2 + r + b_er * T_rg / T1))


def g_drift(delta, delta0: float, beta: float, s0: float, gamma_h: float, gamma_hole: float,
            levels: AtomicLevels, T1: float):
    """First-order drift correction to the normalised hole shape g(Δ)."""
    T_rg, T_gr, b_er, b_eg = _drift_reservoir(levels)
    r = T_rg * _inv(T_gr)
    u = np.asarray(delta, dtype=float) - delta0
    bracket = T1 * (1 + 1.5 * r + 0.5 * r * r) + 0.5 * T_rg * (b_er * (1 + T_rg / T1) - b_eg * r)
    shape = s0 * gamma_h**2 * u * (gamma_h**2 / 4 + u**2) / (gamma_hole**2 / 4 + u**2) ** 3
    return beta * bracket / (2 * (1 + r) ** 2) * shape


def alphaI_drift(beta: float, hole: HoleShape, levels: AtomicLevels, T1: float, alpha0: float) -> float:
    """Drift-induced imaginary absorption length at the hole centre."""
    return -alpha0 * beta * drift_time_constant(levels, T1) * hole.d_hole / hole.gamma_hole


def drift_phase_difference(beta: float, trio: HoleTrio, levels: AtomicLevels, T1: float) -> float:
    """φ_c - φ_s [rad] produced by drift at the carrier and sideband hole centres."""
    K = drift_time_constant(levels, T1)
    c, s = trio.carrier, trio.sideband
    return -(trio.alpha0L / 2) * beta * K * (c.d_hole / c.gamma_hole - s.d_hole / s.gamma_hole)


def drift_error_signal(beta: float, trio: HoleTrio, levels: AtomicLevels, T1: float,
                       P_in: float, m: float | None = None) -> float:
    """Demodulated (sin-quadrature) error power [W] caused by a steady drift β.

    It opposes β, i.e. restores the zero-drift lock, exactly when
    ``d_c/Γ_c > d_s/Γ_s``.  The normalisation matches :func:`holelock.pdh.transfer`.
    """
    m = trio.m if m is None else m
    J0, J1 = bessel_weights(m)
    ec, _ = eta_phi(trio, "carrier", 0.0)
    es, _ = eta_phi(trio, "sideband", 0.0)
    return float(4 * P_in * J0 * J1 * ec * es * math.sin(drift_phase_difference(beta, trio, levels, T1)))


def _y_ratio(m: float) -> float:
    J0, J1 = bessel_weights(m)
    return float(J1**2 / J0**2)


def drift_threshold(m: float) -> float:
    """Largest measured carrier depth for which a zero-drift lock is stable."""
    y = _y_ratio(m)
    if y <= 0:
        return 1.0
    if y >= 1:
        return float("nan")
    return 1 - math.sqrt((y ** (2 / 3) - y) / (1 - y))


def _widths_from_depth(d_meas: float, y: float):
    x_c = 1.0 / (1.0 - d_meas)
    x_s = math.sqrt(1 + y * (x_c**2 - 1))
    return x_c, x_s


def sign_threshold(m: float, gamma_h: float | None = None, xtol: float = 1e-4) -> float:
    """Measured carrier depth at which the mid-band slope bracket f(x_c) - f(x_s) changes sign.

    ``gamma_h`` is accepted for interface symmetry; the threshold is
    dimensionless and does not depend on it.
    """
    y = _y_ratio(m)
    if y <= 0:
        return 1.0
    if y >= 1:
        return float("nan")

    def h(d):
        x_c, x_s = _widths_from_depth(d, y)
        return float(f_of_x(x_c) - f_of_x(x_s))

    lo, hi = 1e-9, 1 - 1e-9
    if h(hi) > 0:
        return 1.0
    return float(bisect(h, lo, hi, xtol=xtol))


# ---------------------------------------------------------------------------
# brute-force oracle
# ---------------------------------------------------------------------------


class DriftProfile(NamedTuple):
    u: np.ndarray       # Δ - laser frequency at the sampling instant [rad/s]
    g: np.ndarray       # normalised hole shape (ρg - ρe)/G
    beta: float


def drift_profile_ode(s0: float, levels: AtomicLevels, T1: float, gamma_h: float, beta: float,
                      span: float = 3.0, n_points: int = 6001, relax: float = 10.0,
                      tol: float = 1e-10) -> DriftProfile:
    """Hole profile seen from a laser that drifts at rate ``beta``.

    Protocol: the atom starts undriven, is relaxed for ``relax * T_rg`` at the
    detuning where the ramp begins, and is then swept across by the laser
    from ``+span`` to ``-span`` hole widths (for β > 0; mirrored for β < 0).
    Because only ``Δ - βt`` matters, one atom traces out the whole profile.
    """
    if beta == 0:
        raise ParameterError("the oracle needs a non-zero drift rate")
    G, R = trapping_params(levels, T1)
    gamma_hole = gamma_h * math.sqrt(1 + (1 + R) * s0 / 2)
    U = span * gamma_hole
    hw2 = gamma_h**2 / 4

    def s_of_u(u):
        return s0 * hw2 / (hw2 + u * u)

    T_rg = getattr(levels, "T_rg", T1) or T1
    st = steady_state_populations(0.0, levels, T1)
    y0 = [float(st.rho_e), float(st.rho_g), float(st.rho_r)]
    u_start = U if beta > 0 else -U
    pre = integrate_populations(levels, T1, lambda t: s_of_u(u_start), (0.0, relax * T_rg), y0=y0,
                                tol=tol)
    u_grid = np.linspace(-U, U, n_points)
    t_eval = np.sort(-(u_grid - u_start) / beta)
    t_eval[0], t_eval[-1] = 0.0, 2 * U / abs(beta)
    start = pre.final()
    traj = integrate_populations(levels, T1, lambda t: s_of_u(u_start - beta * t),
                                 (0.0, 2 * U / abs(beta)),
                                 y0=[start.rho_e, start.rho_g, start.rho_r], tol=tol, t_eval=t_eval)
    u = u_start - beta * traj.t
    order = np.argsort(u)
    g = (traj.rho_g - traj.rho_e)[order] / G
    return DriftProfile(u_grid, g, beta)


def profile_alphaI(profile: DriftProfile, gamma_h: float) -> float:
    """α_I/α0 at the laser frequency, from a sampled hole profile.

    Only the odd part of the profile contributes; the grid must be symmetric.
    """
    u, g = profile.u, profile.g
    g_odd = 0.5 * (g - g[::-1])
    return float(-trapezoid(g_odd * u / (gamma_h**2 / 4 + u**2), u) / math.pi)


class OracleResult(NamedTuple):
    verdict: str                  # "stable", "bistable" or "indeterminate"
    phase_diff_pos: float         # φ_c - φ_s at +β [rad]
    phase_diff_neg: float         # φ_c - φ_s at -β [rad]
    s0: float
    beta: float


def _oracle_phase_difference(s0, m, levels, T1, gamma_h, alpha0L, beta, **kw) -> float:
    J0, J1 = bessel_weights(m)
    a_c = profile_alphaI(drift_profile_ode(J0**2 * s0, levels, T1, gamma_h, beta, **kw), gamma_h)
    a_s = profile_alphaI(drift_profile_ode(J1**2 * s0, levels, T1, gamma_h, beta, **kw), gamma_h)
    return alpha0L / 2 * (a_c - a_s)


def drive_for_depth(d_meas: float, m: float, levels: AtomicLevels, T1: float) -> float:
    """Saturation parameter s0 that gives measured carrier depth ``d_meas`` at index ``m``."""
    if not 0 < d_meas < 1:
        raise ParameterError("measured depth must lie in (0, 1)")
    _, R = trapping_params(levels, T1)
    J0, _ = bessel_weights(m)
    x_c = 1 / (1 - d_meas)
    return float(2 * (x_c**2 - 1) / ((1 + R) * J0**2))


def drift_stability_oracle(d_meas_target: float, m: float, levels: AtomicLevels, T1: float,
                           gamma_h: float, alpha0L: float = 1.0, xi: float = 1e-3,
                           **kw) -> OracleResult:
    """Classify zero-drift stability by integrating the populations.

    The drive is set so that the carrier hole has the requested measured
    depth.  For a small drift ±β (``ξ`` relative to the carrier hole) the
    error-signal phase ``φ_c - φ_s`` is reconstructed from the numerical hole
    profiles; the lock is stable if it opposes β for both signs.
    """
    s0 = drive_for_depth(d_meas_target, m, levels, T1)
    G, R = trapping_params(levels, T1)
    J0, _ = bessel_weights(m)
    gamma_c = gamma_h * math.sqrt(1 + (1 + R) * J0**2 * s0 / 2)
    T_rg = levels.T_rg if hasattr(levels, "T_rg") else T1
    beta = xi * gamma_c / T_rg
    pos = _oracle_phase_difference(s0, m, levels, T1, gamma_h, alpha0L, beta, **kw)
    neg = _oracle_phase_difference(s0, m, levels, T1, gamma_h, alpha0L, -beta, **kw)
    if pos < 0 < neg:
        verdict = "stable"
    elif neg < 0 < pos:
        verdict = "bistable"
    else:
        verdict = "indeterminate"
    return OracleResult(verdict, pos, neg, s0, beta)


def oracle_threshold(m: float, levels: AtomicLevels, T1: float, gamma_h: float,
                     xi: float = 1e-3, bracket=(0.05, 0.97), xtol: float = 2e-3, **kw) -> float:
    """Measured carrier depth where the oracle verdict changes from stable to bistable."""

    def h(d):
        r = drift_stability_oracle(d, m, levels, T1, gamma_h, xi=xi, **kw)
        return 0.5 * (r.phase_diff_pos - r.phase_diff_neg)

    lo, hi = bracket
    if h(lo) * h(hi) > 0:
        raise NumericalError("oracle verdict does not change sign inside the bracket")
    return float(brentq(h, lo, hi, xtol=xtol))


def nonlinear_drift_phase(trio: HoleTrio, levels: AtomicLevels, T1: float, betas,
                          n_points: int = 4001, tol: float = 1e-9) -> np.ndarray:
    """φ_c - φ_s [rad] for steady drifts of arbitrary size, from the population ODEs.

    Unlike :func:`drift_phase_difference` this is not limited to small ξ; the
    sweep window grows with the lag ``β T_rg`` so the trailing edge of the
    hole stays inside it.  Used by the loop simulator's drift mode.
    """
    T_rg = levels.T_rg if hasattr(levels, "T_rg") else T1
    out = []
    for beta in np.asarray(betas, dtype=float):
        if beta == 0:
            out.append(0.0)
            continue
        vals = []
        for hole in (trio.carrier, trio.sideband):
            xi = abs(beta) * T_rg / hole.gamma_hole
            prof = drift_profile_ode(hole.s0, levels, T1, trio.gamma_h, beta,
                                     span=3.0 + 6.0 * xi, n_points=n_points, tol=tol)
            vals.append(profile_alphaI(prof, trio.gamma_h))
        out.append(trio.alpha0L / 2 * (vals[0] - vals[1]))
    return np.array(out)
