"""Level schemes, saturation and steady-state spectral-hole shapes.

Everything here works in SI units with angular frequencies in rad/s.
Conversions to Hz happen only at the user-facing boundaries (CLI, CSV).

The population dynamics follow a three-level reservoir model: an excited
state ``e`` that decays to the ground state ``g`` (branching ``b_eg``) or to a
reservoir ``r`` (branching ``b_er``), a reservoir that returns to ``g`` on the
time scale ``T_rg`` and an optional ground-state leak ``g -> r`` with time
constant ``T_gr`` (``math.inf`` disables it).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy import constants
from scipy.integrate import solve_ivp

from .errors import NumericalError, ParameterError

_BRANCH_TOL = 1e-12


def _inv(t: float) -> float:
    """Rate for a time constant, with 1/inf == 0 exactly."""
    return 0.0 if math.isinf(t) else 1.0 / t


def _check_branching(*ratios: float) -> None:
    if any(b < 0 for b in ratios):
        raise ParameterError(f"branching ratios must be non-negative, got {ratios}")
    if abs(sum(ratios) - 1.0) > _BRANCH_TOL:
        raise ParameterError(f"branching ratios must sum to 1, got {sum(ratios)!r}")


def _check_time(name: str, value: float, allow_zero: bool = False) -> None:
    if math.isnan(value) or value < 0 or (value == 0 and not allow_zero):
        raise ParameterError(f"{name} must be positive (or inf), got {value!r}")


@dataclass(frozen=True)
class OpticalParams:
    """Optical transition constants.

    Attributes:
        T1: excited-state lifetime [s].
        T2_0: optical coherence time without ground-state relaxation [s].
        dipole: transition dipole moment [C m].
        refr_index: refractive index of the host.
        alpha0L: background optical depth.
    """

    T1: float
    T2_0: float
    dipole: float = 1.0e-32
    refr_index: float = 1.8
    alpha0L: float = 0.66

    def __post_init__(self):
        _check_time("T1", self.T1)
        _check_time("T2_0", self.T2_0)
        if math.isinf(self.T1) or math.isinf(self.T2_0):
            raise ParameterError("T1 and T2_0 must be finite")
        if self.T2_0 > 2 * self.T1 * (1 + 1e-12):
            raise ParameterError("T2_0 cannot exceed 2*T1")
        if self.refr_index < 1:
            raise ParameterError("refractive index must be >= 1")
        if self.alpha0L < 0:
            raise ParameterError("alpha0L must be non-negative")
        if self.dipole <= 0:
            raise ParameterError("dipole moment must be positive")


# ---------------------------------------------------------------------------
# level schemes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoLevel:
    """Closed two-level system; the hole recovers with T1."""

    def reservoir(self):
        # no reservoir: nothing ever decays into it and it never feeds back
        return math.inf, math.inf, 0.0, 1.0


@dataclass(frozen=True)
class ThreeLevel:
    """Three-level scheme with a shelving reservoir.

    ``T_rg`` may be zero only as a formal limit (instant return); such a
    scheme has no population dynamics and cannot be integrated.
    """

    T_rg: float
    T_gr: float = math.inf
    b_er: float = 0.5
    b_eg: float = 0.5

    def __post_init__(self):
        _check_time("T_rg", self.T_rg, allow_zero=True)
        _check_time("T_gr", self.T_gr)
        _check_branching(self.b_er, self.b_eg)

    def reservoir(self):
        return self.T_rg, self.T_gr, self.b_er, self.b_eg


@dataclass(frozen=True)
class ThreeLevelRFEraser:
    """RF-eraser scheme: the RF field equalizes g and r, so T_gr == T_rg."""

    T_rg: float
    b_er: float = 0.5
    b_eg: float = 0.5

    def __post_init__(self):
        _check_time("T_rg", self.T_rg)
        if math.isinf(self.T_rg):
            raise ParameterError("RF eraser needs a finite T_rg")
        _check_branching(self.b_er, self.b_eg)

    @property
    def T_gr(self) -> float:
        return self.T_rg

    def reservoir(self):
        return self.T_rg, self.T_rg, self.b_er, self.b_eg


@dataclass(frozen=True)
class FourLevelAsym:
    """Four-level scheme with an asymmetric RF chain (evaluated via G, R only)."""

    T_cg: float
    T_fc: float
    b_eg: float
    b_ec: float
    b_ef: float

    def __post_init__(self):
        _check_time("T_cg", self.T_cg)
        _check_time("T_fc", self.T_fc)
        _check_branching(self.b_eg, self.b_ec, self.b_ef)

    def reservoir(self):
        raise ParameterError("four-level schemes have no population ODE model")


@dataclass(frozen=True)
class FourLevelSym:
    """Four-level scheme with two symmetric reservoirs (evaluated via G, R only)."""

    T_r1: float
    T_r2: float
    b_er1: float
    b_eg: float
    b_er2: float

    def __post_init__(self):
        _check_time("T_r1", self.T_r1)
        _check_time("T_r2", self.T_r2)
        _check_branching(self.b_er1, self.b_eg, self.b_er2)

    def reservoir(self):
        raise ParameterError("four-level schemes have no population ODE model")


AtomicLevels = Union[TwoLevel, ThreeLevel, ThreeLevelRFEraser, FourLevelAsym, FourLevelSym]


def ground_relaxation_time(levels: AtomicLevels) -> float:
    """Ground-state leak time T_gr (inf when the scheme has none)."""
    return getattr(levels, "T_gr", math.inf)


# ---------------------------------------------------------------------------
# scalar formulas
# ---------------------------------------------------------------------------


def homogeneous_linewidth(opt: OpticalParams, levels: AtomicLevels) -> float:
    """Homogeneous FWHM Γ_h [rad/s] including ground-state relaxation."""
    T_gr = ground_relaxation_time(levels)
    return 2.0 * (1.0 / opt.T2_0 + 0.5 * _inv(T_gr))


def rabi_from_power(P: float, A: float, dipole: float, refr_index: float) -> float:
    """Rabi frequency [rad/s] of a plane wave of power ``P`` over area ``A``."""
    if A <= 0:
        raise ParameterError("beam area must be positive")
    if P < 0:
        raise ParameterError("power must be non-negative")
    return dipole / constants.hbar * math.sqrt(2 * constants.mu_0 * constants.c * P / (refr_index * A))


def area_for_rabi(rabi: float, P: float, dipole: float, refr_index: float) -> float:
    """Inverse of :func:`rabi_from_power`: the area giving Rabi frequency ``rabi`` at power ``P``."""
    if rabi <= 0 or P <= 0:
        raise ParameterError("rabi frequency and power must be positive")
    return (dipole / constants.hbar) ** 2 * 2 * constants.mu_0 * constants.c * P / (refr_index * rabi**2)


def saturation(rabi, T1: float, T2: float):
    """Resonant saturation parameter s0 = |Ω0|² T1 T2."""
    return np.abs(rabi) ** 2 * T1 * T2


def trapping_params(levels: AtomicLevels, T1: float) -> tuple[float, float]:
    """Ground fraction G and trapping parameter R for a level scheme."""
    if isinstance(levels, TwoLevel):
        return 1.0, 1.0
    if isinstance(levels, ThreeLevelRFEraser):
        return 0.5, 0.5 * (1 + levels.b_er * levels.T_rg / T1)
    if isinstance(levels, ThreeLevel):
        r = levels.T_rg * _inv(levels.T_gr)
        G = 1.0 / (1.0 + r)
        R = (1.0 + levels.b_er * levels.T_rg / T1) * G
        return G, R
    if isinstance(levels, FourLevelAsym):
        num = 2 * levels.b_ec * levels.T_cg + levels.b_ef * (2 * levels.T_cg + levels.T_fc)
        return 1 / 3, (1 + num / T1) / 3
    if isinstance(levels, FourLevelSym):
        num = levels.T_r1 * levels.b_er1 + levels.T_r2 * levels.b_er2
        return 1 / 3, (1 + num / T1) / 3
    raise ParameterError(f"unknown level scheme {levels!r}")


@dataclass(frozen=True)
class HoleShape:
    """Population hole burned by a monochromatic field.

    Attributes:
        d_hole: relative depth of the population hole.
        gamma_hole: FWHM of the population hole [rad/s].
        s0: resonant saturation parameter that burned it.
        gamma_h: homogeneous linewidth [rad/s].
        delta0: hole centre [rad/s].
    """

    d_hole: float
    gamma_hole: float
    s0: float
    gamma_h: float
    delta0: float = 0.0

    @property
    def x(self) -> float:
        """Width ratio Γ_hole/Γ_h."""
        return self.gamma_hole / self.gamma_h


def hole_shape(s0: float, R: float, gamma_h: float, delta0: float = 0.0) -> HoleShape:
    """Steady-state hole depth and width for saturation ``s0`` and trapping ``R``."""
    if s0 < 0:
        raise ParameterError("saturation parameter must be non-negative")
    if gamma_h <= 0:
        raise ParameterError("homogeneous linewidth must be positive")
    q = (1 + R) * s0 / 2
    if q <= -1:
        raise ParameterError("1 + (1+R) s0/2 must be positive")
    return HoleShape(d_hole=q / (1 + q), gamma_hole=gamma_h * math.sqrt(1 + q), s0=s0,
                     gamma_h=gamma_h, delta0=delta0)


def measured_width_depth(hole: HoleShape) -> tuple[float, float]:
    """Width and depth of the hole as seen in an absorption scan.

    The probe itself has the homogeneous width, so the scan reports
    ``Γ_hole + Γ_h`` and a correspondingly reduced depth.
    """
    g, gh = hole.gamma_hole, hole.gamma_h
    return g + gh, g * hole.d_hole / (g + gh)


# ---------------------------------------------------------------------------
# populations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PopulationState:
    """Occupation probabilities (scalars or arrays of equal shape)."""

    rho_e: np.ndarray
    rho_g: np.ndarray
    rho_r: np.ndarray

    @property
    def total(self):
        return self.rho_e + self.rho_g + self.rho_r


def steady_state_populations(s, levels: AtomicLevels, T1: float) -> PopulationState:
    """Steady-state populations under a constant (possibly detuned) drive ``s``.

    For four-level schemes the two reservoirs are lumped into ``rho_r``.
    """
    s = np.asarray(s, dtype=float)
    G, R = trapping_params(levels, T1)
    D = s / 2 * (1 + R) + 1
    rho_e = G * (s / 2) / D
    rho_g = G * (s / 2 + 1) / D
    if isinstance(levels, (ThreeLevel, ThreeLevelRFEraser)):
        T_rg, T_gr, b_er, _ = levels.reservoir()
        r = T_rg * _inv(T_gr)
        rho_r = G * (r * (s / 2 + 1) + T_rg * b_er / T1 * (s / 2)) / D
    else:
        rho_r = 1.0 - rho_e - rho_g
    return PopulationState(rho_e, rho_g, rho_r)


@dataclass(frozen=True)
class PopulationTrajectory:
    """Time series of the populations from :func:`integrate_populations`."""

    t: np.ndarray
    rho_e: np.ndarray
    rho_g: np.ndarray
    rho_r: np.ndarray
    nfev: int = 0

    def final(self) -> PopulationState:
        return PopulationState(self.rho_e[-1], self.rho_g[-1], self.rho_r[-1])


def _rate_constants(levels: AtomicLevels):
    T_rg, T_gr, b_er, b_eg = levels.reservoir()
    if T_rg == 0:
        raise ParameterError("T_rg = 0 is a formal limit and cannot be integrated")
    return _inv(T_rg), _inv(T_gr), b_er, b_eg


def population_rhs(levels: AtomicLevels, T1: float, s_of_t: Callable[[float], float]):
    """Right-hand side and Jacobian of the population equations.

    Returns ``(rhs, jac)`` suitable for :func:`scipy.integrate.solve_ivp`.
    """
    k_rg, k_gr, b_er, b_eg = _rate_constants(levels)
    k1 = 1.0 / T1

    def rhs(t, y):
        s = s_of_t(t)
        if not math.isfinite(s):
            raise NumericalError(f"drive is not finite at t = {t!r}")
        e, g, r = y
        pump = 0.5 * s * (e - g)
        return np.array([
            -k1 * (pump + e),
            k1 * (pump + b_eg * e) - k_gr * g + k_rg * r,
            k1 * b_er * e + k_gr * g - k_rg * r,
        ])

    def jac(t, y):
        s = s_of_t(t)
        return np.array([
            [-k1 * (0.5 * s + 1), 0.5 * k1 * s, 0.0],
            [k1 * (0.5 * s + b_eg), -0.5 * k1 * s - k_gr, k_rg],
            [k1 * b_er, k_gr, -k_rg],
        ])

    return rhs, jac


def integrate_populations(
    levels: AtomicLevels,
    T1: float,
    s_of_t: Callable[[float], float],
    t_span: Sequence[float],
    y0: Sequence[float] | None = None,
    tol: float = 1e-8,
    t_eval: np.ndarray | None = None,
    method: str = "Radau",
    atol: float | None = None,
) -> PopulationTrajectory:
    """Integrate the population equations under a time-dependent drive.

    Args:
        levels: level scheme (two- or three-level variants only).
        T1: excited-state lifetime [s].
        s_of_t: saturation parameter seen by the atom as a function of time.
        t_span: ``(t0, t1)`` integration interval [s].
        y0: initial ``(rho_e, rho_g, rho_r)``; defaults to the undriven state.
        tol: relative tolerance of the adaptive step control.
        t_eval: optional output times.
        method: any :func:`solve_ivp` method.  The default is an implicit
            Runge-Kutta scheme because T1 and T_rg can differ by 1e3 or more.
        atol: absolute tolerance, defaults to ``tol * 1e-3``.

    Raises:
        NumericalError: if the integrator fails (e.g. step-size underflow).
    """
    if tol <= 0:
        raise ParameterError("tolerance must be positive")
    rhs, jac = population_rhs(levels, T1, s_of_t)
    if y0 is None:
        st = steady_state_populations(0.0, levels, T1)
        y0 = (float(st.rho_e), float(st.rho_g), float(st.rho_r))
    kwargs = {}
    if method in ("Radau", "BDF", "LSODA"):
        kwargs["jac"] = jac
    sol = solve_ivp(rhs, tuple(t_span), np.asarray(y0, dtype=float), method=method, rtol=tol,
                    atol=tol * 1e-3 if atol is None else atol, t_eval=t_eval, **kwargs)
    if not sol.success:
        raise NumericalError(f"population integration failed: {sol.message}")
    return PopulationTrajectory(sol.t, sol.y[0], sol.y[1], sol.y[2], nfev=sol.nfev)
