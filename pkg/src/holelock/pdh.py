"""Pound-Drever-Hall signals from a carrier hole and two sideband holes.

Conventions
-----------
* ``transfer`` returns T(ω) in seconds, *before* the ``4 P_in J0 J1``
  prefactor: a phase modulation ``ε sin(ωt)`` of the laser produces a
  demodulated power ``4 P_in J0 J1 Re{T(ω) εω e^{iωt}}``.
* With the usual hole ordering (carrier wider than the sidebands) T(ω) is a
  *negative* real number times ``iω``, 1 and ``1/iω`` in the low, middle and
  high band.  The overall minus sign is absorbed in the loop sign, so the
  phases quoted for a correctly signed loop are those of ``-T``; see
  :func:`loop_phase_deg`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import j0 as _j0
from scipy.special import j1 as _j1

from .atomic import (AtomicLevels, HoleShape, OpticalParams, area_for_rabi, hole_shape,
                     homogeneous_linewidth, measured_width_depth, rabi_from_power,
                     saturation, trapping_params)
from .errors import ParameterError

#: Largest modulation index for which first-order sidebands are kept alone.
M_SIDEBAND_LIMIT = 1.2


@dataclass(frozen=True)
class Modulation:
    """Phase modulation: angular frequency ``omega_m`` [rad/s], index ``m``, power ``P_in`` [W]."""

    omega_m: float
    m: float
    P_in: float = 1e-3

    def __post_init__(self):
        if self.m < 0:
            raise ParameterError("modulation index must be non-negative")
        if self.m > M_SIDEBAND_LIMIT:
            warnings.warn("modulation index above 1.2: second-order sidebands are not negligible",
                          RuntimeWarning, stacklevel=2)
        if self.P_in < 0:
            raise ParameterError("power must be non-negative")


def bessel_weights(m):
    """Carrier and first-sideband field amplitudes (J0(m), J1(m))."""
    return _j0(m), _j1(m)


class StaticPower(NamedTuple):
    dc: float
    sin_quadrature: float
    cos_quadrature: float
    trace: np.ndarray | None = None


def static_detected_power(eta_c, eta_p, eta_m, phi_c, phi_p, phi_m, P_in, m, t=None,
                          omega_m: float | None = None) -> StaticPower:
    """Detected power for static carrier and sideband transmissions.

    ``eta_*`` are amplitude transmissions and ``phi_*`` the phase shifts of
    the carrier and the upper/lower sideband.  The oscillating part is
    ``sin_q sin(ω_m t + Δ) + cos_q cos(ω_m t + Δ)`` with
    ``Δ = (φ_+ - φ_-)/2``; terms at ``2ω_m`` are dropped.  If ``t`` and
    ``omega_m`` are given the full trace is returned as well.
    """
    J0, J1 = bessel_weights(m)
    phibar = 0.5 * (phi_p + phi_m)
    dc = P_in * (J0**2 * eta_c**2 + J1**2 * (eta_p**2 + eta_m**2))
    amp = 2 * P_in * J0 * J1 * eta_c
    sin_q = amp * (eta_p + eta_m) * np.sin(phi_c - phibar)
    cos_q = amp * (eta_p - eta_m) * np.cos(phi_c - phibar)
    trace = None
    if t is not None:
        if omega_m is None:
            raise ParameterError("omega_m is needed to build a trace")
        arg = omega_m * np.asarray(t) + 0.5 * (phi_p - phi_m)
        trace = dc + sin_q * np.sin(arg) + cos_q * np.cos(arg)
    return StaticPower(dc, sin_q, cos_q, trace)


# ---------------------------------------------------------------------------
# hole trio and transfer function
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HoleTrio:
    """Carrier hole, the (identical) sideband holes and the optical depth."""

    carrier: HoleShape
    sideband: HoleShape
    alpha0L: float
    gamma_h: float
    m: float = 0.0

    @property
    def x_c(self) -> float:
        return self.carrier.gamma_hole / self.gamma_h

    @property
    def x_s(self) -> float:
        return self.sideband.gamma_hole / self.gamma_h

    def hole(self, which: str) -> HoleShape:
        if which in ("carrier", "c"):
            return self.carrier
        if which in ("sideband", "s"):
            return self.sideband
        raise ParameterError(f"unknown hole {which!r}")

    def measured_carrier_depth(self) -> float:
        return measured_width_depth(self.carrier)[1]


def hole_trio(s0: float, m: float, levels: AtomicLevels, T1: float, gamma_h: float,
              alpha0L: float, delta0: float = 0.0, saturation_derating: float = 1.0) -> HoleTrio:
    """Holes burned by the carrier (weight J0²) and each sideband (weight J1²)."""
    _, R = trapping_params(levels, T1)
    J0, J1 = bessel_weights(m)
    s_eff = saturation_derating * s0
    return HoleTrio(hole_shape(J0**2 * s_eff, R, gamma_h, delta0),
                    hole_shape(J1**2 * s_eff, R, gamma_h, delta0),
                    alpha0L, gamma_h, m)


def trio_from_ratios(alpha0L: float, x_c: float, x_s: float, gamma_h: float = 1.0) -> HoleTrio:
    """Trio with prescribed width ratios Γ_hole/Γ_h (depths follow from the widths)."""
    if x_c < 1 or x_s < 1:
        raise ParameterError("width ratios must be >= 1")

    def mk(x):
        return HoleShape(1 - 1 / x**2, x * gamma_h, float("nan"), gamma_h)

    return HoleTrio(mk(x_c), mk(x_s), alpha0L, gamma_h)


def eta_phi(trio: HoleTrio, which: str, omega):
    """Amplitude transmission and phase of a weak component offset by ω from a hole."""
    h = trio.hole(which)
    g, gh, d = h.gamma_hole, trio.gamma_h, h.d_hole
    omega = np.asarray(omega, dtype=float)
    den = (g + gh) ** 2 / 4 + omega**2
    half = trio.alpha0L / 2
    eta = np.exp(-half * (1 - g * (g + gh) / 4 * d / den))
    phi = -half * (g / 2) * d * omega / den
    return eta, phi


def f_of_x(x):
    """Normalised slope function f(x) = (x-1)/(x(x+1))."""
    x = np.asarray(x, dtype=float)
    return (x - 1) / (x * (x + 1))


def transfer(trio: HoleTrio, T_rg: float, omega):
    """Exact frequency-error transfer function T(ω) [s]; T(-ω) = conj T(ω)."""
    omega = np.asarray(omega, dtype=float)
    ec, pc = eta_phi(trio, "carrier", omega)
    es, ps = eta_phi(trio, "sideband", omega)
    ec0, _ = eta_phi(trio, "carrier", 0.0)
    es0, _ = eta_phi(trio, "sideband", 0.0)
    num = ec * es0 * np.exp(1j * pc) - ec0 * es * np.exp(1j * ps)
    return num / (1j * omega + 1.0 / T_rg)


def mid_band_constant(trio: HoleTrio) -> float:
    """C_m [s]: the real mid-band value of T."""
    a = trio.alpha0L
    xc, xs = trio.x_c, trio.x_s
    return float(-(a / trio.gamma_h) * math.exp(-a / 2 * (1 / xc + 1 / xs)) * (f_of_x(xc) - f_of_x(xs)))


def high_band_coefficient(trio: HoleTrio) -> float:
    """C_h: T ≈ C_h/(iω) far above the hole widths."""
    a = trio.alpha0L
    return -math.exp(-a / 2) * (math.exp(-a / (2 * trio.x_c)) - math.exp(-a / (2 * trio.x_s)))


def transfer_asymptote(trio: HoleTrio, T_rg: float, omega, regime: str):
    """Asymptotic forms of T(ω): ``"low_mid"`` (ω ≪ Γ_hole) or ``"high"`` (ω ≫ Γ_hole)."""
    omega = np.asarray(omega, dtype=float)
    if regime == "low_mid":
        iwt = 1j * omega * T_rg
        return mid_band_constant(trio) * iwt / (1 + iwt)
    if regime == "high":
        return high_band_coefficient(trio) / (1j * omega)
    raise ParameterError(f"unknown regime {regime!r}")


def loop_phase_deg(T):
    """Phase of -T in degrees: the response phase seen by a correctly signed loop."""
    return np.degrees(np.angle(-np.asarray(T)))


def mid_band_frequency(trio: HoleTrio, T_rg: float) -> float:
    """Geometric mean of 1/T_rg and the sideband hole width [rad/s]."""
    return math.sqrt(trio.sideband.gamma_hole / T_rg)


# ---------------------------------------------------------------------------
# choosing the modulation index
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LockSystem:
    """Physical inputs that fix the holes for any modulation index."""

    optical: OpticalParams
    levels: AtomicLevels
    P_in: float
    beam_area: float
    delta0: float = 0.0
    saturation_derating: float = 1.0

    @classmethod
    def with_rabi(cls, optical: OpticalParams, levels: AtomicLevels, rabi: float,
                  P_in: float = 1e-3, **kw) -> "LockSystem":
        """System whose beam area is chosen so that the Rabi frequency equals ``rabi``."""
        area = area_for_rabi(rabi, P_in, optical.dipole, optical.refr_index)
        return cls(optical, levels, P_in, area, **kw)

    @property
    def gamma_h(self) -> float:
        return homogeneous_linewidth(self.optical, self.levels)

    @property
    def rabi(self) -> float:
        return rabi_from_power(self.P_in, self.beam_area, self.optical.dipole, self.optical.refr_index)

    @property
    def s0(self) -> float:
        return float(saturation(self.rabi, self.optical.T1, 2.0 / self.gamma_h))

    @property
    def T_rg(self) -> float:
        T_rg = getattr(self.levels, "T_rg", None)
        if T_rg is None:
            T_rg = self.optical.T1  # a two-level hole lives for T1
        return T_rg

    def trio(self, m: float) -> HoleTrio:
        return hole_trio(self.s0, m, self.levels, self.optical.T1, self.gamma_h,
                         self.optical.alpha0L, self.delta0, self.saturation_derating)


def mid_band_error_amplitude(system: LockSystem, m: float) -> float:
    """|4 P_in J0 J1 T(ω_mid)| [W s/rad] at the geometric-mean mid-band frequency."""
    if m <= 0:
        return 0.0
    trio = system.trio(m)
    J0, J1 = bessel_weights(m)
    w = mid_band_frequency(trio, system.T_rg)
    return float(abs(4 * system.P_in * J0 * J1 * transfer(trio, system.T_rg, w)))


class OptimizationResult(NamedTuple):
    m: float
    objective: float
    constrained: bool


def optimize_modulation(system: LockSystem, drift_constraint: bool = False,
                        m_max: float = M_SIDEBAND_LIMIT, n_scan: int = 241,
                        tol: float = 1e-3) -> OptimizationResult:
    """Modulation index maximising the mid-band error signal.

    A coarse scan over ``(0, m_max]`` locates the peak, then a golden-section
    search refines it to ``tol``.  With ``drift_constraint`` only indices for
    which the measured carrier depth stays below the drift threshold are
    admissible.

    Raises:
        ParameterError: if the drift constraint leaves no admissible index.
    """
    from .drift import drift_threshold

    ms = np.linspace(m_max / n_scan, m_max, n_scan)
    vals = np.array([mid_band_error_amplitude(system, m) for m in ms])
    if drift_constraint:
        ok = np.array([system.trio(m).measured_carrier_depth() < drift_threshold(m) for m in ms])
        if not ok.any():
            raise ParameterError("drift constraint leaves no admissible modulation index")
        vals = np.where(ok, vals, -np.inf)
    k = int(np.argmax(vals))
    lo = ms[max(k - 1, 0)]
    hi = ms[min(k + 1, n_scan - 1)]
    if drift_constraint and not (ok[max(k - 1, 0)] and ok[min(k + 1, n_scan - 1)]):
        # peak sits on the constraint boundary: stay on the admissible grid point
        return OptimizationResult(float(ms[k]), float(vals[k]), True)
    if k in (0, n_scan - 1):
        return OptimizationResult(float(ms[k]), float(vals[k]), drift_constraint)
    res = minimize_scalar(lambda m: -mid_band_error_amplitude(system, m),
                          bracket=(lo, ms[k], hi), method="golden",
                          options={"xtol": tol / max(ms[k], 1e-3)})
    m_best = float(res.x)
    if not lo <= m_best <= hi:
        m_best = float(ms[k])
    return OptimizationResult(m_best, mid_band_error_amplitude(system, m_best), drift_constraint)
