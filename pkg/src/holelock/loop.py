"""Time-domain simulation of a laser locked to a transient spectral hole.

Model, per time step ``dt``:

1. laser frequency = free-running noise + injected disturbance + actuator
   correction (all angular frequencies, rad/s);
2. the hole centre follows the laser as an exponential moving average
   with memory time ``T_rg``;
3. the excursion ``e = ω_L - hole`` drives the error signal through a
   rational surrogate of the transfer function,
   ``T̂(ω) = C_m · iωT_rg/(1 + iωT_rg) / (1 + iω C_m/C_h)``, which has the
   exact mid-band and high-band asymptotes;
4. detector noise is added;
5. the error passes the analog PI stage, a pure delay line and a digital
   integrator, then becomes the frequency correction.

The recursion itself lives in :mod:`holelock.kernels`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy.signal import lfilter

from . import kernels
from .atomic import AtomicLevels
from .errors import ParameterError
from .pdh import (HoleTrio, LockSystem, bessel_weights, eta_phi, high_band_coefficient,
                  mid_band_constant)

TWO_PI = 2 * math.pi

# photodetector constants used in the noise budget
NOISE_DENSITY_V = 0.18e-6     # V/√Hz at 1 mW-equivalent scale
NOISE_FLOOR_MW = 0.77         # electronic floor expressed as optical power [mW]
RESPONSIVITY = 0.37           # A/W
TRANSIMPEDANCE = 1.65e4       # V/A


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ElectronicsConfig:
    """Analog PI stage, delay and digital integrator.

    ``lo_phase`` rotates the demodulated quadrature, ``sign`` is the overall
    loop sign, ``crossover`` [rad/s] is the unity-gain frequency used to set
    the actuator gain and ``gain_scale`` multiplies that design gain (0 opens
    the loop).
    """

    R1: float = 50.0
    R2: float = 50e3
    R3: float = 1e3
    R4: float = 1e3
    C: float = 6e-9
    loop_delay: float = 100e-9
    digital_pi_tau: float = 4e-3
    lo_phase: float = 0.0
    sign: int = 1
    crossover: float = TWO_PI * 0.6e6
    gain_scale: float = 1.0
    offset_w: float = 0.0

    def __post_init__(self):
        for name in ("R1", "R2", "R3", "R4", "C", "digital_pi_tau", "crossover"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive")
        if self.loop_delay < 0:
            raise ParameterError("loop_delay must be >= 0")
        if self.sign not in (1, -1):
            raise ParameterError("sign must be +1 or -1")
        if self.gain_scale < 0:
            raise ParameterError("gain_scale must be >= 0")

    @property
    def corner(self) -> float:
        """Analog PI corner 1/((R3+R4)C) [rad/s]."""
        return 1.0 / ((self.R3 + self.R4) * self.C)

    @property
    def kp(self) -> float:
        return self.R2 / self.R1 * (self.R3 + self.R4) / self.R3

    @property
    def ki(self) -> float:
        return self.R2 / self.R1 / (self.R3 * self.C)

    def matched(self, trio: HoleTrio, T_rg: float | None = None) -> "ElectronicsConfig":
        """Copy whose PI corner sits on the surrogate pole C_h/C_m (and τ_d = T_rg if given)."""
        w_p = high_band_coefficient(trio) / mid_band_constant(trio)
        if not w_p > 0:
            raise ParameterError("mid-band and high-band slopes have opposite signs; "
                                 "the carrier hole is too deep for a mid-band lock")
        new = replace(self, C=1.0 / ((self.R3 + self.R4) * w_p))
        if T_rg is not None:
            new = replace(new, digital_pi_tau=T_rg)
        return new


@dataclass(frozen=True)
class LaserNoiseModel:
    """Mean-reverting (first-order low-pass) free-running frequency noise.

    ``excursion_hz`` is the rms frequency deviation, ``bandwidth_hz`` the
    low-pass corner.
    """

    excursion_hz: float = 75e3
    bandwidth_hz: float = 20e3
    seed: int | None = 0

    def __post_init__(self):
        if self.excursion_hz < 0:
            raise ParameterError("noise excursion must be >= 0")
        if not self.bandwidth_hz > 0:
            raise ParameterError("noise bandwidth must be positive")

    def sample(self, n: int, dt: float, rng: np.random.Generator) -> np.ndarray:
        """Stationary AR(1) series of angular frequencies [rad/s]."""
        sigma = TWO_PI * self.excursion_hz
        if sigma == 0 or n == 0:
            return np.zeros(n)
        rho = math.exp(-TWO_PI * self.bandwidth_hz * dt)
        w = rng.standard_normal(n)
        x0 = sigma * w[0]
        rest = lfilter([sigma * math.sqrt(1 - rho**2)], [1.0, -rho], w[1:], zi=[rho * x0])[0]
        return np.concatenate(([x0], rest))


@dataclass(frozen=True)
class LoopPlant:
    """Holes and optical power seen by the loop; ``levels``/``T1`` enable drift physics."""

    trio: HoleTrio
    T_rg: float
    P_in: float
    levels: AtomicLevels | None = None
    T1: float | None = None

    @classmethod
    def from_system(cls, system: LockSystem, m: float) -> "LoopPlant":
        return cls(system.trio(m), system.T_rg, system.P_in, system.levels, system.optical.T1)

    @property
    def signal_gain(self) -> float:
        """4 P_in J0 J1 [W]: error power per unit of T(ω)·δω."""
        J0, J1 = bessel_weights(self.trio.m)
        return float(4 * self.P_in * J0 * J1)

    @property
    def detected_power(self) -> float:
        """Mean power on the detector at lock [W]."""
        J0, J1 = bessel_weights(self.trio.m)
        ec, _ = eta_phi(self.trio, "carrier", 0.0)
        es, _ = eta_phi(self.trio, "sideband", 0.0)
        return float(self.P_in * (J0**2 * ec**2 + 2 * J1**2 * es**2))


# ---------------------------------------------------------------------------
# frequency-domain pieces
# ---------------------------------------------------------------------------


def electronic_gain(omega, cfg: ElectronicsConfig):
    """Analog PI gain g(ω) = (R2/R1)(iω(R3+R4)C + 1)/(iωR3C)."""
    iw = 1j * np.asarray(omega, dtype=float)
    return cfg.R2 / cfg.R1 * (iw * (cfg.R3 + cfg.R4) * cfg.C + 1) / (iw * cfg.R3 * cfg.C)


def digital_pi(omega, tau_d: float):
    """Digital integrator stage (1/τ_d + iω)/(iω)."""
    iw = 1j * np.asarray(omega, dtype=float)
    return (1.0 / tau_d + iw) / iw


def surrogate_transfer(trio: HoleTrio, T_rg: float, omega):
    """Rational T̂(ω) used by the time-domain simulation [s]."""
    iw = 1j * np.asarray(omega, dtype=float)
    c_m = mid_band_constant(trio)
    tau_p = c_m / high_band_coefficient(trio)
    return c_m * (iw * T_rg / (1 + iw * T_rg)) / (1 + iw * tau_p)


def _unit_loop(omega, plant: LoopPlant, cfg: ElectronicsConfig, exact: bool):
    """Loop gain for unit actuator gain (rad/s of correction per volt)."""
    from .pdh import transfer

    T = transfer(plant.trio, plant.T_rg, omega) if exact else surrogate_transfer(plant.trio, plant.T_rg, omega)
    omega = np.asarray(omega, dtype=float)
    return (-cfg.sign * plant.signal_gain * math.cos(cfg.lo_phase) * T * electronic_gain(omega, cfg)
            * digital_pi(omega, cfg.digital_pi_tau) * np.exp(-1j * omega * cfg.loop_delay))


def actuator_gain(plant: LoopPlant, cfg: ElectronicsConfig) -> float:
    """Design actuator gain [rad/s per V] giving |L| = 1 at the crossover, times gain_scale."""
    mag = abs(complex(_unit_loop(cfg.crossover, plant, cfg, exact=False)))
    if abs(math.cos(cfg.lo_phase)) < 1e-12 or mag == 0 or not math.isfinite(mag):
        raise ParameterError("loop has no gain at the crossover frequency (check m and LO phase)")
    return cfg.gain_scale / mag


def open_loop_response(omega, plant: LoopPlant, cfg: ElectronicsConfig, exact: bool = True):
    """Open-loop gain L(ω) including the design actuator gain.

    The loop is stable with margin when ``L`` stays away from -1; for a
    correctly signed loop the phase of ``L`` is -90° over the bands where
    the electronics match the holes.
    """
    return actuator_gain(plant, cfg) * _unit_loop(omega, plant, cfg, exact)


def detector_noise_power(P_mW: float, B: float) -> float:
    """Equivalent optical noise power [mW] of the detector in bandwidth ``B`` [Hz]."""
    if P_mW < 0 or B < 0:
        raise ParameterError("power and bandwidth must be non-negative")
    u_noise = NOISE_DENSITY_V * math.sqrt(P_mW + NOISE_FLOOR_MW)
    return u_noise * math.sqrt(B) / (RESPONSIVITY * TRANSIMPEDANCE) * 1e3


# ---------------------------------------------------------------------------
# time domain
# ---------------------------------------------------------------------------


def inject_disturbance(t, kind: str, *, start: float = 0.0, size: float = 0.0,
                       omega: float = 0.0, phase: float = 0.0, dt: float | None = None) -> np.ndarray:
    """Additive free-running frequency disturbance [rad/s] on the grid ``t``.

    kinds:
      ``freq_step``: frequency jumps by ``size`` [rad/s] at ``start``;
      ``phase_step``: phase jumps by ``size`` [rad], i.e. a one-sample
      frequency impulse of area ``size``;
      ``ramp``: frequency drifts at ``size`` = β [rad/s²] from ``start``;
      ``sinusoid``: phase modulation ``size·sin(ω t + phase)`` (``size`` = ε [rad]),
      i.e. frequency ``size·ω·cos(ω t + phase)``.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    on = t >= start
    if kind == "freq_step":
        out[on] = size
    elif kind == "phase_step":
        if dt is None:
            dt = t[1] - t[0] if len(t) > 1 else 1.0
        idx = int(np.argmax(on)) if on.any() else None
        if idx is not None:
            out[idx] = size / dt
    elif kind == "ramp":
        out[on] = size * (t[on] - start)
    elif kind == "sinusoid":
        out[on] = size * omega * np.cos(omega * t[on] + phase)
    else:
        raise ParameterError(f"unknown disturbance kind {kind!r}")
    return out


@dataclass
class SimTrace:
    """Closed-loop time series (angular frequencies in rad/s, error in W)."""

    t: np.ndarray
    freq: np.ndarray
    hole: np.ndarray
    error: np.ndarray
    actuator: np.ndarray
    flags: np.ndarray
    dt: float
    truncated: bool = False
    info: dict = field(default_factory=dict)

    @property
    def excursion(self) -> np.ndarray:
        return self.freq - self.hole

    @property
    def phase(self) -> np.ndarray:
        """Laser phase [rad] relative to the initial frequency reference."""
        return np.cumsum(self.freq) * self.dt

    def as_columns(self) -> dict:
        """Columns for CSV export, frequencies in Hz."""
        return {"t_s": self.t, "freq_inst_hz": self.freq / TWO_PI,
                "hole_center_hz": self.hole / TWO_PI, "error_w": self.error,
                "actuator_hz": self.actuator / TWO_PI, "flag": self.flags}


class DriftTable(NamedTuple):
    """Drift-induced phase difference φ_c - φ_s [rad] versus drift rate β [rad/s²]."""

    beta: np.ndarray
    phase: np.ndarray


def drift_table(plant: LoopPlant, xi_max: float = 5.0, n: int = 17, **kw) -> DriftTable:
    """Tabulate the nonlinear drift response for the loop's drift mode.

    Only positive drifts are computed; the response is odd in β.
    """
    from .drift import nonlinear_drift_phase

    if plant.levels is None or plant.T1 is None:
        raise ParameterError("drift physics needs levels and T1 on the plant")
    b_max = xi_max * plant.trio.carrier.gamma_hole / plant.T_rg
    pos = b_max * np.logspace(-3, 0, n)
    ph = nonlinear_drift_phase(plant.trio, plant.levels, plant.T1, pos, **kw)
    beta = np.concatenate((-pos[::-1], [0.0], pos))
    phase = np.concatenate((-ph[::-1], [0.0], ph))
    return DriftTable(beta, phase)


def run_closed_loop(plant: LoopPlant, cfg: ElectronicsConfig, noise: LaserNoiseModel,
                    dt: float, duration: float, seed: int | None = None,
                    disturbance=None, detector_noise: bool = True,
                    drift: DriftTable | None = None) -> SimTrace:
    """Simulate the stabilised laser.

    ``disturbance`` is an array on the time grid (see :func:`inject_disturbance`)
    or a callable of the grid.  ``seed`` overrides ``noise.seed``.  With a
    ``drift`` table the slow part of the excursion, which sets the drift
    rate, is routed through the nonlinear drift response and only the
    remainder through the linear surrogate.

    The time step is reduced if needed so that it divides the loop delay; the
    value used is ``trace.dt`` and ``trace.info['dt_adjusted']`` reports it.
    The run starts locked: the hole sits at the initial laser frequency.
    When the excursion seen by the holes (the excursion filtered by the
    surrogate pole) exceeds ten carrier hole widths the run stops and the
    flag on the last sample is set; no exception is raised.
    """
    trio = plant.trio
    if not plant.T_rg > 0:
        raise ParameterError("the hole memory time T_rg must be positive")
    if not dt > 0 or not duration > 0:
        raise ParameterError("dt and duration must be positive")
    if dt > 1.0 / (20 * trio.carrier.gamma_hole):
        raise ParameterError("dt must be at most 1/(20 Γ_hole,c)")
    adjusted = False
    if cfg.loop_delay > 0:
        if dt > cfg.loop_delay / 4:
            raise ParameterError("dt must be at most loop_delay/4")
        steps = math.ceil(round(cfg.loop_delay / dt, 9))
        new_dt = cfg.loop_delay / steps
        adjusted = not math.isclose(new_dt, dt, rel_tol=1e-12)
        dt = new_dt
        n_delay = steps - 1
    else:
        n_delay = 0
    n = int(round(duration / dt))
    if n < 100:
        raise ParameterError("duration must cover at least 100 time steps")

    t = np.arange(n) * dt
    rng = np.random.default_rng(noise.seed if seed is None else seed)
    nu = noise.sample(n, dt, rng)
    if disturbance is None:
        dist = np.zeros(n)
    else:
        dist = np.asarray(disturbance(t) if callable(disturbance) else disturbance, dtype=float)
        if dist.shape != (n,):
            raise ParameterError(f"disturbance must have {n} samples, got {dist.shape}")
    if detector_noise:
        p_det_mw = plant.detected_power * 1e3
        sigma_det = detector_noise_power(p_det_mw, 0.5 / dt) * 1e-3
        det = sigma_det * rng.standard_normal(n)
    else:
        det = np.zeros(n)

    c_m = mid_band_constant(trio)
    tau_p = c_m / high_band_coefficient(trio)
    cos_lo = math.cos(cfg.lo_phase)
    g_lin = plant.signal_gain * cos_lo
    if drift is not None:
        ec, _ = eta_phi(trio, "carrier", 0.0)
        es, _ = eta_phi(trio, "sideband", 0.0)
        g_drift = plant.signal_gain * float(ec * es) * cos_lo
        tab_b = np.ascontiguousarray(drift.beta, dtype=float)
        tab_p = np.ascontiguousarray(drift.phase, dtype=float)
    else:
        g_drift = 0.0
        tab_b = tab_p = np.zeros(1)
    k_act = cfg.sign * actuator_gain(plant, cfg)

    freq, hole, err, act = (np.zeros(n) for _ in range(4))
    buf = np.zeros(max(n_delay, 1))
    done, flagged = kernels.closed_loop(
        nu, dist, det,
        1 - math.exp(-dt / plant.T_rg), 1 - math.exp(-dt / plant.T_rg), 1 - math.exp(-dt / tau_p),
        c_m, g_lin, cfg.offset_w * math.sin(cfg.lo_phase), g_drift, 1.0 / plant.T_rg,
        tab_b, tab_p, cfg.kp, cfg.ki * dt, dt / cfg.digital_pi_tau, k_act,
        10 * trio.carrier.gamma_hole * abs(c_m), n_delay, 1.0, float(nu[0] + dist[0]),
        freq, hole, err, act, buf)
    flags = np.zeros(done, dtype=np.int8)
    if flagged:
        flags[-1] = 1
    info = {"dt_adjusted": adjusted, "n_delay": n_delay, "actuator_gain": k_act,
            "compiled": kernels.USING_COMPILED}
    return SimTrace(t[:done], freq[:done], hole[:done], err[:done], act[:done], flags, dt,
                    bool(flagged), info)


# ---------------------------------------------------------------------------
# trace summaries
# ---------------------------------------------------------------------------


def phase_std_at_lags(trace: SimTrace, lags, settle: float = 0.0) -> np.ndarray:
    """std of φ(t+τ) - φ(t) [deg] for each lag τ, after discarding ``settle`` seconds."""
    phi = np.degrees(trace.phase)
    k0 = int(round(settle / trace.dt))
    phi = phi[k0:]
    out = []
    for lag in np.atleast_1d(lags):
        k = max(int(round(lag / trace.dt)), 1)
        out.append(np.std(phi[k:] - phi[:-k]) if k < len(phi) else np.nan)
    return np.array(out)


def oscillation_frequency(trace: SimTrace, window: int = 4096) -> float:
    """Dominant frequency [Hz] of the excursion over the last ``window`` samples.

    Uses the peak of a Hann-windowed periodogram; DC is excluded.
    """
    e = trace.excursion[-window:]
    if len(e) < 8:
        return 0.0
    e = (e - e.mean()) * np.hanning(len(e))
    spec = np.abs(np.fft.rfft(e))
    spec[0] = 0.0
    freqs = np.fft.rfftfreq(len(e), trace.dt)
    return float(freqs[int(np.argmax(spec))])


def detect_oscillation(trace: SimTrace, growth: float = 10.0) -> bool:
    """True if the run was truncated or the excursion grew ``growth``-fold."""
    if trace.truncated:
        return True
    e = trace.excursion
    q = len(e) // 4
    if q < 10:
        return False
    early = np.sqrt(np.mean(e[q:2 * q] ** 2))
    late = np.sqrt(np.mean(e[-q:] ** 2))
    return bool(early > 0 and late > growth * early)


def drift_rate(trace: SimTrace, tail: float = 0.5) -> float:
    """Linear-fit slope of the laser frequency over the last ``tail`` of the run [rad/s²]."""
    k0 = int(len(trace.t) * (1 - tail))
    if len(trace.t) - k0 < 2:
        return 0.0
    return float(np.polyfit(trace.t[k0:], trace.freq[k0:], 1)[0])


def summarize_trace(trace: SimTrace, lags=(100e-9, 1e-6, 10e-6), settle: float = 0.0) -> dict:
    """Structured summary: phase std per lag, oscillation flag/frequency, drift-rate fit."""
    osc = detect_oscillation(trace)
    return {
        "samples": len(trace.t),
        "dt_s": trace.dt,
        "truncated": trace.truncated,
        "phase_std_deg": {f"{lag:.3g}": float(v) for lag, v in
                          zip(lags, phase_std_at_lags(trace, lags, settle))},
        "oscillating": osc,
        "oscillation_hz": oscillation_frequency(trace) if osc else 0.0,
        "drift_rate_hz_per_s": drift_rate(trace) / TWO_PI,
        "excursion_rms_hz": float(np.sqrt(np.mean(trace.excursion**2)) / TWO_PI),
    }
