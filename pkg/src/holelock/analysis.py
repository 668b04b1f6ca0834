"""Post-processing of measured (or simulated) spectra and phases.

* :func:`kramers_kronig` and :func:`hole_asymmetry` turn a sampled
  absorption spectrum into the dispersion it implies.
* :func:`heterodyne_phase_extract` recovers amplitude and phase of a beat
  note by Fourier filtering.
* :func:`fid_phase_stats` separates laser phase noise from detection noise
  in repeated free-induction-decay phase records.
* :func:`gate_fidelity` converts a phase-error distribution into the
  fidelity of a single-qubit operation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import quad
from scipy.ndimage import median_filter

from . import kernels
from .errors import NumericalError, ParameterError

# ---------------------------------------------------------------------------
# Kramers-Kronig
# ---------------------------------------------------------------------------


def _check_grid(omega, values):
    omega = np.ascontiguousarray(omega, dtype=float)
    values = np.ascontiguousarray(values, dtype=float)
    if omega.ndim != 1 or omega.shape != values.shape:
        raise ParameterError("frequency grid and samples must be 1-D arrays of equal length")
    if len(omega) < 3:
        raise ParameterError("need at least three samples")
    if np.any(np.diff(omega) <= 0):
        raise ParameterError("frequency grid must be strictly increasing")
    if not np.all(np.isfinite(values)):
        raise ParameterError("samples must be finite")
    return omega, values


def principal_value(omega, values, omega0=None, delta: float | None = None) -> np.ndarray:
    """PV ∫ f(ω)/(ω - ω0) dω over the sampled range.

    The pole is removed by subtracting f(ω0), whose integral is done
    analytically; the remainder is smooth and is integrated with the
    trapezoid rule on the given (possibly non-uniform) grid.  ``delta``
    only softens the logarithm when ω0 sits on a grid end; it defaults to
    half the median grid spacing.
    """
    omega, values = _check_grid(omega, values)
    x0 = omega if omega0 is None else np.ascontiguousarray(np.atleast_1d(omega0), dtype=float)
    if delta is None:
        delta = 0.5 * float(np.median(np.diff(omega)))
    f0 = np.interp(x0, omega, values)
    slope = np.gradient(values, omega)
    df0 = np.interp(x0, omega, slope)
    out = np.empty(len(x0))
    kernels.pv_integral(omega, values, np.ascontiguousarray(x0), np.ascontiguousarray(f0),
                        np.ascontiguousarray(df0), float(delta), out)
    return out


def _baseline(omega, values, baseline):
    if baseline is None:
        return values
    if baseline == "edges":
        return values - 0.5 * (values[0] + values[-1])
    if isinstance(baseline, (int, float)):
        return values - float(baseline)
    raise ParameterError(f"unknown baseline {baseline!r}")


def kramers_kronig(omega, alpha, omega0=None, direction: str = "R_to_I",
                   delta: float | None = None, baseline=None) -> np.ndarray:
    """Dispersion from absorption (``"R_to_I"``) or the reverse (``"I_to_R"``).

    α_I(ω0) = -(1/π) PV∫ α_R(ω)/(ω - ω0) dω and
    α_R(ω0) = +(1/π) PV∫ α_I(ω)/(ω - ω0) dω.

    A flat absorption background has no dispersion but a truncated grid
    would give it one; ``baseline="edges"`` removes the mean of the two end
    samples first (a number removes that constant).  The grid must extend
    well into the tails of the feature.
    """
    omega, alpha = _check_grid(omega, alpha)
    alpha = _baseline(omega, alpha, baseline)
    pv = principal_value(omega, alpha, omega0, delta)
    if direction == "R_to_I":
        return -pv / math.pi
    if direction == "I_to_R":
        return pv / math.pi
    raise ParameterError(f"unknown direction {direction!r}")


def hole_asymmetry(omega, alpha_RL, delta0: float, delta: float | None = None) -> float:
    """α_I(Δ0)·L at the hole centre from a measured α_R·L spectrum.

    Zero for a symmetric hole; the sign follows the drift direction.  The
    far-wing level is taken as the baseline.
    """
    return float(kramers_kronig(omega, alpha_RL, [delta0], "R_to_I", delta, baseline="edges")[0])


# ---------------------------------------------------------------------------
# heterodyne phase extraction
# ---------------------------------------------------------------------------


class HeterodyneResult(NamedTuple):
    t: np.ndarray
    amplitude: np.ndarray
    phase: np.ndarray        # [rad], carrier 2π f_het t removed, unwrapped
    analytic: np.ndarray


def heterodyne_phase_extract(signal, dt: float, f_het: float, band: float) -> HeterodyneResult:
    """Amplitude and phase of a beat note at ``f_het`` [Hz] by Fourier filtering.

    All spectral components outside ``f_het ± band/2`` (including every
    negative frequency) are zeroed; the inverse transform is the complex
    analytic signal, from which the carrier is then removed.
    """
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or len(x) < 4:
        raise ParameterError("signal must be a 1-D array with at least 4 samples")
    if not (dt > 0 and band > 0 and f_het > 0):
        raise ParameterError("dt, f_het and band must be positive")
    if f_het + band / 2 > 0.5 / dt:
        raise ParameterError("pass band extends beyond the Nyquist frequency")
    n = len(x)
    spec = np.fft.fft(x)
    f = np.fft.fftfreq(n, dt)
    keep = np.abs(f - f_het) <= band / 2
    analytic = np.fft.ifft(np.where(keep, 2 * spec, 0))
    t = np.arange(n) * dt
    base = analytic * np.exp(-2j * math.pi * f_het * t)
    return HeterodyneResult(t, np.abs(analytic), np.unwrap(np.angle(base)), analytic)


# ---------------------------------------------------------------------------
# FID phase statistics
# ---------------------------------------------------------------------------


def unwrap_degrees(x, axis: int = 0) -> np.ndarray:
    """Continue phases [deg] along ``axis`` by the nearest multiple of 360°."""
    return np.degrees(np.unwrap(np.radians(np.asarray(x, dtype=float)), axis=axis))


@dataclass
class StabilityReport:
    """Per-bin phase statistics [deg] of an n-repetition FID measurement.

    ``fit`` holds (a [deg], b [deg/s]) of std(φ_i - φ_1) ≈ a + b t over the
    bins after the first; ``clamped`` marks bins where a noise-subtracted
    variance came out negative and was set to zero.
    """

    t: np.ndarray
    abs_mean: np.ndarray
    std_x: np.ndarray
    std_n: np.ndarray
    std_phi: np.ndarray
    std_xdiff: np.ndarray
    std_phidiff: np.ndarray
    std_f: np.ndarray
    fit: tuple[float, float]
    noise_constant: float
    clamped: np.ndarray

    def std_f_fit(self, t) -> np.ndarray:
        """Frequency standard deviation [Hz] implied by the linear phase fit."""
        t = np.asarray(t, dtype=float)
        a, b = self.fit
        return (a + b * t) / (360.0 * t)

    def as_columns(self) -> dict:
        return {"t_s": self.t, "abs_mean_deg": self.abs_mean, "std_x_deg": self.std_x,
                "std_n_deg": self.std_n, "std_phi_deg": self.std_phi,
                "std_xdiff_deg": self.std_xdiff, "std_phidiff_deg": self.std_phidiff,
                "std_f_hz": self.std_f}


def fid_phase_stats(x, bin_width: float, unwrap: bool = True,
                    quantile: float = 0.25) -> StabilityReport:
    """Separate laser phase noise from detection noise.

    ``x[i, j]`` is the measured phase [deg] in time bin ``i`` of repetition
    ``j``.  With x = φ + n and white detection noise n,
    var(x_i - x_{i-1}) = const + 2 var(n_i), where the constant is the
    (stationary) laser phase change over one bin.  The detection noise
    starts near zero while the FID is strong, so the constant is taken as
    the median of the lowest ``quantile`` of these variances; the noise
    variance is then smoothed with a three-bin running median because it
    varies slowly.  Bin times are measured from the first bin.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ParameterError("phase matrix must be 2-D (bins x repetitions)")
    n_bins, n_rep = x.shape
    if n_rep < 2 or n_bins < 3:
        raise ParameterError("need at least 3 bins and 2 repetitions")
    if not bin_width > 0:
        raise ParameterError("bin width must be positive")
    if unwrap:
        x = unwrap_degrees(x, axis=0)
    t = np.arange(n_bins) * bin_width

    var_x = np.var(x, axis=1, ddof=1)
    v_adj = np.var(np.diff(x, axis=0), axis=1, ddof=1)          # bins 1..N-1
    k = max(3, int(math.ceil(quantile * len(v_adj))))
    const = float(np.median(np.sort(v_adj)[:k]))
    raw_n = 0.5 * (v_adj - const)
    var_n = np.empty(n_bins)
    var_n[1:] = median_filter(raw_n, size=3, mode="mirror")
    var_n[0] = var_n[1]
    clamped = var_n < 0
    var_n = np.clip(var_n, 0.0, None)

    var_xdiff = np.var(x - x[0], axis=1, ddof=1)
    phi_var = var_x - var_n
    phidiff_var = var_xdiff - var_n
    phidiff_var[0] = 0.0
    clamped |= phi_var < 0
    clamped[1:] |= phidiff_var[1:] < 0
    std_phi = np.sqrt(np.clip(phi_var, 0, None))
    std_phidiff = np.sqrt(np.clip(phidiff_var, 0, None))

    if n_bins - 1 >= 2:
        b, a = np.polyfit(t[1:], std_phidiff[1:], 1)
    else:  # pragma: no cover - guarded by the n_bins check
        raise NumericalError("not enough bins for the linear fit")
    std_f = np.full(n_bins, np.nan)
    std_f[1:] = std_phidiff[1:] / (360.0 * t[1:])
    return StabilityReport(t, np.abs(x.mean(axis=1) - x[0].mean()), np.sqrt(var_x), np.sqrt(var_n),
                           std_phi, np.sqrt(var_xdiff), std_phidiff, std_f, (float(a), float(b)),
                           const, clamped)


# ---------------------------------------------------------------------------
# gate fidelity
# ---------------------------------------------------------------------------


def phase_error_epsilon(phase_rms: float, distribution="tophat") -> float:
    """ε = 1 - ∫ f(φ) cos φ dφ for a phase error of rms ``phase_rms`` [rad].

    ``distribution`` is ``"tophat"`` (uniform over ±√3 φ_rms), ``"gaussian"``
    or a callable density f(φ) (then ``phase_rms`` sets the integration
    half-range in units of 10 φ_rms, capped at π).
    """
    if phase_rms < 0:
        raise ParameterError("phase rms must be non-negative")
    if phase_rms == 0 and not callable(distribution):
        return 0.0
    if distribution == "tophat":
        a = math.sqrt(3) * phase_rms
        return 1.0 - math.sin(a) / a
    if distribution == "gaussian":
        return 1.0 - math.exp(-phase_rms**2 / 2)
    if callable(distribution):
        lim = min(math.pi, 10 * phase_rms) if phase_rms > 0 else math.pi
        norm = quad(distribution, -lim, lim, limit=200)[0]
        if not norm > 0:
            raise ParameterError("phase distribution must have positive weight")
        overlap = quad(lambda p: distribution(p) * math.cos(p), -lim, lim, limit=200)[0]
        return 1.0 - overlap / norm
    raise ParameterError(f"unknown distribution {distribution!r}")


def gate_fidelity(alpha2: float, phase_rms: float = 0.0,
                  distribution: str | Callable[[float], float] = "tophat") -> float:
    """Overlap fidelity F = 1 - 2|α|²|β|² ε of a qubit state after a random phase error."""
    if not 0 <= alpha2 <= 1:
        raise ParameterError("|alpha|^2 must lie in [0, 1]")
    eps = phase_error_epsilon(phase_rms, distribution)
    return 1.0 - 2 * alpha2 * (1 - alpha2) * eps
