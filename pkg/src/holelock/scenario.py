"""Scenario files: flat INI sections with the unit in every key name.

Precedence (lowest to highest): built-in defaults, the scenario file,
``--set section.key=value`` overrides, then dedicated command-line flags
such as ``--seed``.  Unknown sections or keys are errors.

The defaults describe a three-level RF-eraser system with T1 = 150 µs,
T2 = 18 µs, T_rg = T_gr = 4 ms, a 1 kHz Rabi frequency and m = 0.40.
"""
from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any, Callable

from .atomic import (FourLevelAsym, FourLevelSym, OpticalParams, ThreeLevel, ThreeLevelRFEraser,
                     TwoLevel)
from .errors import ParameterError

TWO_PI = 2 * math.pi


class ScenarioError(ParameterError):
    """Invalid scenario: unknown key, bad value or violated invariant."""


def _float(text: str) -> float:
    v = float(text)
    if math.isnan(v):
        raise ValueError("NaN is not allowed")
    return v


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        t = str(text).strip().lower()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return t
    return parse


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any
    check: Callable[[Any], bool] | None = None
    help: str = ""


SCHEMA: dict[str, dict[str, Key]] = {
    "atomic": {
        "level_scheme": Key(_choice("rf_eraser", "three_level", "two_level",
                                    "four_level_asym", "four_level_sym"), "rf_eraser"),
        "t1_us": Key(_float, 150.0, _positive),
        "t2_us": Key(_float, 18.0, _positive, "optical coherence time without ground decay"),
        "t_rg_ms": Key(_float, 4.0, _positive),
        "t_gr_ms": Key(_float, math.inf, _positive, "three_level only; inf disables"),
        "b_er": Key(_float, 0.5, lambda v: 0 <= v <= 1),
        "b_eg": Key(_float, 0.5, lambda v: 0 <= v <= 1),
        "t_cg_ms": Key(_float, 4.0, _positive, "four_level_asym"),
        "t_fc_ms": Key(_float, 4.0, _positive, "four_level_asym"),
        "b_ec": Key(_float, 0.25, lambda v: 0 <= v <= 1, "four_level_asym"),
        "b_ef": Key(_float, 0.25, lambda v: 0 <= v <= 1, "four_level_asym"),
        "t_r1_ms": Key(_float, 4.0, _positive, "four_level_sym"),
        "t_r2_ms": Key(_float, 4.0, _positive, "four_level_sym"),
        "b_er1": Key(_float, 0.25, lambda v: 0 <= v <= 1, "four_level_sym"),
        "b_er2": Key(_float, 0.25, lambda v: 0 <= v <= 1, "four_level_sym"),
        "rabi_khz": Key(_float, 1.0, _nonneg, "Rabi frequency / 2π at full power; sets the beam area"),
        "power_mw": Key(_float, 0.23, _positive, "optical power on the crystal"),
        "dipole_cm": Key(_float, 1e-32, _positive, "transition dipole moment [C m]"),
        "refr_index": Key(_float, 1.8, _positive),
        "alpha0l": Key(_float, 1.0, _nonneg, "optical depth α0 L"),
        "length_mm": Key(_float, 10.0, _positive, "crystal length"),
        "delta0_khz": Key(_float, 0.0, None, "hole centre offset"),
        "saturation_derating": Key(_float, 1.0, lambda v: 0 <= v <= 1),
        "profile": Key(_choice("infinite", "lorentzian", "gaussian"), "infinite"),
        "gamma_inh_ghz": Key(_float, 5.0, _positive, "inhomogeneous FWHM"),
        "species": Key(_choice("single", "pr_yso"), "single"),
    },
    "modulation": {
        "m": Key(_float, 0.40, _nonneg, "phase-modulation index"),
        "f_m_mhz": Key(_float, 50.0, _positive, "modulation frequency; keeps the sidebands clear of anti-holes"),
    },
    "electronics": {
        "r1_ohm": Key(_float, 50.0, _positive),
        "r2_ohm": Key(_float, 50e3, _positive),
        "r3_ohm": Key(_float, 1e3, _positive),
        "r4_ohm": Key(_float, 1e3, _positive),
        "c_nf": Key(_float, 6.0, _positive),
        "match_corners": Key(_bool, True, None, "place the PI corner on the hole pole, τ_d = T_rg"),
        "loop_delay_ns": Key(_float, 100.0, _nonneg),
        "digital_pi_tau_ms": Key(_float, 4.0, _positive),
        "lo_phase_deg": Key(_float, 0.0),
        "sign": Key(int, 1, lambda v: v in (1, -1)),
        "crossover_mhz": Key(_float, 0.6, _positive, "design unity-gain frequency"),
        "gain_scale": Key(_float, 1.0, _nonneg, "multiplier on the design gain; 0 opens the loop"),
    },
    "noise": {
        "excursion_khz": Key(_float, 75.0, _nonneg, "rms free-running frequency deviation"),
        "bandwidth_khz": Key(_float, 20.0, _positive, "free-running noise bandwidth"),
        "seed": Key(int, 0, _nonneg),
        "detector_noise": Key(_bool, True),
    },
    "analysis": {
        "dt_ns": Key(_float, 5.0, _positive),
        "duration_ms": Key(_float, 1.0, _positive),
        "drift_mode": Key(_bool, False, None, "route slow excursions through the nonlinear drift response"),
        "f_min_hz": Key(_float, 1.0, _positive, "transfer grid start"),
        "f_max_hz": Key(_float, 1e7, _positive, "transfer grid end"),
        "n_points": Key(int, 400, lambda v: v >= 2),
        "m_min": Key(_float, 0.05, _positive),
        "m_max": Key(_float, 1.0, _positive),
        "m_points": Key(int, 20, lambda v: v >= 2),
        "hole_span": Key(_float, 5.0, _positive, "hole CSV half-range in carrier hole widths"),
        "bin_width_ns": Key(_float, 500.0, _positive, "FID time bin"),
        "fidelity_alpha2": Key(_float, 0.5, lambda v: 0 <= v <= 1),
        "fidelity_phase_deg": Key(_float, 10.0, _nonneg),
        "fidelity_distribution": Key(_choice("tophat", "gaussian"), "tophat"),
        "kk_delta0_hz": Key(_float, 0.0, None, "hole centre for the asymmetry value"),
    },
}


class Scenario:
    """Resolved scenario: every key of :data:`SCHEMA` with a typed value."""

    def __init__(self, values: dict[str, dict[str, Any]], source: str = "<defaults>"):
        self.values = values
        self.source = source

    # -- construction ---------------------------------------------------------

    @classmethod
    def defaults(cls) -> "Scenario":
        return cls({sec: {k: key.default for k, key in keys.items()} for sec, keys in SCHEMA.items()})

    @classmethod
    def from_text(cls, text: str, source: str = "<text>") -> "Scenario":
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        try:
            parser.read_string(text, source=source)
        except configparser.Error as exc:
            raise ScenarioError(f"{source}: {exc}") from None
        sc = cls.defaults()
        sc.source = source
        for section in parser.sections():
            for key, raw in parser.items(section):
                sc.set(section, key, raw)
        return sc

    @classmethod
    def from_file(cls, path: str) -> "Scenario":
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario: {exc}") from None
        return cls.from_text(text, source=path)

    def set(self, section: str, key: str, raw) -> None:
        if section not in SCHEMA:
            raise ScenarioError(f"unknown section [{section}]")
        if key not in SCHEMA[section]:
            raise ScenarioError(f"unknown key {section}.{key}")
        spec = SCHEMA[section][key]
        try:
            value = spec.parse(raw) if isinstance(raw, str) else spec.parse(str(raw))
        except ValueError as exc:
            raise ScenarioError(f"{section}.{key}: {exc}") from None
        if spec.check is not None and not spec.check(value):
            raise ScenarioError(f"{section}.{key}: value {value!r} out of range")
        self.values[section][key] = value

    def apply_overrides(self, items) -> "Scenario":
        """Apply ``section.key=value`` strings."""
        for item in items or ():
            if "=" not in item or "." not in item.split("=", 1)[0]:
                raise ScenarioError(f"override must look like section.key=value, got {item!r}")
            lhs, rhs = item.split("=", 1)
            section, key = lhs.strip().split(".", 1)
            self.set(section, key.strip(), rhs.strip())
        return self

    def copy(self) -> "Scenario":
        return Scenario({s: dict(v) for s, v in self.values.items()}, self.source)

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.values[section]

    # -- provenance -----------------------------------------------------------

    def canonical(self) -> str:
        def enc(v):
            return repr(v) if isinstance(v, float) else v
        return json.dumps({s: {k: enc(v) for k, v in sorted(d.items())}
                           for s, d in sorted(self.values.items())}, sort_keys=True)

    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    # -- validation ------------------------------------------------------------

    def validate(self) -> None:
        """Check cross-key invariants by building every physics object."""
        self.levels()
        self.optical()
        a = self["analysis"]
        if a["f_max_hz"] <= a["f_min_hz"]:
            raise ScenarioError("analysis.f_max_hz must exceed f_min_hz")
        if a["m_max"] <= a["m_min"]:
            raise ScenarioError("analysis.m_max must exceed m_min")
        try:
            self.electronics_base()
        except ParameterError as exc:
            raise ScenarioError(str(exc)) from None

    # -- builders ------------------------------------------------------------

    def optical(self) -> OpticalParams:
        a = self["atomic"]
        try:
            return OpticalParams(T1=a["t1_us"] * 1e-6, T2_0=a["t2_us"] * 1e-6, dipole=a["dipole_cm"],
                                 refr_index=a["refr_index"], alpha0L=a["alpha0l"])
        except ParameterError as exc:
            raise ScenarioError(str(exc)) from None

    def levels(self):
        a = self["atomic"]
        scheme = a["level_scheme"]
        try:
            if scheme == "two_level":
                return TwoLevel()
            if scheme == "rf_eraser":
                return ThreeLevelRFEraser(a["t_rg_ms"] * 1e-3, a["b_er"], a["b_eg"])
            if scheme == "three_level":
                return ThreeLevel(a["t_rg_ms"] * 1e-3, a["t_gr_ms"] * 1e-3, a["b_er"], a["b_eg"])
            if scheme == "four_level_asym":
                return FourLevelAsym(a["t_cg_ms"] * 1e-3, a["t_fc_ms"] * 1e-3, a["b_eg"], a["b_ec"],
                                     a["b_ef"])
            return FourLevelSym(a["t_r1_ms"] * 1e-3, a["t_r2_ms"] * 1e-3, a["b_er1"], a["b_eg"],
                                a["b_er2"])
        except ParameterError as exc:
            raise ScenarioError(str(exc)) from None

    def lock_system(self):
        from .pdh import LockSystem

        a = self["atomic"]
        rabi = TWO_PI * a["rabi_khz"] * 1e3
        opt = self.optical()
        kw = dict(delta0=TWO_PI * a["delta0_khz"] * 1e3, saturation_derating=a["saturation_derating"])
        if rabi == 0:
            return LockSystem(opt, self.levels(), a["power_mw"] * 1e-3, math.inf, **kw)
        return LockSystem.with_rabi(opt, self.levels(), rabi, a["power_mw"] * 1e-3, **kw)

    def plant(self):
        from .loop import LoopPlant

        return LoopPlant.from_system(self.lock_system(), self["modulation"]["m"])

    def electronics_base(self):
        from .loop import ElectronicsConfig

        e = self["electronics"]
        return ElectronicsConfig(R1=e["r1_ohm"], R2=e["r2_ohm"], R3=e["r3_ohm"], R4=e["r4_ohm"],
                                 C=e["c_nf"] * 1e-9, loop_delay=e["loop_delay_ns"] * 1e-9,
                                 digital_pi_tau=e["digital_pi_tau_ms"] * 1e-3,
                                 lo_phase=math.radians(e["lo_phase_deg"]), sign=e["sign"],
                                 crossover=TWO_PI * e["crossover_mhz"] * 1e6,
                                 gain_scale=e["gain_scale"])

    def electronics(self, plant=None):
        cfg = self.electronics_base()
        if self["electronics"]["match_corners"]:
            plant = plant or self.plant()
            cfg = cfg.matched(plant.trio, plant.T_rg)
        return cfg

    def noise(self):
        from .loop import LaserNoiseModel

        n = self["noise"]
        return LaserNoiseModel(n["excursion_khz"] * 1e3, n["bandwidth_khz"] * 1e3, n["seed"])

    def to_ini(self) -> str:
        lines = []
        for sec, keys in self.values.items():
            lines.append(f"[{sec}]")
            lines.extend(f"{k} = {v}" for k, v in keys.items())
            lines.append("")
        return "\n".join(lines)
