"""Command-line interface: ``holelock <command> [scenario.ini] [options]``.

Every command reads an optional scenario file (see :mod:`holelock.scenario`),
applies ``--set section.key=value`` overrides and writes CSV to ``--out``
(stdout by default) with a ``# scenario-hash:`` provenance line.  Summaries
go to stderr as JSON, or to ``--summary FILE``.

Exit codes: 0 success, 1 invalid scenario or input, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__
from .errors import NumericalError, ParameterError
from .scenario import Scenario, ScenarioError

TWO_PI = 2 * math.pi
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(columns: dict, scenario_hash: str, out=None, every: int = 1) -> None:
    """Write equal-length columns as CSV, preceded by the provenance comment."""
    names = list(columns)
    data = [np.asarray(columns[n]) for n in names]
    n = len(data[0]) if data else 0
    fh = out if out is not None else sys.stdout
    fh.write(f"# scenario-hash: {scenario_hash}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(names)
    for i in range(0, n, max(every, 1)):
        w.writerow([_fmt(col[i]) for col in data])


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def _emit(args, columns, scenario, every=1):
    fh, close = _open_out(args.out)
    try:
        write_csv(columns, scenario.hash(), fh, every)
    finally:
        if close:
            fh.close()


def _summary(args, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, default=float)
    if getattr(args, "summary", None):
        with open(args.summary, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stderr.write(text + "\n")


def read_csv(path: str) -> tuple[list[str], np.ndarray]:
    """Read a numeric CSV with a header row; lines starting with '#' are skipped."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise ScenarioError(f"cannot read input: {exc}") from None
    if len(lines) < 2:
        raise ScenarioError(f"{path}: need a header row and data")
    rows = list(csv.reader(io.StringIO("".join(lines))))
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise ScenarioError(f"{path}: non-numeric value ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ScenarioError(f"{path}: ragged rows")
    return header, data


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def hole_spectrum(sc: Scenario):
    """Carrier and sideband regions of the burned absorption spectrum."""
    from .atomic import measured_width_depth, trapping_params
    from .lineshape import (Gaussian, Infinite, Lorentzian, background_alpha, composite_alpha,
                            hole_alpha, pr_yso_mix)
    from .pdh import bessel_weights

    a, mod, an = sc["atomic"], sc["modulation"], sc["analysis"]
    system = sc.lock_system()
    opt = system.optical
    gh = system.gamma_h
    m = mod["m"]
    trio = system.trio(m)
    alpha0 = opt.alpha0L / (a["length_mm"] * 1e-3)
    centre = system.delta0
    prof = {"infinite": Infinite(centre), "lorentzian": Lorentzian(TWO_PI * a["gamma_inh_ghz"] * 1e9, centre),
            "gaussian": Gaussian(TWO_PI * a["gamma_inh_ghz"] * 1e9, centre)}[a["profile"]]
    wm = TWO_PI * mod["f_m_mhz"] * 1e6
    span = an["hole_span"] * trio.carrier.gamma_hole
    n = an["n_points"]
    offsets = np.linspace(-span, span, n)
    omega = np.concatenate([centre - wm + offsets, centre + offsets, centre + wm + offsets])

    bg_r, bg_i = background_alpha(prof, alpha0, gh, omega)
    ar, ai = bg_r.copy(), bg_i.copy()
    if a["species"] == "pr_yso":
        _, R = trapping_params(system.levels, opt.T1)
        J0, J1 = bessel_weights(m)
        for pos, weight in ((centre, J0**2), (centre - wm, J1**2), (centre + wm, J1**2)):
            mix = pr_yso_mix(alpha0, weight * system.s0, R, gh, pos,
                             saturation_derating=system.saturation_derating)
            r_, i_ = composite_alpha(mix, prof, gh, omega)
            ar += r_ - bg_r
            ai += i_ - bg_i
    else:
        for h, shift in ((trio.carrier, 0.0), (trio.sideband, -wm), (trio.sideband, wm)):
            r_, i_ = hole_alpha(alpha0, prof, replace(h, delta0=centre + shift), gh, omega)
            ar += r_ - bg_r
            ai += i_ - bg_i
    summary = {
        "s0": system.s0, "gamma_h_hz": gh / TWO_PI, "m": m,
        "carrier": {"d_hole": trio.carrier.d_hole, "gamma_hole_hz": trio.carrier.gamma_hole / TWO_PI,
                    "measured_width_hz": measured_width_depth(trio.carrier)[0] / TWO_PI,
                    "measured_depth": measured_width_depth(trio.carrier)[1]},
        "sideband": {"d_hole": trio.sideband.d_hole, "gamma_hole_hz": trio.sideband.gamma_hole / TWO_PI,
                     "measured_width_hz": measured_width_depth(trio.sideband)[0] / TWO_PI,
                     "measured_depth": measured_width_depth(trio.sideband)[1]},
    }
    return {"omega_hz": omega / TWO_PI, "alpha_r_per_m": ar, "alpha_i_per_m": ai}, summary


def cmd_hole(sc, args):
    cols, summary = hole_spectrum(sc)
    _emit(args, cols, sc)
    _summary(args, summary)


def transfer_table(sc: Scenario):
    from .pdh import loop_phase_deg, transfer, transfer_asymptote

    an = sc["analysis"]
    system = sc.lock_system()
    trio = system.trio(sc["modulation"]["m"])
    f = np.logspace(math.log10(an["f_min_hz"]), math.log10(an["f_max_hz"]), an["n_points"])
    w = TWO_PI * f
    T = transfer(trio, system.T_rg, w)
    lm = transfer_asymptote(trio, system.T_rg, w, "low_mid")
    hi = transfer_asymptote(trio, system.T_rg, w, "high")
    Tneg = transfer(trio, system.T_rg, -w)
    cols = {"omega_hz": f, "t_mag": np.abs(T), "t_phase_deg": np.degrees(np.angle(T)),
            "t_re": T.real, "t_im": T.imag, "loop_phase_deg": loop_phase_deg(T),
            "lowmid_mag": np.abs(lm), "high_mag": np.abs(hi),
            "conj_sym_err": np.abs(Tneg - np.conj(T))}
    return cols, {"T_rg_s": system.T_rg, "x_c": trio.x_c, "x_s": trio.x_s}


def cmd_transfer(sc, args):
    cols, summary = transfer_table(sc)
    _emit(args, cols, sc)
    _summary(args, summary)


def cmd_threshold(sc, args):
    from .drift import drift_threshold, sign_threshold

    an = sc["analysis"]
    ms = np.linspace(an["m_min"], an["m_max"], an["m_points"])
    cols = {"m": ms, "drift_threshold": [drift_threshold(m) for m in ms],
            "sign_threshold": [sign_threshold(m) for m in ms]}
    _emit(args, cols, sc)
    m = sc["modulation"]["m"]
    _summary(args, {"m": m, "drift_threshold": drift_threshold(m), "sign_threshold": sign_threshold(m)})


def optimize_summary(sc: Scenario, drift_constraint: bool) -> dict:
    from .pdh import optimize_modulation

    res = optimize_modulation(sc.lock_system(), drift_constraint=drift_constraint)
    return {"m": res.m, "objective_w_s_per_rad": res.objective, "drift_constraint": res.constrained}


def cmd_optimize(sc, args):
    payload = optimize_summary(sc, args.drift_constraint)
    _emit(args, {k: [v] for k, v in payload.items()}, sc)
    _summary(args, payload)


def simulate(sc: Scenario, seed=None, duration=None):
    from . import loop

    an, n = sc["analysis"], sc["noise"]
    plant = sc.plant()
    cfg = sc.electronics(plant)
    table = loop.drift_table(plant) if an["drift_mode"] else None
    trace = loop.run_closed_loop(plant, cfg, sc.noise(), an["dt_ns"] * 1e-9,
                                 duration if duration is not None else an["duration_ms"] * 1e-3,
                                 seed=seed, detector_noise=n["detector_noise"], drift=table)
    return trace, loop.summarize_trace(trace)


def cmd_simulate(sc, args):
    trace, summary = simulate(sc, args.seed, None if args.duration_ms is None else args.duration_ms * 1e-3)
    _emit(args, trace.as_columns(), sc, every=args.every)
    _summary(args, summary)


def cmd_analyze(sc, args):
    from .analysis import fid_phase_stats, gate_fidelity, hole_asymmetry, kramers_kronig, phase_error_epsilon

    an = sc["analysis"]
    if args.kind == "fidelity":
        a2 = an["fidelity_alpha2"] if args.alpha2 is None else args.alpha2
        ph = an["fidelity_phase_deg"] if args.phase_deg is None else args.phase_deg
        dist = an["fidelity_distribution"]
        eps = phase_error_epsilon(math.radians(ph), dist)
        F = gate_fidelity(a2, math.radians(ph), dist)
        _emit(args, {"alpha2": [a2], "phase_rms_deg": [ph], "epsilon": [eps], "fidelity": [F]}, sc)
        _summary(args, {"fidelity": F, "epsilon": eps})
        return
    if not args.input:
        raise ScenarioError(f"analyze {args.kind} needs --input")
    header, data = read_csv(args.input)
    if args.kind == "kk":
        try:
            i_w, i_a = header.index("omega_hz"), header.index("alpha_r_per_m")
        except ValueError:
            raise ScenarioError("kk input needs columns omega_hz, alpha_r_per_m") from None
        w, ar = data[:, i_w], data[:, i_a]
        ai = kramers_kronig(TWO_PI * w, ar, baseline="edges")
        asym = hole_asymmetry(TWO_PI * w, ar, TWO_PI * an["kk_delta0_hz"])
        _emit(args, {"omega_hz": w, "alpha_i_per_m": ai}, sc)
        _summary(args, {"hole_asymmetry_per_m": asym})
        return
    # fid-stats: rows are time bins, columns are repetitions
    rep = fid_phase_stats(data, an["bin_width_ns"] * 1e-9)
    _emit(args, rep.as_columns(), sc)
    _summary(args, {"fit_intercept_deg": rep.fit[0], "fit_slope_deg_per_s": rep.fit[1],
                    "std_f_10us_hz": float(rep.std_f_fit(10e-6)),
                    "clamped_bins": int(np.count_nonzero(rep.clamped))})


SWEEP_TARGETS = ("hole", "optimize-m", "simulate")


def _sweep_point(sc: Scenario, target: str) -> dict:
    if target == "hole":
        _, s = hole_spectrum(sc)
        return {"gamma_hole_c_hz": s["carrier"]["gamma_hole_hz"], "gamma_hole_s_hz": s["sideband"]["gamma_hole_hz"],
                "measured_depth_c": s["carrier"]["measured_depth"]}
    if target == "optimize-m":
        return optimize_summary(sc, False)
    _, s = simulate(sc)
    out = {"truncated": s["truncated"], "oscillating": s["oscillating"],
           "oscillation_hz": s["oscillation_hz"], "excursion_rms_hz": s["excursion_rms_hz"]}
    out.update({f"phase_std_deg_{k}": v for k, v in s["phase_std_deg"].items()})
    return out


def cmd_sweep(sc, args):
    if "." not in args.key:
        raise ScenarioError("--key must look like section.key")
    section, key = args.key.split(".", 1)
    points = []
    for raw in args.values.split(","):
        p = sc.copy()
        p.set(section, key, raw.strip())
        p.validate()
        points.append(p)
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(lambda p: _sweep_point(p, args.target), points))
    cols = {args.key: [p[section][key] for p in points]}
    for name in results[0]:
        cols[name] = [r[name] for r in results]
    _emit(args, cols, sc)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a scenario key; may be repeated")
    common.add_argument("--out", "-o", help="CSV output file (default: stdout)")
    common.add_argument("--summary", help="write the JSON summary here instead of stderr")
    common.add_argument("--validate", action="store_true", help="check the scenario and exit")

    p = argparse.ArgumentParser(prog="holelock", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("hole", parents=[common], help="hole parameters and absorption/dispersion spectrum")
    sub.add_parser("transfer", parents=[common], help="error-signal transfer function and asymptotes")
    sub.add_parser("threshold", parents=[common], help="drift and sign thresholds versus m")
    o = sub.add_parser("optimize-m", parents=[common], help="modulation index maximising the mid-band signal")
    o.add_argument("--drift-constraint", action="store_true", help="stay below the drift threshold")
    s = sub.add_parser("simulate", parents=[common], help="closed-loop time-domain simulation")
    s.add_argument("--seed", type=int, help="noise seed (overrides noise.seed)")
    s.add_argument("--duration-ms", type=float, help="run length (overrides analysis.duration_ms)")
    s.add_argument("--every", type=int, default=1, help="write every N-th sample")
    a = sub.add_parser("analyze", parents=[common], help="post-analysis of spectra and phase records")
    a.add_argument("kind", choices=("kk", "fid-stats", "fidelity"))
    a.add_argument("--input", "-i", help="input CSV (kk: omega_hz,alpha_r_per_m; fid-stats: bins x repetitions)")
    a.add_argument("--alpha2", type=float, help="fidelity: |alpha|^2")
    a.add_argument("--phase-deg", type=float, help="fidelity: rms phase error")
    w = sub.add_parser("sweep", parents=[common], help="vary one scenario key over a list of values")
    w.add_argument("--key", required=True, help="section.key to vary")
    w.add_argument("--values", required=True, help="comma-separated values")
    w.add_argument("--target", choices=SWEEP_TARGETS, default="hole")
    w.add_argument("--workers", type=int, default=4)
    # after each command's own positionals, so that `analyze fidelity lock.ini` parses
    for sp in sub.choices.values():
        sp.add_argument("scenario", nargs="?", help="scenario INI file (defaults are used without one)")
    return p


COMMANDS = {"hole": cmd_hole, "transfer": cmd_transfer, "threshold": cmd_threshold,
            "optimize-m": cmd_optimize, "simulate": cmd_simulate, "analyze": cmd_analyze,
            "sweep": cmd_sweep}

def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        sc = Scenario.from_file(args.scenario) if args.scenario else Scenario.defaults()
        sc.apply_overrides(args.set)
        sc.validate()
        if args.validate:
            sys.stderr.write(f"scenario OK ({sc.hash()})\n")
            return EXIT_OK
        COMMANDS[args.command](sc, args)
    except (ScenarioError, ParameterError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except BrokenPipeError:  # output piped into e.g. `head`
        sys.stdout = open(os.devnull, "w")
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
