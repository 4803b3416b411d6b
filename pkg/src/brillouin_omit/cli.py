"""
Command-line entry point.

Exit codes: 0 success, 2 usage or configuration error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import formats
from .config import RunConfig, load_config, parse_quantity
from .fitting import CouplingMode, FitProblem, estimate_g0, fit, g0_confidence_interval
from .model import DomainError, DriveCondition, drive_from_power, photon_number
from .modes import classify_regime, splitting, threshold_power
from .synthesis import (
    detuning_map,
    fsr_from_temperature,
    sample_spectrum,
    temperature_for,
)

log = logging.getLogger("brillouin_omit")

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 2, 3


class UsageError(Exception):
    pass


def _power(text):
    return parse_quantity(text, "W")


def _freq(text):
    return parse_quantity(text, "Hz")


def _resolve_delta(cfg: RunConfig, args) -> tuple[float, float]:
    """FSR detuning and the matching cavity temperature for --delta / --temperature."""
    if (args.delta is None) == (args.temperature is None):
        raise UsageError("give exactly one of --delta or --temperature")
    if args.temperature is not None:
        temp = float(args.temperature)
        return fsr_from_temperature(cfg.thermal, temp), temp
    delta = _freq(args.delta)
    temp = temperature_for(cfg.thermal, delta) if cfg.thermal.slope else None
    return delta, temp


def _output(args, cfg: RunConfig, default: str) -> Path:
    return Path(args.out or cfg.out or default)


def cmd_simulate(cfg: RunConfig, args) -> int:
    delta, temp = _resolve_delta(cfg, args)
    power = _power(args.power)
    seed = cfg.seed if args.seed is None else args.seed
    noise = cfg.noise_sigma if args.noise is None else args.noise
    drive = drive_from_power(cfg.system, power, delta)
    spec = sample_spectrum(cfg.system, drive, cfg.omega_grid.around(cfg.system.omega_m), noise, seed)
    spec.meta.temperature = temp
    out = _output(args, cfg, "spectrum.csv")
    formats.write_spectrum(out, spec)
    print(f"wrote {len(spec)} points to {out} (g_m = {drive.g_m:.6g} Hz, delta = {delta:.6g} Hz)")
    return EXIT_OK


def cmd_map(cfg: RunConfig, args) -> int:
    power = _power(args.power)
    seed = cfg.seed if args.seed is None else args.seed
    noise = cfg.noise_sigma if args.noise is None else args.noise
    dmap = detuning_map(cfg.system, power, cfg.delta_grid.around(0.0),
                        cfg.omega_grid.around(cfg.system.omega_m), noise, seed)
    out = _output(args, cfg, "map.csv")
    formats.write_map(out, dmap)
    print(f"wrote {dmap.r_matrix.shape[0]}x{dmap.r_matrix.shape[1]} map to {out}")
    return EXIT_OK


def _report_lines(result, problem) -> list[str]:
    lines = [f"{n} = {v:.10g} ± {e:.3g}" for n, v, e in zip(result.names, result.x, result.stderr)]
    lines.append(f"chi2 = {result.chi2:.6g}")
    lines.append(f"dof = {result.dof}")
    lines.append(f"redchi = {result.redchi:.6g}")
    lines.append(f"iterations = {result.iterations}")
    lines.append(f"reason = {result.reason}")
    for j, p in enumerate(problem.group_powers):
        lines.append(f"group[{j}].power_w = {p:.10g}")
    return lines


def cmd_fit(cfg: RunConfig, args) -> int:
    if not args.files:
        raise UsageError("fit needs at least one data file")
    datasets = [formats.read_spectrum(f) for f in args.files]
    mode = CouplingMode(args.mode)
    problem = FitProblem(datasets, mode=mode, global_amp=args.global_amp,
                         photon_calib=cfg.system.photon_calib,
                         fixed={"omega_m": cfg.system.omega_m, "gamma_m": cfg.system.gamma_m}
                         if mode is CouplingMode.NONE else {})
    result = fit(problem)
    payload = result.as_dict()
    payload["files"] = [str(f) for f in args.files]
    payload["mode"] = mode.value
    lines = _report_lines(result, problem)
    if mode is CouplingMode.SCALING and result.g0 is not None:
        lines.append(f"g0 = {result.g0:.6g} ± {result.g0_stderr or 0:.3g} Hz")
    elif mode is CouplingMode.FREE:
        usable = problem.group_powers > 0
        if np.count_nonzero(usable) >= 2:
            idx = [problem.parameter_names.index(f"g_m[{j}]") for j in np.flatnonzero(usable)]
            g0, g0_err = estimate_g0(problem.group_powers[usable], result.x[idx],
                                     np.maximum(result.stderr[idx], 1e-300),
                                     cfg.system.photon_calib)
            lo, hi = g0_confidence_interval(g0, g0_err, len(idx))
            payload["g0"], payload["g0_stderr"] = g0, g0_err
            lines.append(f"g0 = {g0:.6g} ± {g0_err:.3g} Hz (95% CI {lo:.6g} .. {hi:.6g})")
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out or cfg.out:
        out = _output(args, cfg, "fit.json")
        formats.write_json(out, payload)
        formats.atomic_write_text(out.with_suffix(".txt"), text)
    if not result.success:
        log.warning("fit did not converge (%s)", result.reason)
    return EXIT_OK


def cmd_classify(cfg: RunConfig, args) -> int:
    p = cfg.system
    if (args.power is None) == (args.g_m is None):
        raise UsageError("give exactly one of --power or --g-m")
    if args.power is not None:
        drive = drive_from_power(p, _power(args.power))
    else:
        drive = DriveCondition.from_coupling(_freq(args.g_m), params=p)
    temp = cfg.bath_temperature if args.temperature is None else float(args.temperature)
    rc = classify_regime(p, drive, temp)
    try:
        p_th = f"{threshold_power(p):.6g}"
    except DomainError:
        p_th = "none"
    print(f"regime = {rc.regime.value}")
    print(f"g_m = {rc.g_m:.6g} Hz")
    print(f"strong_threshold = {rc.strong_threshold:.6g} Hz")
    print(f"splitting_onset = {rc.splitting_onset:.6g} Hz")
    print(f"threshold_power = {p_th} W")
    print(f"n_th = {rc.n_th:.6g}")
    print(f"coherence_threshold = {rc.coherence_threshold:.6g} Hz")
    print(f"quantum_coherent = {str(rc.quantum_coherent).lower()}")
    return EXIT_OK


REPORT_POWERS = (5.24e-3, 75.8e-3, 150e-3, 239e-3, 277.8e-3, 301e-3)


def cmd_report(cfg: RunConfig, args) -> int:
    """Derived figures of merit plus a plot-ready power-scaling table."""
    p = cfg.system
    rows = ["power_w,photons,g_m_hz,splitting_hz,regime"]
    for power in REPORT_POWERS:
        drive = drive_from_power(p, power)
        rc = classify_regime(p, drive, cfg.bath_temperature)
        rows.append(",".join([formats.format_float(power),
                              formats.format_float(photon_number(p, power)),
                              formats.format_float(drive.g_m),
                              formats.format_float(splitting(p, drive.g_m)),
                              rc.regime.value]))
    try:
        p_th = threshold_power(p)
    except DomainError:
        p_th = float("nan")
    summary = {
        "strong_threshold_hz": p.strong_threshold,
        "splitting_onset_hz": p.splitting_onset,
        "threshold_power_w": p_th,
        "g_m_at_301mW_hz": drive_from_power(p, 0.301).g_m,
        "n_th": classify_regime(p, drive_from_power(p, 0.0), cfg.bath_temperature).n_th,
    }
    for k, v in summary.items():
        print(f"{k} = {v:.6g}")
    table = "\n".join(rows) + "\n"
    if args.out or cfg.out:
        out = _output(args, cfg, "report.csv")
        formats.atomic_write_text(out, table)
        print(f"wrote power table to {out}")
    else:
        print(table, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="brillouin-omit",
                                     description="Brillouin cavity optomechanics simulator and fitter")
    parser.add_argument("--config", help="JSON run config (default: $BRILLOUIN_OMIT_CONFIG)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
        if out:
            sp.add_argument("--out", help="output path")

    sp = sub.add_parser("simulate", help="write one reflectivity spectrum")
    common(sp)
    sp.add_argument("--power", required=True, help="input power, e.g. 277.8mW")
    sp.add_argument("--delta", help="FSR detuning, e.g. 0MHz")
    sp.add_argument("--temperature", type=float, help="cavity temperature [degC]")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--noise", type=float, help="noise standard deviation on R")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("map", help="write a detuning map")
    common(sp)
    sp.add_argument("--power", required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--noise", type=float)
    sp.set_defaults(func=cmd_map)

    sp = sub.add_parser("fit", help="joint fit of spectrum files")
    common(sp)
    sp.add_argument("files", nargs="*")
    sp.add_argument("--mode", choices=[m.value for m in CouplingMode], default="free")
    sp.add_argument("--global-amp", action="store_true", help="one contrast factor for all files")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("classify", help="coupling regime at a power or coupling rate")
    common(sp, out=False)
    sp.add_argument("--power")
    sp.add_argument("--g-m", dest="g_m")
    sp.add_argument("--temperature", type=float, help="bath temperature [K]")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("report", help="derived thresholds and power-scaling table")
    common(sp)
    sp.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        return args.func(cfg, args)
    except (UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
