"""Command-line front end.

Commands: sample-traps, run, trace, levels, gate-time, calibrate.
Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__, svg
from .config import ConfigError, load_config_file, merge, to_experiment
from .device import GateTimeError, energy_levels, exchange_estimate, solve_gate_time
from .noise import calibrate_overhauser_sigma, free_induction_coherence
from .propagation import UnitarityError, state_trace
from .stats import (
    SCHEMA_VERSION,
    ExperimentConfig,
    ExperimentError,
    count_histogram,
    gate_for,
    run_experiment,
    sample_device_traps,
    stream,
    summarize_shifts,
    device_traps,
    trajectory_noise,
)
from .traps import QuadratureError

log = logging.getLogger("trapgate")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
MANIFEST = "MANIFEST.json"
NUMERICAL_ERRORS = (GateTimeError, QuadratureError, UnitarityError, ExperimentError, ArithmeticError)

# flag name -> config key
OVERRIDES = {
    "devices": "devices",
    "trajectories": "trajectories",
    "tc_ueV": "tc_ueV",
    "bias_ueV": "bias_ueV",
    "sigma_nm": "sigma_nm",
    "z_setback_nm": "z_setback_nm",
    "nit_per_cm2": "nit_per_cm2",
    "t2star_us": "t2star_us",
    "tau_rtn_ms": "tau_rtn_ms",
    "bins": "bins",
}


class _Outputs:
    """Collects written files and writes each one atomically."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.paths: list[str] = []

    def write(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        _atomic_write(path, text)
        self.paths.append(name)
        return path


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _num(x) -> str:
    return repr(float(x))


def _json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key = value config file")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker processes")
    common.add_argument("--no-noise", action="store_true", help="no traps and no nuclear field")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="per-device table format")
    common.add_argument("--svg", action="store_true", help="also write SVG plots")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key (repeatable)")
    for flag, key in OVERRIDES.items():
        common.add_argument(f"--{flag.replace('_', '-')}", dest=flag, default=None, help=f"override {key}")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="trapgate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"trapgate {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("sample-traps", parents=[common], help="trap-count and interdot-shift statistics")

    run = sub.add_parser("run", parents=[common], help="fidelity ensemble for one gate")
    run.add_argument("--gate", choices=("cz", "composite"), default=None)

    trace = sub.add_parser("trace", parents=[common], help="P(|+>) transients for sampled devices")
    trace.add_argument("--traces", type=int, default=10, help="number of devices to trace")
    trace.add_argument("--dt", type=float, default=1.0, help="sampling interval (ns)")
    trace.add_argument("--gate", choices=("cz", "composite"), default=None)

    levels = sub.add_parser("levels", parents=[common], help="energy levels versus detuning")
    levels.add_argument("--eps-min", type=float, default=None, help="first detuning (ueV), default 0")
    levels.add_argument("--eps-max", type=float, default=None, help="last detuning (ueV), default U0 - 30")
    levels.add_argument("--points", type=int, default=201)

    sub.add_parser("gate-time", parents=[common], help="CZ gate time at the bias point")

    cal = sub.add_parser("calibrate", parents=[common], help="Overhauser width for the T2* target")
    cal.add_argument("--samples", type=int, default=10_000, help="Monte Carlo draws for the FID check")
    return parser


def resolve_config(args) -> tuple[dict, ExperimentConfig]:
    """Defaults < config file < command-line flags."""
    file_layer = load_config_file(args.config) if args.config else {}
    flag_layer = {key: getattr(args, flag) for flag, key in OVERRIDES.items()}
    if args.seed is not None:
        flag_layer["seed"] = args.seed
    if getattr(args, "gate", None):
        flag_layer["gate"] = args.gate
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        flag_layer[key.strip()] = value.strip()
    if args.no_noise:
        flag_layer["nit_per_cm2"] = 0.0
        flag_layer["t2star_us"] = math.inf
    flat = merge(file_layer, flag_layer)
    return flat, to_experiment(flat)


def _manifest(outputs: _Outputs, flat: dict, config: ExperimentConfig, command: str, started: float,
              status: str = "ok", failures: dict | None = None) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool": "trapgate",
        "version": __version__,
        "command": command,
        "master_seed": config.master_seed,
        "config": _config_echo(flat),
        "wall_time_s": round(time.perf_counter() - started, 3),
        "outputs": sorted(outputs.paths),
        "status": status,
    }
    if failures:
        doc["failures"] = {str(k): v for k, v in sorted(failures.items())}
    _atomic_write(outputs.out_dir / MANIFEST, _json(doc))


def _config_echo(flat: dict) -> dict:
    return {k: (str(v) if isinstance(v, float) and not math.isfinite(v) else v) for k, v in flat.items()}


def cmd_sample_traps(args, flat, config, outputs) -> int:
    records = sample_device_traps(config, args.threads)
    counts, tally = count_histogram(records)
    outputs.write("trap_counts.csv", _csv(
        ["trap_count", "devices", "fraction"],
        [[int(c), int(n), _num(n / len(records))] for c, n in zip(counts, tally)],
    ))
    shifts = summarize_shifts(config, records=records)
    device_rows = [[r.device_index, r.trap_count, _num(r.total_static_shift)] for r in records]
    if args.format == "json":
        outputs.write("shifts.json", _json([dict(zip(["device_index", "trap_count", "total_shift_ueV"], row))
                                            for row in device_rows]))
    else:
        outputs.write("shifts.csv", _csv(["device_index", "trap_count", "total_shift_ueV"], device_rows))
    outputs.write("shift_histogram.csv", _histogram_csv(shifts, "total_shift_ueV"))
    outputs.write("summary.json", _json({
        "schema_version": SCHEMA_VERSION,
        "quantity": "total_shift_ueV",
        "config": _config_echo(flat),
        "seed": config.master_seed,
        "mean_trap_count": float(np.mean([r.trap_count for r in records])),
        "zero_trap_fraction": float(tally[0] / len(records)),
        "five_or_more_fraction": float(np.sum(tally[5:]) / len(records)),
        **_summary_doc(shifts),
    }))
    if args.svg:
        outputs.write("trap_counts.svg", svg.bar_chart(counts, tally, "Traps per device", "trap count", "devices"))
        outputs.write("shift_histogram.svg", svg.histogram_with_cdf(
            shifts.bin_edges, shifts.counts, shifts.cdf, "Interdot shift", "V_L - V_R (ueV)"))
    print(f"devices={len(records)} mean_traps={np.mean([r.trap_count for r in records]):.4f} "
          f"zero_fraction={tally[0] / len(records):.4f}")
    return EXIT_OK


def _summary_doc(result) -> dict:
    return {
        "summary": result.summary,
        "histogram": {"bin_edges": [float(e) for e in result.bin_edges],
                      "counts": [int(c) for c in result.counts]},
        "cdf": [float(c) for c in result.cdf],
    }


def _histogram_csv(result, label: str) -> str:
    rows = [[_num(a), _num(b), int(c), _num(f)]
            for a, b, c, f in zip(result.bin_edges[:-1], result.bin_edges[1:], result.counts, result.cdf[1:])]
    return _csv([f"{label}_lo", f"{label}_hi", "count", "cdf"], rows)


def _device_rows(results):
    return [[r.device_index, r.trap_count, _num(r.total_static_shift), _num(r.mean_fidelity),
             _num(r.fidelity_std_error)] for r in results]


DEVICE_COLUMNS = ["device_index", "trap_count", "total_shift_ueV", "mean_fidelity", "std_error"]


def _write_devices(outputs, fmt, results):
    rows = _device_rows(results)
    if fmt == "json":
        outputs.write("devices.json", _json({"schema_version": SCHEMA_VERSION,
                                             "devices": [dict(zip(DEVICE_COLUMNS, row)) for row in rows]}))
    else:
        outputs.write("devices.csv", f"# schema_version={SCHEMA_VERSION}\n" + _csv(DEVICE_COLUMNS, rows))


def cmd_run(args, flat, config, outputs) -> int:
    try:
        result = run_experiment(config, args.threads)
    except ExperimentError as exc:
        _write_devices(outputs, args.format, exc.partial)
        outputs.failures = exc.failures
        raise
    _write_devices(outputs, args.format, result.devices)
    outputs.write("fidelity_histogram.csv", _histogram_csv(result, "fidelity"))
    schedule, _ = gate_for(config)
    outputs.write("summary.json", _json({
        "schema_version": SCHEMA_VERSION,
        "quantity": "mean_fidelity",
        "gate": config.gate,
        "gate_time_ns": schedule.total_two_qubit_time,
        "config": _config_echo(flat),
        "seed": config.master_seed,
        **_summary_doc(result),
    }))
    if args.svg:
        outputs.write("fidelity_histogram.svg", svg.histogram_with_cdf(
            result.bin_edges, result.counts, result.cdf, f"{config.gate} gate fidelity", "fidelity"))
    s = result.summary
    print(f"gate={config.gate} devices={s['n']} mean={s['mean']:.6f} p25={s['percentiles']['25']:.6f}")
    return EXIT_OK


def cmd_trace(args, flat, config, outputs) -> int:
    schedule, _ = gate_for(config)
    if args.traces < 1:
        raise ConfigError("--traces must be >= 1")
    columns = []
    times = None
    for device_index in range(args.traces):
        traps = device_traps(config, device_index)
        noise = trajectory_noise(config, device_index, 0, traps, schedule.total_two_qubit_time)
        times, probs = state_trace(schedule, config.params, noise, dt=args.dt, rx_frame=config.rx_frame,
                                   pulse_shape=config.pulse_shape)
        columns.append(probs)
    header = ["t_ns"] + [f"p_plus_device{i}" for i in range(args.traces)]
    rows = [[_num(t)] + [_num(c[k]) for c in columns] for k, t in enumerate(times)]
    outputs.write("trace.csv", _csv(header, rows))
    if args.svg:
        outputs.write("trace.svg", svg.line_chart(times, np.array(columns).T, "Right-qubit |+> probability",
                                                  "t (ns)", "P(|+>)"))
    print(f"traces={args.traces} samples={len(times)} t_end={times[-1]:.3f} ns")
    return EXIT_OK


def cmd_levels(args, flat, config, outputs) -> int:
    p = config.params
    lo = 0.0 if args.eps_min is None else args.eps_min
    hi = p.U0 - 30.0 if args.eps_max is None else args.eps_max
    if args.points < 1 or hi < lo:
        raise ConfigError("levels sweep needs points >= 1 and eps_max >= eps_min")
    eps = np.linspace(lo, hi, args.points) if args.points > 1 else np.array([lo])
    levels = np.array([energy_levels(p, e) for e in eps])
    header = ["epsilon_ueV"] + [f"E{k}_ueV" for k in range(levels.shape[1])]
    outputs.write("levels.csv", _csv(header, [[_num(e)] + [_num(v) for v in row] for e, row in zip(eps, levels)]))
    if args.svg:
        # the four lowest levels carry the S11 / T branches of interest
        outputs.write("levels.svg", svg.line_chart(eps, levels[:, :4], "Energy levels", "epsilon (ueV)", "E (ueV)"))
    print(f"points={eps.size}")
    return EXIT_OK


def cmd_gate_time(args, flat, config, outputs) -> int:
    p = config.params
    t_gate = solve_gate_time(p, pulse_shape=config.pulse_shape)
    j = exchange_estimate(p, p.epsilon_on)
    seed = math.pi * p.hbar / j
    outputs.write("gate_time.json", _json({"schema_version": SCHEMA_VERSION, "t_gate_ns": t_gate,
                                           "analytic_seed_ns": seed, "J_ueV": j}))
    print(f"t_gate_ns={t_gate:.6f} analytic_seed_ns={seed:.6f} J_ueV={j:.6g}")
    return EXIT_OK


def cmd_calibrate(args, flat, config, outputs) -> int:
    t2 = config.T2_star
    sigma = calibrate_overhauser_sigma(t2, config.params.g_L)
    if math.isfinite(t2) and sigma > 0:
        rng = stream(config.master_seed, 0, 0, "calibrate")
        coherence = float(free_induction_coherence(sigma, [t2], args.samples, rng, g=config.params.g_L)[0])
        residual = abs(coherence - math.exp(-1.0)) / math.exp(-1.0)
    else:
        coherence, residual = 1.0, 0.0
    outputs.write("calibration.json", _json({"schema_version": SCHEMA_VERSION, "T2_star_ns": str(t2),
                                             "sigma_B_T": sigma, "coherence_at_T2": coherence,
                                             "relative_residual": residual, "samples": args.samples}))
    print(f"sigma_B_T={sigma:.6g} coherence_at_T2={coherence:.6f} residual={residual:.4%}")
    return EXIT_OK


COMMANDS = {
    "sample-traps": cmd_sample_traps,
    "run": cmd_run,
    "trace": cmd_trace,
    "levels": cmd_levels,
    "gate-time": cmd_gate_time,
    "calibrate": cmd_calibrate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        flat, config = resolve_config(args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    outputs = _Outputs(args.out)
    outputs.failures = None
    status, code = "ok", EXIT_OK
    try:
        code = COMMANDS[args.command](args, flat, config, outputs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        status, code = "config error", EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        status, code = "numerical failure", EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        _manifest(outputs, flat, config, args.command, started, status, outputs.failures)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
