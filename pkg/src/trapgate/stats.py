"""Two-level Monte Carlo over devices and noise trajectories.

Seeding
-------
Every random stream is derived from the master seed, so any device or
trajectory can be regenerated on its own. A child seed is the first 8
bytes, read little-endian as an unsigned integer, of

    blake2b(struct.pack("<QQq", master_seed, device_index, trajectory_index)
            + tag.encode("utf-8"), digest_size=8)

with ``trajectory_index = -1`` for device-level streams. Trap placement
uses tag ``"traps"``; each trajectory's telegraph record and Overhauser
fields come from one stream with tag ``"noise"``. Child seeds initialize a
numpy PCG64 generator via ``np.random.default_rng``.

Results are reduced in device order, so they do not depend on how many
worker processes ran them.
"""

from __future__ import annotations

import hashlib
import logging
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .device import DeviceParams
from .noise import NoiseRealization, calibrate_overhauser_sigma, sample_overhauser, sample_rtn
from .propagation import (
    PulseSchedule,
    make_schedule,
    propagate,
    propagate_static_batch,
    propagator_fidelity,
)
from .traps import DotGeometry, SamplingSpec, TrapSet, build_trap_set

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DEVICE_STREAM = -1
PERCENTILES = (5, 25, 50, 75, 95)


class ExperimentError(RuntimeError):
    """Some devices failed; ``partial`` holds the devices that succeeded."""

    def __init__(self, failures: dict[int, str], partial: list):
        listing = ", ".join(str(i) for i in sorted(failures))
        super().__init__(f"{len(failures)} device(s) failed: {listing}")
        self.failures = failures
        self.partial = partial


def child_seed(master_seed: int, device_index: int, trajectory_index: int, tag: str) -> int:
    payload = struct.pack("<QQq", master_seed, device_index, trajectory_index) + tag.encode("utf-8")
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def stream(master_seed: int, device_index: int, trajectory_index: int, tag: str) -> np.random.Generator:
    return np.random.default_rng(child_seed(master_seed, device_index, trajectory_index, tag))


@dataclass(frozen=True)
class ExperimentConfig:
    params: DeviceParams = field(default_factory=DeviceParams)
    sampling: SamplingSpec = field(default_factory=SamplingSpec)
    geometry: DotGeometry = field(default_factory=DotGeometry)
    gate: str = "cz"
    n_devices: int = 1000
    n_trajectories: int = 200
    T2_star: float = 1e5  # ns
    tau_rtn: float = 1e6  # ns
    master_seed: int = 0
    bins: int = 40
    subtract_ensemble_mean: bool = False
    shift_scale: float = 1.0  # test hook: multiplies every trap shift
    pulse_shape: str = "adiabatic"
    rx_frame: str = "rotating"
    reverse_composite: bool = False

    def __post_init__(self):
        if self.n_devices < 1 or self.n_trajectories < 1:
            raise ValueError("n_devices and n_trajectories must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")
        if self.gate not in ("cz", "composite"):
            raise ValueError(f"gate must be 'cz' or 'composite', got {self.gate!r}")
        if not self.T2_star > 0 or not self.tau_rtn > 0:
            raise ValueError("T2_star and tau_rtn must be > 0")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")

    def replace(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    @property
    def sigma_B(self) -> tuple[float, float]:
        return (calibrate_overhauser_sigma(self.T2_star, self.params.g_L),
                calibrate_overhauser_sigma(self.T2_star, self.params.g_R))


@dataclass(frozen=True)
class DeviceResult:
    device_index: int
    trap_count: int
    total_static_shift: float  # ueV
    mean_fidelity: float
    fidelity_std_error: float


@dataclass(frozen=True)
class TrapRecord:
    device_index: int
    trap_count: int
    total_static_shift: float  # ueV


@dataclass
class EnsembleResult:
    records: list
    values: np.ndarray
    quantity: str
    summary: dict
    bin_edges: np.ndarray
    counts: np.ndarray
    cdf: np.ndarray  # cumulative fraction at each bin edge

    @property
    def devices(self) -> list:
        return self.records


def percentile(samples, q: float) -> float:
    """Linear-interpolation quantile: position q/100 * (n - 1) in the sorted samples."""
    data = np.asarray(samples, dtype=float)
    if data.size == 0:
        raise ValueError("percentile of an empty sample")
    if not 0 <= q <= 100:
        raise ValueError(f"q must be in [0, 100], got {q}")
    return float(np.percentile(data, q, method="linear"))


def summarize(values, bins: int = 40, value_range=None) -> tuple[dict, np.ndarray, np.ndarray, np.ndarray]:
    """Summary statistics, histogram and cumulative curve of ``values``."""
    values = np.asarray(values, dtype=float)
    summary = {
        "n": int(values.size),
        "mean": float(np.mean(values)),
        "median": percentile(values, 50),
        "std": float(np.std(values, ddof=1)) if values.size > 1 else 0.0,
        "min": float(np.min(values)),
        "max": float(np.max(values)),
        "percentiles": {str(q): percentile(values, q) for q in PERCENTILES},
    }
    counts, edges = np.histogram(values, bins=bins, range=value_range)
    cdf = np.concatenate([[0.0], np.cumsum(counts) / values.size])
    return summary, edges, counts, cdf


@lru_cache(maxsize=16)
def _gate(params: DeviceParams, gate: str, pulse_shape: str, rx_frame: str,
          reverse: bool) -> tuple[PulseSchedule, np.ndarray]:
    kwargs = {"pulse_shape": pulse_shape}
    if gate == "composite":
        kwargs["reverse"] = reverse
    schedule = make_schedule(gate, params, **kwargs)
    ideal = propagate(schedule, params, None, rx_frame, pulse_shape=pulse_shape).matrix
    return schedule, ideal


def gate_for(config: ExperimentConfig) -> tuple[PulseSchedule, np.ndarray]:
    """Schedule and ideal propagator for the configured gate (cached per process)."""
    return _gate(config.params, config.gate, config.pulse_shape, config.rx_frame,
                 config.reverse_composite)


def device_traps(config: ExperimentConfig, device_index: int) -> TrapSet:
    rng = stream(config.master_seed, device_index, DEVICE_STREAM, "traps")
    traps = build_trap_set(config.sampling, config.geometry, rng)
    return traps.scaled(config.shift_scale) if config.shift_scale != 1.0 else traps


def trajectory_noise(config: ExperimentConfig, device_index: int, trajectory_index: int,
                     traps: TrapSet, duration: float) -> NoiseRealization:
    rng = stream(config.master_seed, device_index, trajectory_index, "noise")
    rtn = sample_rtn(len(traps), config.tau_rtn, duration, rng)
    overhauser = sample_overhauser(config.sigma_B, rng)
    return NoiseRealization(rtn, overhauser, traps.detuning_shifts, config.subtract_ensemble_mean)


def trajectory_fidelities(config: ExperimentConfig, device_index: int, traps: TrapSet) -> np.ndarray:
    schedule, ideal = gate_for(config)
    duration = schedule.total_two_qubit_time
    realizations = [trajectory_noise(config, device_index, j, traps, duration)
                    for j in range(config.n_trajectories)]
    fidelities = np.empty(len(realizations))
    static = [j for j, r in enumerate(realizations) if not r.rtn.has_switches]
    if static:
        offsets = np.array([_static_offset(realizations[j]) for j in static])
        b_l = np.array([realizations[j].overhauser.B_eff_L for j in static])
        b_r = np.array([realizations[j].overhauser.B_eff_R for j in static])
        noisy = propagate_static_batch(schedule, config.params, offsets, b_l, b_r,
                                       config.rx_frame, config.pulse_shape)
        fidelities[static] = propagator_fidelity(noisy, ideal)
    for j, r in enumerate(realizations):
        if r.rtn.has_switches:
            noisy = propagate(schedule, config.params, r, config.rx_frame, pulse_shape=config.pulse_shape)
            fidelities[j] = propagator_fidelity(noisy, ideal)
    return fidelities


def _static_offset(r: NoiseRealization) -> float:
    states = np.asarray(r.rtn.initial_states, dtype=float)
    if r.subtract_mean:
        states = states - 0.5
    return math.fsum(s * d for s, d in zip(states, r.shifts))


def run_device(config: ExperimentConfig, device_index: int) -> DeviceResult:
    """Mean propagator fidelity of one device over its noise trajectories."""
    try:
        traps = device_traps(config, device_index)
        f = trajectory_fidelities(config, device_index, traps)
    except Exception as exc:
        raise RuntimeError(f"device {device_index}: {exc}") from exc
    stderr = float(np.std(f, ddof=1) / math.sqrt(f.size)) if f.size > 1 else 0.0
    return DeviceResult(device_index, traps.in_area_count, traps.total_shift, float(np.mean(f)), stderr)


def _run_device_safe(args):
    config, index = args
    try:
        return index, run_device(config, index), None
    except Exception as exc:  # reported per device by run_experiment
        return index, None, str(exc)


def _map_devices(func, config: ExperimentConfig, workers: int):
    jobs = [(config, i) for i in range(config.n_devices)]
    if workers <= 1:
        return [func(job) for job in jobs]
    chunk = max(1, config.n_devices // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, jobs, chunksize=chunk))


def run_experiment(config: ExperimentConfig, workers: int = 1) -> EnsembleResult:
    """Per-device fidelities plus ensemble summary for the configured gate."""
    gate_for(config)  # surface gate-time failures before fanning out
    outcomes = _map_devices(_run_device_safe, config, workers)
    results = [r for _, r, err in outcomes if err is None]
    failures = {i: err for i, _, err in outcomes if err is not None}
    if failures:
        raise ExperimentError(failures, results)
    values = np.array([r.mean_fidelity for r in results])
    summary, edges, counts, cdf = summarize(values, config.bins)
    log.info("gate=%s devices=%d mean=%.5f p25=%.5f", config.gate, len(results), summary["mean"],
             summary["percentiles"]["25"])
    return EnsembleResult(results, values, "mean_fidelity", summary, edges, counts, cdf)


def _trap_record(args):
    config, index = args
    traps = device_traps(config, index)
    return TrapRecord(index, traps.in_area_count, traps.total_shift)


def sample_device_traps(config: ExperimentConfig, workers: int = 1) -> list[TrapRecord]:
    return _map_devices(_trap_record, config, workers)


def summarize_shifts(config: ExperimentConfig, workers: int = 1,
                     records: list[TrapRecord] | None = None) -> EnsembleResult:
    """Distribution of the all-occupied interdot shift per device."""
    if records is None:
        records = sample_device_traps(config, workers)
    values = np.array([r.total_static_shift for r in records])
    summary, edges, counts, cdf = summarize(values, config.bins)
    return EnsembleResult(records, values, "total_shift_ueV", summary, edges, counts, cdf)


def count_histogram(records: list[TrapRecord]) -> tuple[np.ndarray, np.ndarray]:
    """(trap count, number of devices) for every count from 0 to the maximum."""
    counts = np.array([r.trap_count for r in records], dtype=int)
    tally = np.bincount(counts) if counts.size else np.zeros(1, dtype=int)
    return np.arange(tally.size), tally
