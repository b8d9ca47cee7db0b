"""Acceptance criteria 1-9, one test each; every test prints a PASS/FAIL line."""

import math
import os
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from trapgate.cli import main as cli_main
from trapgate.device import DeviceParams, exchange_estimate, solve_gate_time
from trapgate.noise import (
    NoiseRealization,
    OverhauserSample,
    RtnTrajectory,
    calibrate_overhauser_sigma,
    free_induction_coherence,
)
from trapgate.propagation import (
    composite_schedule,
    cz_schedule,
    propagate,
    propagate_static_batch,
    propagator_fidelity,
)
from trapgate.stats import DEVICE_STREAM, ExperimentConfig, run_experiment, stream
from trapgate.traps import DotGeometry, SamplingSpec, sample_traps

P = DeviceParams()
WORKERS = os.cpu_count() or 1


def record(number: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_poisson_trap_statistics():
    spec = SamplingSpec(density=2e10, area_side=100.0)
    start = time.perf_counter()
    counts = np.array([sample_traps(spec, stream(0, i, DEVICE_STREAM, "traps")).in_area_count
                       for i in range(10_000)])
    elapsed = time.perf_counter() - start
    zero, five, mean = np.mean(counts == 0), np.mean(counts >= 5), counts.mean()
    ok = abs(zero - 0.135) <= 0.01 and abs(five - 0.053) <= 0.008 and abs(mean - 2.0) <= 0.05 and elapsed < 1.0
    record(1, ok, f"P(0)={zero:.4f} P(>=5)={five:.4f} mean={mean:.4f} runtime={elapsed:.2f}s")


def test_criterion_2_gate_time():
    start = time.perf_counter()
    t_gate = solve_gate_time(P)
    elapsed = time.perf_counter() - start
    seed = math.pi * P.hbar / exchange_estimate(P, P.epsilon_on)
    rel = abs(t_gate - seed) / seed
    ok = 137 <= t_gate <= 158 and rel < 0.05 and elapsed < 1.0
    record(2, ok, f"t_gate={t_gate:.3f} ns, pi*hbar/J={seed:.3f} ns (diff {rel:.2%}) runtime={elapsed:.3f}s")


def test_criterion_3_zero_noise_sanity():
    quiet = NoiseRealization(RtnTrajectory(), OverhauserSample(0.0, 0.0), ())
    worst = 0.0
    for schedule in (cz_schedule(P), composite_schedule(P)):
        ideal = propagate(schedule, P)
        worst = max(worst, abs(1.0 - propagator_fidelity(propagate(schedule, P, quiet), ideal)))
    cfg = ExperimentConfig(n_devices=20, n_trajectories=5, sampling=SamplingSpec(density=0.0),
                           T2_star=math.inf)
    for gate in ("cz", "composite"):
        worst = max(worst, float(np.max(np.abs(run_experiment(cfg.replace(gate=gate)).values - 1.0))))
    record(3, worst <= 1e-9, f"max |1 - F| = {worst:.2e} for cz and composite")


def test_criterion_4_fid_calibration():
    t2 = 1e5
    start = time.perf_counter()
    sigma = calibrate_overhauser_sigma(t2)
    c = free_induction_coherence(sigma, [t2], 10_000, stream(0, 0, 0, "calibrate"))[0]
    elapsed = time.perf_counter() - start
    rel = abs(c - math.exp(-1)) / math.exp(-1)
    record(4, rel < 0.02 and elapsed < 10, f"sigma_B={sigma:.4e} T, C(T2*)={c:.4f} vs 1/e (diff {rel:.2%})")


def test_criterion_5_composite_timing():
    ratio = composite_schedule(P).total_two_qubit_time / cz_schedule(P).total_two_qubit_time
    total = composite_schedule(P).total_two_qubit_time
    record(5, abs(ratio - 4.56) / 4.56 < 0.01, f"T_composite/T_cz={ratio:.4f} ({total:.1f} ns)")


def test_criterion_6_robustness_ordering():
    cz, comp = cz_schedule(P), composite_schedule(P)
    ideal_cz, ideal_comp = propagate(cz, P).matrix, propagate(comp, P).matrix
    deltas = np.array([0.5, 1.0, 2.0])
    zero = np.zeros_like(deltas)
    inf_cz = 1 - propagator_fidelity(propagate_static_batch(cz, P, deltas, zero, zero), ideal_cz)
    inf_comp = 1 - propagator_fidelity(propagate_static_batch(comp, P, deltas, zero, zero), ideal_comp)
    ratio = inf_comp / inf_cz
    ok = bool(np.all(ratio < 0.2) and np.all(np.diff(ratio) > 0))
    detail = ", ".join(f"d={d:g}: {r:.4f}" for d, r in zip(deltas, ratio))
    record(6, ok, f"composite/cz infidelity ratio {detail}")


def _ensemble(sigma):
    geom = DotGeometry(sigma=sigma)
    cfg = ExperimentConfig(geometry=geom, n_devices=1000, n_trajectories=200)
    return {gate: run_experiment(cfg.replace(gate=gate), WORKERS).summary for gate in ("cz", "composite")}


@pytest.mark.slow
def test_criterion_7_fidelity_distributions():
    start = time.perf_counter()
    table = {sigma: _ensemble(sigma) for sigma in (8.0, 10.0, 12.0)}
    elapsed = time.perf_counter() - start
    print("sigma_nm  cz_mean  cz_p25  comp_mean  comp_p25")
    for sigma, row in table.items():
        print(f"{sigma:8.0f}  {row['cz']['mean']:.4f}  {row['cz']['percentiles']['25']:.4f}  "
              f"{row['composite']['mean']:.4f}    {row['composite']['percentiles']['25']:.4f}")
    cz, comp = table[10.0]["cz"], table[10.0]["composite"]
    ok = (0.978 <= cz["mean"] <= 0.995 and cz["percentiles"]["25"] >= 0.97
          and 0.988 <= comp["mean"] <= 0.998 and comp["percentiles"]["25"] >= 0.985
          and comp["mean"] > cz["mean"] and elapsed < 600)
    sens = "; ".join(f"s={s:g}: {r['cz']['mean']:.4f}/{r['composite']['mean']:.4f}" for s, r in table.items())
    record(7, ok, f"cz mean={cz['mean']:.4f} p25={cz['percentiles']['25']:.4f}, composite mean="
                  f"{comp['mean']:.4f} p25={comp['percentiles']['25']:.4f}; means cz/comp by sigma: {sens}; "
                  f"runtime={elapsed:.0f}s")


def test_criterion_8_determinism(tmp_path):
    small = ["--devices", "6", "--trajectories", "10", "--seed", "2024"]
    commands = [["sample-traps"], ["run"], ["run", "--gate", "composite"], ["trace", "--traces", "3", "--dt", "10"],
                ["levels", "--points", "21"], ["gate-time"], ["calibrate", "--samples", "2000"]]
    mismatched = []
    for command in commands:
        outs = []
        for k, threads in enumerate(("1", "1", "2")):
            out = tmp_path / f"{command[0]}_{len(outs)}_{k}"
            assert cli_main([*command, *small, "--threads", threads, "--out", str(out)]) == 0
            outs.append({p.name: p.read_bytes() for p in out.iterdir() if p.name != "MANIFEST.json"})
        if not outs[0] == outs[1] == outs[2]:
            mismatched.append(" ".join(command))
    record(8, not mismatched, f"{len(commands)} commands byte-identical across reruns and --threads 1/2"
           if not mismatched else f"differences in {mismatched}")


def test_criterion_9_group_property():
    rng = np.random.default_rng(9)
    comp = composite_schedule(P)
    total = comp.total_two_qubit_time
    rtn = RtnTrajectory((1, 0, 1), ((50.0, 333.3), (410.0,), ()), total)
    r = NoiseRealization(rtn, OverhauserSample(5e-8, -3e-8), (1.2, -0.4, 2.5))
    whole = propagate(comp, P, r).matrix
    worst = 0.0
    for t in np.concatenate([rng.uniform(0, total, 40), [183.66835616046353, 50.0, 410.0]]):
        split = propagate(comp, P, r, window=(t, total)).matrix @ propagate(comp, P, r, window=(0.0, t)).matrix
        worst = max(worst, float(np.linalg.norm(split - whole)))
    record(9, worst <= 1e-12, f"max ||U(T,t)U(t,0) - U(T,0)||_F = {worst:.2e} over 43 split points")
