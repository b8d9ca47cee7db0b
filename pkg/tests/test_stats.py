import hashlib
import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from trapgate import stats
from trapgate.stats import (
    ExperimentConfig,
    ExperimentError,
    child_seed,
    count_histogram,
    percentile,
    run_experiment,
    sample_device_traps,
    summarize,
)
from trapgate.traps import SamplingSpec

SMALL = ExperimentConfig(n_devices=6, n_trajectories=8, master_seed=42)


def test_child_seed_derivation():
    payload = struct.pack("<QQq", 7, 3, -1) + b"traps"
    expected = int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")
    assert child_seed(7, 3, -1, "traps") == expected


def test_child_seeds_distinct_across_streams():
    seeds = {child_seed(0, d, j, tag) for d in range(20) for j in range(-1, 20) for tag in ("traps", "noise")}
    assert len(seeds) == 20 * 21 * 2


def test_percentile_hand_values():
    assert percentile([1, 2, 3, 4], 50) == 2.5
    assert percentile([1, 2, 3, 4], 25) == 1.75
    assert percentile([5.0], 95) == 5.0
    with pytest.raises(ValueError):
        percentile([], 50)
    with pytest.raises(ValueError):
        percentile([1, 2], 101)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60), st.floats(0, 100), st.floats(0, 100))
def test_percentile_monotone_in_q(values, q1, q2):
    lo, hi = sorted((q1, q2))
    assert percentile(values, lo) <= percentile(values, hi) + 1e-9


@given(st.lists(st.floats(0, 1), min_size=2, max_size=200), st.integers(1, 50))
def test_summary_histogram_consistent(values, bins):
    summary, edges, counts, cdf = summarize(values, bins)
    assert counts.sum() == len(values) == summary["n"]
    assert len(edges) == bins + 1
    assert cdf[0] == 0.0 and cdf[-1] == pytest.approx(1.0)
    assert np.all(np.diff(cdf) >= 0)
    assert summary["min"] <= summary["median"] <= summary["max"]


def test_run_is_reproducible_and_ordered():
    a = run_experiment(SMALL)
    b = run_experiment(SMALL)
    assert [d.device_index for d in a.devices] == list(range(6))
    assert a.devices == b.devices


def test_results_independent_of_worker_count():
    serial = run_experiment(SMALL, workers=1)
    parallel = run_experiment(SMALL, workers=2)
    assert serial.devices == parallel.devices
    assert np.array_equal(serial.values, parallel.values)


def test_device_independent_of_ensemble_size():
    big = run_experiment(SMALL.replace(n_devices=8))
    small = run_experiment(SMALL)
    assert big.devices[:6] == small.devices


def test_different_seeds_differ():
    a = sample_device_traps(SMALL.replace(n_devices=50))
    b = sample_device_traps(SMALL.replace(n_devices=50, master_seed=43))
    assert [r.total_static_shift for r in a] != [r.total_static_shift for r in b]


def test_noise_free_devices_have_unit_fidelity():
    cfg = SMALL.replace(sampling=SamplingSpec(density=0.0), T2_star=float("inf"))
    for gate in ("cz", "composite"):
        result = run_experiment(cfg.replace(gate=gate))
        assert np.all(np.abs(result.values - 1.0) < 1e-9)


def test_fidelity_decreases_with_shift_scale():
    base = run_experiment(SMALL).summary["mean"]
    scaled = run_experiment(SMALL.replace(shift_scale=3.0)).summary["mean"]
    assert scaled < base


def test_partial_failure_reports_devices(monkeypatch):
    original = stats.trajectory_fidelities

    def flaky(config, device_index, traps):
        if device_index == 2:
            raise FloatingPointError("boom")
        return original(config, device_index, traps)

    monkeypatch.setattr(stats, "trajectory_fidelities", flaky)
    with pytest.raises(ExperimentError) as info:
        run_experiment(SMALL)
    assert set(info.value.failures) == {2}
    assert [d.device_index for d in info.value.partial] == [0, 1, 3, 4, 5]


def test_count_histogram_covers_zero():
    records = sample_device_traps(SMALL.replace(n_devices=200))
    counts, tally = count_histogram(records)
    assert counts[0] == 0 and tally.sum() == 200


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(n_devices=0)
    with pytest.raises(ValueError):
        ExperimentConfig(gate="swap")
    with pytest.raises(ValueError):
        ExperimentConfig(master_seed=-1)
