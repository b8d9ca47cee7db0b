import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from trapgate.noise import (
    NoiseRealization,
    OverhauserSample,
    RtnTrajectory,
    calibrate_overhauser_sigma,
    delta_epsilon_at,
    free_induction_coherence,
    sample_overhauser,
    sample_rtn,
)


def test_sigma_formula_value():
    # sqrt(2) hbar / (g mu_B T2*) for T2* = 100 us
    assert calibrate_overhauser_sigma(1e5) == pytest.approx(8.0407e-8, rel=1e-4)
    assert calibrate_overhauser_sigma(math.inf) == 0.0
    with pytest.raises(ValueError):
        calibrate_overhauser_sigma(0.0)


def test_free_induction_decay_hits_inverse_e():
    sigma = calibrate_overhauser_sigma(1e5)
    c = free_induction_coherence(sigma, [1e5], 10_000, np.random.default_rng(1))[0]
    assert c == pytest.approx(math.exp(-1), rel=0.02)


def test_free_induction_gaussian_shape():
    sigma = calibrate_overhauser_sigma(1e5)
    times = np.array([0.0, 0.5e5, 1e5, 1.5e5])
    c = free_induction_coherence(sigma, times, 40_000, np.random.default_rng(2))
    assert np.allclose(c, np.exp(-(times / 1e5) ** 2), atol=0.015)


def test_overhauser_sample_statistics():
    rng = np.random.default_rng(3)
    draws = np.array([[s.B_eff_L, s.B_eff_R] for s in (sample_overhauser((1.0, 2.0), rng) for _ in range(20_000))])
    assert np.std(draws[:, 0]) == pytest.approx(1.0, rel=0.03)
    assert np.std(draws[:, 1]) == pytest.approx(2.0, rel=0.03)
    assert abs(np.corrcoef(draws.T)[0, 1]) < 0.03


def test_rtn_switch_counts_are_poisson():
    rng = np.random.default_rng(4)
    tau, duration = 10.0, 50.0
    counts = np.array([len(sample_rtn(1, tau, duration, rng).switch_events[0]) for _ in range(5000)])
    assert counts.mean() == pytest.approx(duration / tau, rel=0.03)
    assert counts.var() == pytest.approx(duration / tau, rel=0.08)


def test_rtn_waiting_times_exponential():
    rng = np.random.default_rng(5)
    times = sample_rtn(1, 2.0, 20_000.0, rng).switch_events[0]
    gaps = np.diff(times)
    assert stats.kstest(gaps, "expon", args=(0, 2.0)).pvalue > 1e-3


def test_rtn_initial_states_balanced():
    rng = np.random.default_rng(6)
    states = np.concatenate([sample_rtn(5, 1e6, 650.0, rng).initial_states for _ in range(2000)])
    assert states.mean() == pytest.approx(0.5, abs=0.02)


def test_quasi_static_limit_rarely_switches():
    rng = np.random.default_rng(7)
    switched = sum(sample_rtn(2, 1e6, 650.0, rng).has_switches for _ in range(2000))
    # expected fraction 1 - exp(-2 * 650e-6) ~ 1.3e-3
    assert switched < 15


@given(st.lists(st.floats(0.0, 100.0, allow_nan=False), min_size=0, max_size=8, unique=True),
       st.integers(0, 1), st.floats(0.0, 100.0))
def test_states_at_counts_flips(times, s0, t):
    times = tuple(sorted(times))
    rtn = RtnTrajectory((s0,), (times,), 100.0)
    flips = sum(1 for x in times if x <= t)
    assert rtn.states_at(t)[0] == (s0 + flips) % 2


def test_states_right_continuous_at_switch():
    rtn = RtnTrajectory((0,), ((5.0,),), 10.0)
    assert rtn.states_at(4.999)[0] == 0
    assert rtn.states_at(5.0)[0] == 1


def test_rtn_validation():
    with pytest.raises(ValueError):
        RtnTrajectory((0,), ((3.0, 2.0),), 10.0)
    with pytest.raises(ValueError):
        RtnTrajectory((0,), ((11.0,),), 10.0)
    with pytest.raises(ValueError):
        RtnTrajectory((0, 1), ((),), 10.0)
    with pytest.raises(ValueError):
        sample_rtn(1, 0.0, 1.0, np.random.default_rng(0))


def test_delta_epsilon_sums_occupied_traps():
    rtn = RtnTrajectory((1, 0, 1), ((), (2.0,), ()), 10.0)
    r = NoiseRealization(rtn, OverhauserSample(), (1.5, -4.0, 0.25))
    assert delta_epsilon_at(0.0, r) == pytest.approx(1.75)
    assert delta_epsilon_at(3.0, r) == pytest.approx(-2.25)
    centered = NoiseRealization(rtn, OverhauserSample(), (1.5, -4.0, 0.25), subtract_mean=True)
    assert delta_epsilon_at(0.0, centered) == pytest.approx(0.5 * 1.5 - 0.5 * -4.0 + 0.5 * 0.25)


def test_realization_shift_count_mismatch():
    with pytest.raises(ValueError):
        NoiseRealization(RtnTrajectory((0,), ((),), 1.0), OverhauserSample(), (1.0, 2.0))
