"""Per-trajectory noise: random telegraph trap occupancy and Overhauser fields.

Each trap is a symmetric two-level fluctuator with switching rate 1/tau in
both directions, started from its stationary distribution (occupied with
probability 1/2). An occupied trap shifts the detuning by its interdot
shift; an empty one contributes nothing.

Nuclear spins act through a quasi-static effective field per dot, drawn
once per trajectory from a zero-mean Gaussian. With the Gaussian width set
by :func:`calibrate_overhauser_sigma`, a single spin's free-induction
coherence decays as exp(-(t/T2*)^2).
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .constants import HBAR, MU_B


@dataclass(frozen=True)
class RtnTrajectory:
    initial_states: tuple[int, ...] = ()
    switch_events: tuple[tuple[float, ...], ...] = ()
    duration: float = 0.0

    def __post_init__(self):
        if len(self.initial_states) != len(self.switch_events):
            raise ValueError("one switch list per trap is required")
        for times in self.switch_events:
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ValueError("switch times must be strictly increasing")
            if times and (times[0] < 0 or times[-1] > self.duration):
                raise ValueError("switch times must lie within [0, duration]")

    @property
    def n_traps(self) -> int:
        return len(self.initial_states)

    @property
    def has_switches(self) -> bool:
        return any(self.switch_events)

    def states_at(self, t: float) -> np.ndarray:
        """Occupancy of every trap at time ``t`` (right-continuous at switches)."""
        flips = [bisect.bisect_right(times, t) for times in self.switch_events]
        return np.array([(s + k) % 2 for s, k in zip(self.initial_states, flips)], dtype=int)

    def switch_times(self) -> list[float]:
        return sorted({t for times in self.switch_events for t in times})


@dataclass(frozen=True)
class OverhauserSample:
    B_eff_L: float = 0.0  # T
    B_eff_R: float = 0.0  # T


@dataclass(frozen=True)
class NoiseRealization:
    rtn: RtnTrajectory = field(default_factory=RtnTrajectory)
    overhauser: OverhauserSample = field(default_factory=OverhauserSample)
    shifts: tuple[float, ...] = ()  # ueV, one per trap
    subtract_mean: bool = False

    def __post_init__(self):
        object.__setattr__(self, "shifts", tuple(float(s) for s in self.shifts))
        if len(self.shifts) != self.rtn.n_traps:
            raise ValueError(
                f"RTN trap count {self.rtn.n_traps} does not match {len(self.shifts)} trap shifts"
            )

    def to_json(self) -> str:
        return json.dumps({
            "initial_states": list(self.rtn.initial_states),
            "switch_events_ns": [list(t) for t in self.rtn.switch_events],
            "duration_ns": self.rtn.duration,
            "B_eff_L_T": self.overhauser.B_eff_L,
            "B_eff_R_T": self.overhauser.B_eff_R,
            "shifts_ueV": list(self.shifts),
            "subtract_mean": self.subtract_mean,
        })


def sample_rtn(n_traps: int, tau: float, duration: float, rng: np.random.Generator) -> RtnTrajectory:
    """Symmetric telegraph switching for ``n_traps`` traps over [0, duration]."""
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    if duration < 0:
        raise ValueError(f"duration must be >= 0, got {duration}")
    initial = tuple(int(s) for s in rng.integers(0, 2, size=n_traps))
    events = []
    for _ in range(n_traps):
        times = []
        t = rng.exponential(tau)
        while t <= duration:
            times.append(float(t))
            t += rng.exponential(tau)
        events.append(tuple(times))
    return RtnTrajectory(initial, tuple(events), float(duration))


def delta_epsilon_at(t: float, realization: NoiseRealization) -> float:
    """Detuning offset (ueV) from all traps at time ``t``."""
    if not realization.shifts:
        return 0.0
    states = realization.rtn.states_at(t).astype(float)
    if realization.subtract_mean:
        states -= 0.5
    return math.fsum(s * d for s, d in zip(states, realization.shifts))


def calibrate_overhauser_sigma(T2_star: float, g: float = 2.0, mu_B: float = MU_B,
                               hbar: float = HBAR) -> float:
    """Gaussian field width (T) giving free-induction decay exp(-(t/T2*)^2)."""
    if not T2_star > 0:
        raise ValueError(f"T2* must be > 0, got {T2_star}")
    if math.isinf(T2_star):
        return 0.0
    return math.sqrt(2.0) * hbar / (g * mu_B * T2_star)


def sample_overhauser(sigma_B, rng: np.random.Generator) -> OverhauserSample:
    """Independent zero-mean Gaussian effective fields for the two dots.

    ``sigma_B`` is a single width or a ``(left, right)`` pair.
    """
    sigma_l, sigma_r = (sigma_B, sigma_B) if np.isscalar(sigma_B) else sigma_B
    if sigma_l < 0 or sigma_r < 0:
        raise ValueError("sigma_B must be >= 0")
    b = rng.standard_normal(2)
    return OverhauserSample(float(sigma_l * b[0]), float(sigma_r * b[1]))


def free_induction_coherence(sigma_B: float, times, n_samples: int, rng: np.random.Generator,
                             g: float = 2.0, mu_B: float = MU_B, hbar: float = HBAR) -> np.ndarray:
    """Monte Carlo single-spin coherence <cos(g mu_B B t / hbar)> at each time."""
    fields = np.array([sample_overhauser(sigma_B, rng).B_eff_L for _ in range(n_samples)])
    omega = g * mu_B * fields / hbar
    return np.mean(np.cos(np.outer(np.atleast_1d(times), omega)), axis=1)
