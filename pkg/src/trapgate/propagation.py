"""Pulse schedules, noisy/ideal propagators and the propagator fidelity.

Two-qubit segments hold the detuning at a fixed bias; within a segment the
Hamiltonian is piecewise constant between telegraph switch events and each
piece is exponentiated exactly. By default a segment is entered and left
adiabatically: each bare spin state is carried onto the dressed eigenstate
it connects to, so the fast (t_c / (U0 - eps))^2 leakage oscillation of a
sudden step never starts. ``pulse_shape="square"`` gives sudden edges.
Single-qubit x rotations are instantaneous and ideal.

Rotations are applied in the frame co-rotating with the bare Zeeman
splittings, the way a resonant microwave pulse acts. In that frame every
detuning segment is a pure ZZ rotation and the composite sequence cancels
exchange errors to first order; in the lab frame the fast Zeeman precession
would scramble the rotation axes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .device import (
    COMPUTATIONAL,
    N_LEVELS,
    DeviceParams,
    build_hamiltonian,
    conditional_phase,
    dressed_basis,
    embed_single_qubit_rx,
    hamiltonian_matrix,
    noise_diagonal,
    check_regime,
    solve_gate_time,
    zeeman_splittings,
)
from .noise import NoiseRealization, delta_epsilon_at

# composite ZZ sequence angles
THETA_STAR = 0.674
COMPOSITE_THETA = math.pi - THETA_STAR
COMPOSITE_THETA_BAR = -math.pi / math.cos(COMPOSITE_THETA)
COMPOSITE_THETA_2 = 2.0 * math.pi

UNITARITY_TOL = 1e-9


class UnitarityError(ArithmeticError):
    pass


@dataclass(frozen=True)
class TwoQubitEvolution:
    epsilon: float  # ueV
    duration: float  # ns

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError(f"segment duration must be >= 0, got {self.duration}")


@dataclass(frozen=True)
class SingleQubitRx:
    theta: float  # rad
    target: str = "right"


PulseSegment = Union[TwoQubitEvolution, SingleQubitRx]


@dataclass(frozen=True)
class PulseSchedule:
    segments: tuple[PulseSegment, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def total_two_qubit_time(self) -> float:
        return math.fsum(s.duration for s in self.segments if isinstance(s, TwoQubitEvolution))

    def timeline(self):
        """Yield ``(start_time, segment)`` pairs."""
        t = 0.0
        for seg in self.segments:
            yield t, seg
            if isinstance(seg, TwoQubitEvolution):
                t += seg.duration


@dataclass(frozen=True)
class Propagator:
    matrix: np.ndarray
    ideal: bool = False

    def to_json(self) -> str:
        return propagator_to_json(self.matrix)


def propagator_to_json(u: np.ndarray) -> str:
    """Row-major 6x6 array of [re, im] pairs."""
    return json.dumps([[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(u)])


def propagator_from_json(text: str) -> np.ndarray:
    rows = json.loads(text)
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def cz_schedule(p: DeviceParams, t_gate: float | None = None, pulse_shape: str = "adiabatic") -> PulseSchedule:
    """Single pulse at ``epsilon_on`` lasting one CZ gate time."""
    if t_gate is None:
        t_gate = solve_gate_time(p, pulse_shape=pulse_shape)
    return PulseSchedule((TwoQubitEvolution(p.epsilon_on, t_gate),), name="cz")


def composite_schedule(p: DeviceParams, t_gate: float | None = None, reverse: bool = False,
                       pulse_shape: str = "adiabatic") -> PulseSchedule:
    """S(theta_bar) R(theta) S(theta_2) R(-theta) S(theta_bar), first factor first in time.

    A ZZ angle alpha is realized by the CZ bias held for (alpha / pi) t_CZ.
    ``reverse`` swaps the signs of the two rotations.
    """
    if t_gate is None:
        t_gate = solve_gate_time(p, pulse_shape=pulse_shape)

    def zz(alpha):
        return TwoQubitEvolution(p.epsilon_on, alpha / math.pi * t_gate)

    first, second = COMPOSITE_THETA, -COMPOSITE_THETA
    if reverse:
        first, second = second, first
    segments = (
        zz(COMPOSITE_THETA_BAR),
        SingleQubitRx(first, "right"),
        zz(COMPOSITE_THETA_2),
        SingleQubitRx(second, "right"),
        zz(COMPOSITE_THETA_BAR),
    )
    return PulseSchedule(segments, name="composite")


def make_schedule(kind: str, p: DeviceParams, t_gate: float | None = None, **kwargs) -> PulseSchedule:
    if kind == "cz":
        return cz_schedule(p, t_gate, **kwargs)
    if kind == "composite":
        return composite_schedule(p, t_gate, **kwargs)
    raise ValueError(f"unknown gate kind {kind!r}; expected 'cz' or 'composite'")


def zeeman_energies(p: DeviceParams) -> np.ndarray:
    ez, ez1 = zeeman_splittings(p)
    return np.array([ez / 2, ez1 / 2, -ez1 / 2, -ez / 2])


def frame_rotation(p: DeviceParams, t: float, energies: np.ndarray | None = None) -> np.ndarray:
    """Diagonal frame unitary exp(-i E t / hbar) on the computational block."""
    if energies is None:
        energies = zeeman_energies(p)
    w = np.ones(N_LEVELS, dtype=complex)
    w[COMPUTATIONAL] = np.exp(-1j * energies * t / p.hbar)
    return np.diag(w)


def rotation_in_frame(p: DeviceParams, seg: SingleQubitRx, t: float, rx_frame: str = "rotating") -> np.ndarray:
    r = embed_single_qubit_rx(seg.theta, seg.target)
    if rx_frame == "lab":
        return r
    if rx_frame != "rotating":
        raise ValueError(f"rx_frame must be 'rotating' or 'lab', got {rx_frame!r}")
    w = frame_rotation(p, t)
    return w @ r @ np.conj(w.T)


def _piece_operator(h: np.ndarray, a: float, b: float, hbar: float) -> np.ndarray:
    """exp(-i h (b - a) / hbar) with phases taken from the absolute times a and b.

    Eigenphases reach ~1e7 rad over a gate, so exp(-i w (b - a)) loses ~1e-9
    to rounding. Writing the phase as exp(-i w b) exp(+i w a) makes adjacent
    pieces telescope, and splitting an interval reproduces it to rounding.
    """
    w, v = np.linalg.eigh(h)
    phases = _phase(w, b, hbar) * np.conj(_phase(w, a, hbar))
    return (v * phases[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def _phase(w, t: float, hbar: float) -> np.ndarray:
    return np.exp(-1j * w * (t / hbar))


def _in_window(t: float, t0: float, t1: float, total: float) -> bool:
    return t0 <= t < t1 or (t == t1 == total)


PULSE_SHAPES = ("adiabatic", "square")


def _check_pulse_shape(pulse_shape: str) -> None:
    if pulse_shape not in PULSE_SHAPES:
        raise ValueError(f"pulse_shape must be one of {PULSE_SHAPES}, got {pulse_shape!r}")


def propagate(schedule: PulseSchedule, p: DeviceParams, realization: NoiseRealization | None = None,
              rx_frame: str = "rotating", window: tuple[float, float] | None = None,
              pulse_shape: str = "adiabatic") -> Propagator:
    """Propagator of ``schedule``; ``realization=None`` gives the ideal one.

    Segment boundaries are the union of pulse edges and telegraph switch
    times. ``window=(t0, t1)`` restricts the evolution to that time interval
    (rotations at t0 included, at t1 excluded unless t1 ends the schedule);
    adiabatic ramps sit at segment edges and belong to whichever window
    contains that edge.
    """
    _check_pulse_shape(pulse_shape)
    total = schedule.total_two_qubit_time
    t0, t1 = (0.0, total) if window is None else window
    if realization is not None and realization.rtn.has_switches and realization.rtn.duration < total:
        raise ValueError("telegraph record shorter than the schedule")
    switches = realization.rtn.switch_times() if realization is not None else []
    b_l = realization.overhauser.B_eff_L if realization is not None else 0.0
    b_r = realization.overhauser.B_eff_R if realization is not None else 0.0

    u = np.eye(N_LEVELS, dtype=complex)
    for start, seg in schedule.timeline():
        if isinstance(seg, SingleQubitRx):
            if _in_window(start, t0, t1, total):
                u = rotation_in_frame(p, seg, start, rx_frame) @ u
            continue
        end = start + seg.duration
        lo, hi = max(start, t0), min(end, t1)
        if hi < lo or (hi == lo and seg.duration > 0):
            continue
        edges = [lo, *[s for s in switches if lo < s < hi], hi]
        hams = []
        for a, b in zip(edges, edges[1:]):
            d_eps = delta_epsilon_at(a, realization) if realization is not None else 0.0
            hams.append(build_hamiltonian(p, seg.epsilon, d_eps, b_l, b_r))
        if not hams:
            d_eps = delta_epsilon_at(lo, realization) if realization is not None else 0.0
            hams.append(build_hamiltonian(p, seg.epsilon, d_eps, b_l, b_r))
        if pulse_shape == "adiabatic" and lo == start:
            u = dressed_basis(hams[0])[1] @ u
        for h, a, b in zip(hams, edges, edges[1:]):
            u = _piece_operator(h, a, b, p.hbar) @ u
        if pulse_shape == "adiabatic" and hi == end:
            u = np.conj(dressed_basis(hams[-1])[1].T) @ u
    _check_unitary(u)
    return Propagator(u, ideal=realization is None)


def propagate_static_batch(schedule: PulseSchedule, p: DeviceParams, delta_eps, b_eff_L, b_eff_R,
                           rx_frame: str = "rotating", pulse_shape: str = "adiabatic") -> np.ndarray:
    """Stacked propagators for noise that is constant over the whole schedule.

    Equivalent to :func:`propagate` for realizations without telegraph
    switches, vectorized over trajectories.
    """
    _check_pulse_shape(pulse_shape)
    diag = noise_diagonal(p, delta_eps, b_eff_L, b_eff_R)
    n = diag.shape[0]
    eig_cache = {}
    u = np.broadcast_to(np.eye(N_LEVELS, dtype=complex), (n, N_LEVELS, N_LEVELS)).copy()
    for start, seg in schedule.timeline():
        if isinstance(seg, SingleQubitRx):
            u = rotation_in_frame(p, seg, start, rx_frame) @ u
            continue
        if seg.epsilon not in eig_cache:
            check_regime(p, seg.epsilon)
            h = hamiltonian_matrix(p, seg.epsilon)[None, :, :].repeat(n, axis=0)
            idx = np.arange(N_LEVELS)
            h[:, idx, idx] += diag
            eig_cache[seg.epsilon] = dressed_basis(h) if pulse_shape == "adiabatic" else np.linalg.eigh(h)
        w, v = eig_cache[seg.epsilon]
        phases = _phase(w, start + seg.duration, p.hbar) * np.conj(_phase(w, start, p.hbar))
        if pulse_shape == "adiabatic":
            # M^dagger exp(-iHt) M is diagonal in the bare basis
            u = phases[:, :, None] * u
        else:
            u = (v * phases[:, None, :]) @ np.conj(np.swapaxes(v, -1, -2)) @ u
    _check_unitary(u)
    return u


def _check_unitary(u: np.ndarray) -> None:
    eye = np.eye(u.shape[-1])
    err = np.linalg.norm(np.conj(np.swapaxes(u, -1, -2)) @ u - eye, axis=(-2, -1))
    worst = float(np.max(err))
    if worst > UNITARITY_TOL:
        raise UnitarityError(f"propagator deviates from unitarity by {worst:.3g}")


def propagator_fidelity(noisy, ideal) -> float | np.ndarray:
    """|Tr_c(U_n U_i^dagger)| / 4 over the computational block.

    Accepts :class:`Propagator` objects or (stacked) arrays; population that
    leaks to the doubly occupied singlets lowers the result.
    """
    un = noisy.matrix if isinstance(noisy, Propagator) else np.asarray(noisy)
    ui = ideal.matrix if isinstance(ideal, Propagator) else np.asarray(ideal)
    un_c = un[..., COMPUTATIONAL, COMPUTATIONAL]
    ui_c = ui[..., COMPUTATIONAL, COMPUTATIONAL]
    tr = np.einsum("...ij,...ij->...", un_c, np.conj(ui_c))
    f = np.minimum(np.abs(tr) / 4.0, 1.0)
    return float(f) if f.ndim == 0 else f


def dressed_computational_energies(p: DeviceParams, epsilon: float) -> np.ndarray:
    """Noise-free eigenenergies continuously connected to |uu>, |ud>, |du>, |dd>."""
    w, v = np.linalg.eigh(hamiltonian_matrix(p, epsilon))
    owner = np.argmax(np.abs(v[:4, :]), axis=1)
    return w[owner]


def cz_frame_energies(p: DeviceParams, epsilon: float | None = None) -> np.ndarray:
    """Frame energies that strip all single-qubit phases of the detuning pulse.

    In this frame the noise-free pulse is a pure conditional phase on |dd>.
    """
    e = dressed_computational_energies(p, p.epsilon_on if epsilon is None else epsilon)
    return np.array([e[0], e[1], e[2], e[1] + e[2] - e[0]])


def _plus_projector() -> np.ndarray:
    plus = np.array([1.0, 1.0]) / math.sqrt(2.0)
    proj = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    proj[COMPUTATIONAL, COMPUTATIONAL] = np.kron(np.eye(2), np.outer(plus, plus))
    return proj


def initial_control_one_target_plus() -> np.ndarray:
    """Left spin in |1> = |down>, right spin in |+>."""
    psi = np.zeros(N_LEVELS, dtype=complex)
    psi[2] = psi[3] = 1.0 / math.sqrt(2.0)
    return psi


def state_trace(schedule: PulseSchedule, p: DeviceParams, realization: NoiseRealization | None = None,
                initial: np.ndarray | None = None, dt: float = 1.0, rx_frame: str = "rotating",
                pulse_shape: str = "adiabatic"):
    """Probability of |+> on the right spin versus time, in the CZ frame.

    Returns ``(times_ns, p_plus)``. The state is carried forward window by
    window, so ``dt`` only sets the sampling density. A sample that
    coincides with an instantaneous rotation records the state before it.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    psi = initial_control_one_target_plus() if initial is None else np.asarray(initial, dtype=complex)
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"initial state must be normalized, |psi| = {norm:.12g}")
    total = schedule.total_two_qubit_time
    n_samples = int(math.floor(total / dt + 1e-9)) + 1
    times = np.arange(n_samples) * dt
    if times[-1] < total:
        times = np.append(times, total)
    frame_e = cz_frame_energies(p)
    proj = _plus_projector()

    probs = np.empty(times.size)
    for k, t in enumerate(times):
        if k > 0:
            u = propagate(schedule, p, realization, rx_frame, (times[k - 1], t), pulse_shape).matrix
            psi = u @ psi
        s = np.conj(frame_rotation(p, t, frame_e)) @ psi
        if abs(np.linalg.norm(s) - 1.0) > 1e-9:
            raise UnitarityError(f"state norm drifted to {np.linalg.norm(s):.12g}")
        probs[k] = min(1.0, abs(np.vdot(s, proj @ s)))
    return times, probs


def ideal_conditional_phase(schedule: PulseSchedule, p: DeviceParams) -> float:
    return conditional_phase(propagate(schedule, p).matrix)
