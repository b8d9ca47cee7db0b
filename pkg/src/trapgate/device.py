"""Six-level two-spin Hamiltonian of a detuned double quantum dot.

Basis order is ``|uu>, |ud>, |du>, |dd>, S20, S02`` throughout; the first
four states are the computational subspace with ``|0> = up``. Energies are
in ueV, times in ns, fields in T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from .constants import HBAR, MU_B

BASIS_LABELS = ("uu", "ud", "du", "dd", "S20", "S02")
N_LEVELS = 6
COMPUTATIONAL = slice(0, 4)

# regime of validity of the reduced Hamiltonian: U0 - eps >= REGIME_FACTOR * t_c
REGIME_FACTOR = 10.0


class RegimeError(ValueError):
    """Bias point outside the U0 - eps >> t_c regime."""


class GateTimeError(ArithmeticError):
    """The conditional-phase root could not be bracketed or found."""


@dataclass(frozen=True)
class DeviceParams:
    B_L: float = 0.50  # T
    B_R: float = 0.40  # T
    g_L: float = 2.00
    g_R: float = 2.00
    t_c: float = 1.0  # ueV
    U0: float = 10_000.0  # ueV
    U0p: float = 10_000.0  # ueV
    epsilon_on: float = 10_000.0 - 140.0  # ueV
    epsilon_off: float = 0.0  # ueV, symmetric point: smallest exchange
    mu_B: float = MU_B
    hbar: float = HBAR

    def __post_init__(self):
        for name, value in vars(self).items():
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        if self.t_c < 0:
            raise ValueError(f"t_c must be >= 0, got {self.t_c}")
        check_regime(self, self.epsilon_on)

    @classmethod
    def from_bias(cls, u0_minus_eps: float = 140.0, **kwargs) -> "DeviceParams":
        """Parameters with ``epsilon_on = U0 - u0_minus_eps``."""
        U0 = kwargs.get("U0", cls.U0)
        return cls(epsilon_on=U0 - u0_minus_eps, **kwargs)

    @property
    def bias(self) -> float:
        """U0 - epsilon_on (ueV)."""
        return self.U0 - self.epsilon_on

    def replace(self, **changes) -> "DeviceParams":
        return replace(self, **changes)


def check_regime(p: DeviceParams, epsilon: float) -> None:
    if p.U0 - epsilon < REGIME_FACTOR * p.t_c:
        raise RegimeError(
            f"U0 - eps = {p.U0 - epsilon:.6g} ueV violates U0 - eps >= {REGIME_FACTOR:g} t_c "
            f"(t_c = {p.t_c:.6g} ueV)"
        )


def zeeman_splittings(p: DeviceParams) -> tuple[float, float]:
    """(E_z, E_z1): sum and difference Zeeman energies in ueV."""
    e_left = p.mu_B * p.g_L * p.B_L
    e_right = p.mu_B * p.g_R * p.B_R
    return e_left + e_right, e_left - e_right


def hamiltonian_matrix(p: DeviceParams, epsilon: float) -> np.ndarray:
    """Noise-free 6x6 Hamiltonian without the regime check."""
    ez, ez1 = zeeman_splittings(p)
    tc = p.t_c
    h = np.zeros((N_LEVELS, N_LEVELS), dtype=complex)
    h[np.diag_indices(N_LEVELS)] = [ez / 2, ez1 / 2, -ez1 / 2, -ez / 2, p.U0 - epsilon, p.U0p + epsilon]
    h[1, 4] = h[1, 5] = h[4, 1] = h[5, 1] = tc
    h[2, 4] = h[2, 5] = h[4, 2] = h[5, 2] = -tc
    return h


def noise_diagonal(p: DeviceParams, delta_eps, b_eff_L, b_eff_R) -> np.ndarray:
    """Diagonal noise terms, broadcast over array inputs; last axis has 6 entries.

    Detuning noise enters as eps -> eps + delta_eps on the doubly occupied
    singlets. Overhauser fields add +-b_L/2 +-b_R/2 to the computational
    states by spin projection, with b_s = g_s mu_B B_eff,s.
    """
    delta_eps, b_eff_L, b_eff_R = np.broadcast_arrays(
        np.asarray(delta_eps, float), np.asarray(b_eff_L, float), np.asarray(b_eff_R, float)
    )
    bl = 0.5 * p.g_L * p.mu_B * b_eff_L
    br = 0.5 * p.g_R * p.mu_B * b_eff_R
    return np.stack([bl + br, bl - br, -bl + br, -bl - br, -delta_eps, delta_eps], axis=-1)


def build_hamiltonian(p: DeviceParams, epsilon: float, delta_eps: float = 0.0,
                      b_eff_L: float = 0.0, b_eff_R: float = 0.0) -> np.ndarray:
    """Six-level Hamiltonian at bias ``epsilon`` with detuning and Overhauser noise.

    The regime check applies to the bias point only; noise excursions are
    allowed to leave it.
    """
    check_regime(p, epsilon)
    h = hamiltonian_matrix(p, epsilon)
    h[np.diag_indices(N_LEVELS)] += noise_diagonal(p, delta_eps, b_eff_L, b_eff_R)
    return h


def exchange_estimate(p: DeviceParams, epsilon: float) -> float:
    """Second-order exchange J = 2 t_c^2 (1/(U0 - eps) + 1/(U0' + eps))."""
    left = p.U0 - epsilon
    right = p.U0p + epsilon
    if left <= 0 or right <= 0:
        raise ZeroDivisionError(
            f"exchange estimate undefined at or beyond resonance (U0-eps={left:g}, U0'+eps={right:g})"
        )
    return 2.0 * p.t_c**2 * (1.0 / left + 1.0 / right)


def energy_levels(p: DeviceParams, epsilon: float) -> np.ndarray:
    """Ascending eigenvalues of the noise-free Hamiltonian."""
    return np.linalg.eigvalsh(hamiltonian_matrix(p, epsilon))


def evolution_operator(h: np.ndarray, duration: float, hbar: float = HBAR) -> np.ndarray:
    """exp(-i h t / hbar) by Hermitian eigendecomposition; ``h`` may be stacked."""
    w, v = np.linalg.eigh(h)
    phases = np.exp(-1j * w * (duration / hbar))
    return (v * phases[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def dressed_basis(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of ``h`` (possibly stacked) reordered to follow the bare basis.

    Returns ``(energies, M)`` where column k of ``M`` is the eigenvector
    continuously connected to bare state k, phased so that its k-th
    component is real and positive. ``M`` maps bare states onto their
    dressed counterparts, which is what an adiabatic ramp into ``h`` does.
    """
    w, v = np.linalg.eigh(h)
    weight = np.abs(v) ** 2  # [..., bare k, eigen j]
    owner = np.argmax(weight, axis=-1)
    flat_owner = owner.reshape(-1, h.shape[-1])
    flat_weight = weight.reshape(-1, *h.shape[-2:])
    for i, row in enumerate(flat_owner):
        if len(set(row.tolist())) != len(row):
            flat_owner[i] = linear_sum_assignment(-flat_weight[i])[1]
    owner = flat_owner.reshape(owner.shape)
    energies = np.take_along_axis(w, owner, axis=-1)
    m = np.take_along_axis(v, owner[..., None, :], axis=-1)
    diag = np.diagonal(m, axis1=-2, axis2=-1)
    m = m * (np.conj(diag) / np.abs(diag))[..., None, :]
    return energies, m


def conditional_phase(u: np.ndarray) -> float:
    """arg u00 + arg u11 - arg u01 - arg u10 on the computational diagonal, in (-pi, pi]."""
    z = u[0, 0] * u[3, 3] * np.conj(u[1, 1]) * np.conj(u[2, 2])
    return float(np.angle(z))


def solve_gate_time(p: DeviceParams, xtol: float = 1e-6, pulse_shape: str = "adiabatic") -> float:
    """Shortest pulse duration at ``epsilon_on`` giving a pi conditional phase.

    The second-order estimate pi hbar / J seeds a scan of the unwrapped
    phase; the first crossing of |phi| = pi is refined with Brent's method.
    ``pulse_shape`` selects adiabatic ramps (dressed energies only) or
    sudden square edges (full propagator diagonal, leakage wiggles included).
    """
    check_regime(p, p.epsilon_on)
    j = exchange_estimate(p, p.epsilon_on)
    if not j > 0:
        raise GateTimeError("no exchange at the bias point (t_c = 0): conditional phase never accumulates")
    seed = math.pi * p.hbar / j
    h = hamiltonian_matrix(p, p.epsilon_on)
    if pulse_shape == "adiabatic":
        w, _ = dressed_basis(h)

        def propagator_diagonal(t):
            return np.exp(-1j * w[:4] * t / p.hbar)
    elif pulse_shape == "square":
        w, v = np.linalg.eigh(h)
        vc = np.conj(v)

        def propagator_diagonal(t):
            return np.einsum("ik,k,ik->i", v[:4], np.exp(-1j * w * t / p.hbar), vc[:4])
    else:
        raise ValueError(f"pulse_shape must be 'adiabatic' or 'square', got {pulse_shape!r}")

    def phase(t):
        diag = propagator_diagonal(t)
        return float(np.angle(diag[0] * diag[3] * np.conj(diag[1]) * np.conj(diag[2])))

    # fine enough grid to follow the phase; Zeeman rates cancel in phi
    t_grid = np.linspace(0.0, 3.0 * seed, 3001)
    phi = np.unwrap([phase(t) for t in t_grid])
    above = np.nonzero(np.abs(phi) >= math.pi)[0]
    if above.size == 0:
        raise GateTimeError(
            f"conditional phase reached only {np.max(np.abs(phi)):.4g} rad within 3x the estimate "
            f"{seed:.6g} ns"
        )
    k = above[0]
    sign = math.copysign(1.0, phi[k])

    def residual(t):
        return float(np.angle(np.exp(1j * (phase(t) - sign * math.pi))))

    a, b = t_grid[k - 1], t_grid[k]
    fa, fb = residual(a), residual(b)
    if fa * fb > 0:
        raise GateTimeError(f"no sign change in bracket [{a:.6g}, {b:.6g}] ns (f = {fa:.3g}, {fb:.3g})")
    return brentq(residual, a, b, xtol=xtol)


def embed_single_qubit_rx(theta: float, target: str = "right") -> np.ndarray:
    """exp(-i theta sigma_x / 2) on one spin, identity on the singlet block."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    rx = np.array([[c, -1j * s], [-1j * s, c]])
    if target == "right":
        block = np.kron(np.eye(2), rx)
    elif target == "left":
        block = np.kron(rx, np.eye(2))
    else:
        raise ValueError(f"target must be 'left' or 'right', got {target!r}")
    u = np.eye(N_LEVELS, dtype=complex)
    u[COMPUTATIONAL, COMPUTATIONAL] = block
    return u
