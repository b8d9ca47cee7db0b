"""Random interface-trap ensembles and their screened interdot detuning shifts.

Trap placement
--------------
Traps are a homogeneous Poisson point process on the oxide interface. The
count in a sampling square of side ``area_side + 2 * margin`` is drawn from
Poisson(density * region area) and positions are i.i.d. uniform. Restricted
to the central patterning square this is the same law as scattering traps
over a much larger region and cutting out one device, so the device-level
counts are identical to that procedure while costing O(traps per device).

Screening and the dot expectation values
----------------------------------------
Each trap charge produces a Thomas-Fermi screened potential that falls off
as 1/r^3. The detuning shift is the difference of its expectation values in
the left and right dot orbitals, modelled as 2D Gaussian densities a
distance ``z_setback`` below the interface. The setback keeps the kernel
integrable for traps sitting directly above a dot; shifts for such traps
grow roughly as 1/z_setback, so results are sensitive to it.

Interdot shifts are reported in ueV (the energy the detuning term absorbs).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .constants import NM2_PER_CM2, Q_TF, SCREENED_PREFACTOR


class QuadratureError(ArithmeticError):
    """Raised when the dot expectation value fails to converge."""

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate:.6g} ueV, error bound={error:.3g} ueV)")
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class TrapPosition:
    x: float  # nm
    y: float  # nm
    d: float = 0.0  # nm, depth parameter of the screening factor

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.d)):
            raise ValueError("trap coordinates must be finite")
        if self.d < 0:
            raise ValueError(f"trap depth d must be >= 0, got {self.d}")

    def mirrored(self, x_axis: float = 0.0) -> "TrapPosition":
        """Reflection about the vertical line ``x = x_axis``."""
        return TrapPosition(2.0 * x_axis - self.x, self.y, self.d)


@dataclass(frozen=True)
class SamplingSpec:
    density: float = 2e10  # traps / cm^2
    area_side: float = 100.0  # nm
    margin: float = 0.0  # nm

    def __post_init__(self):
        if not math.isfinite(self.density) or self.density < 0:
            raise ValueError(f"trap density must be finite and >= 0, got {self.density}")
        if not (math.isfinite(self.area_side) and self.area_side > 0):
            raise ValueError(f"area_side must be > 0, got {self.area_side}")
        if not (math.isfinite(self.margin) and self.margin >= 0):
            raise ValueError(f"margin must be >= 0, got {self.margin}")

    @property
    def region_side(self) -> float:
        return self.area_side + 2.0 * self.margin

    @property
    def expected_in_region(self) -> float:
        return self.density * self.region_side**2 / NM2_PER_CM2

    @property
    def expected_in_area(self) -> float:
        return self.density * self.area_side**2 / NM2_PER_CM2


@dataclass(frozen=True)
class DotGeometry:
    center_L: tuple[float, float] = (-17.5, 0.0)
    center_R: tuple[float, float] = (17.5, 0.0)
    sigma: float = 10.0  # nm, standard deviation of the 2D orbital density
    z_setback: float = 12.0  # nm, effective trap-to-electron vertical distance
    point_mode: bool = False

    def __post_init__(self):
        object.__setattr__(self, "center_L", tuple(float(v) for v in self.center_L))
        object.__setattr__(self, "center_R", tuple(float(v) for v in self.center_R))
        if not self.point_mode and not self.sigma > 0:
            raise ValueError(f"sigma must be > 0 outside point mode, got {self.sigma}")
        if math.dist(self.center_L, self.center_R) <= 0:
            raise ValueError("dot centers must be distinct")
        if self.z_setback < 0:
            raise ValueError(f"z_setback must be >= 0, got {self.z_setback}")

    @classmethod
    def symmetric(cls, separation: float = 35.0, **kwargs) -> "DotGeometry":
        """Dots at (-separation/2, 0) and (+separation/2, 0)."""
        half = separation / 2.0
        return cls(center_L=(-half, 0.0), center_R=(half, 0.0), **kwargs)

    @property
    def bisector_x(self) -> float:
        return 0.5 * (self.center_L[0] + self.center_R[0])


@dataclass(frozen=True)
class TrapSet:
    traps: tuple[TrapPosition, ...] = ()
    detuning_shifts: tuple[float, ...] = ()  # ueV
    in_area_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "traps", tuple(self.traps))
        object.__setattr__(self, "detuning_shifts", tuple(float(s) for s in self.detuning_shifts))
        if self.detuning_shifts and len(self.detuning_shifts) != len(self.traps):
            raise ValueError("need one detuning shift per trap")
        if self.in_area_count > len(self.traps):
            raise ValueError("in_area_count exceeds number of traps")
        if not all(math.isfinite(s) for s in self.detuning_shifts):
            raise ValueError("detuning shifts must be finite")

    def __len__(self) -> int:
        return len(self.traps)

    @property
    def total_shift(self) -> float:
        """Detuning shift with every trap occupied (ueV)."""
        return math.fsum(self.detuning_shifts)

    def scaled(self, factor: float) -> "TrapSet":
        return TrapSet(self.traps, tuple(factor * s for s in self.detuning_shifts), self.in_area_count)

    def to_json(self, seed: int | None = None, spec: SamplingSpec | None = None,
                geometry: DotGeometry | None = None) -> str:
        doc = {
            "seed": seed,
            "spec": asdict(spec) if spec is not None else None,
            "geometry": asdict(geometry) if geometry is not None else None,
            "traps": [{"x": _sig15(t.x), "y": _sig15(t.y), "d": _sig15(t.d)} for t in self.traps],
            "shifts_ueV": [_sig15(s) for s in self.detuning_shifts],
            "in_area_count": self.in_area_count,
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TrapSet":
        doc = json.loads(text)
        traps = tuple(TrapPosition(**t) for t in doc["traps"])
        return cls(traps, tuple(doc["shifts_ueV"]), int(doc["in_area_count"]))


def _sig15(value: float) -> float:
    return float(f"{value:.15g}")


def sample_traps(spec: SamplingSpec, rng: np.random.Generator) -> TrapSet:
    """Draw trap positions for one device; shifts are left empty."""
    n = int(rng.poisson(spec.expected_in_region))
    half = spec.region_side / 2.0
    xy = rng.uniform(-half, half, size=(n, 2))
    inner = spec.area_side / 2.0
    in_area = int(np.count_nonzero(np.all(np.abs(xy) <= inner, axis=1)))
    traps = tuple(TrapPosition(float(x), float(y)) for x, y in xy)
    return TrapSet(traps, (), in_area)


def screened_potential(trap: TrapPosition, point) -> float:
    """Screened trap potential energy (ueV) at a 3D point (nm)."""
    px, py, pz = point
    r2 = (px - trap.x) ** 2 + (py - trap.y) ** 2 + pz**2
    if not r2 > 0:
        raise ValueError("trap and evaluation point coincide")
    return SCREENED_PREFACTOR * (1.0 + Q_TF * trap.d) / r2**1.5


def _axis_breaks(lo: float, hi: float, center: float, scale: float) -> np.ndarray:
    # panel edges graded geometrically around the trap coordinate
    offsets = scale * np.array([0.0, 1.0, 3.0, 10.0, 30.0, 100.0])
    pts = np.concatenate([[lo, hi], center - offsets, center + offsets])
    pts = np.unique(np.clip(pts, lo, hi))
    return pts[np.diff(pts, prepend=-np.inf) > 1e-12 * (hi - lo)]


def _composite_nodes(breaks: np.ndarray, order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = breaks[:-1, None], breaks[1:, None]
    nodes = 0.5 * (b - a) * x + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w
    return nodes.ravel(), weights.ravel()


def dot_expectation(trap: TrapPosition, center, sigma: float, z_setback: float,
                    rtol: float = 1e-4, max_order: int = 256) -> float:
    """Expectation value of the screened potential in a Gaussian dot orbital.

    Tensor-product Gauss-Legendre over a +-4 sigma box, split into panels
    graded around the trap. The order doubles until the relative change
    drops below ``rtol``.
    """
    cx, cy = center
    half = 4.0 * sigma
    scale = max(z_setback, 0.05 * sigma, 1e-3)
    bx = _axis_breaks(cx - half, cx + half, trap.x, scale)
    by = _axis_breaks(cy - half, cy + half, trap.y, scale)
    strength = SCREENED_PREFACTOR * (1.0 + Q_TF * trap.d)

    def estimate(order):
        x, wx = _composite_nodes(bx, order)
        y, wy = _composite_nodes(by, order)
        rho_x = wx * np.exp(-0.5 * ((x - cx) / sigma) ** 2)
        rho_y = wy * np.exp(-0.5 * ((y - cy) / sigma) ** 2)
        r2 = (x[:, None] - trap.x) ** 2 + (y[None, :] - trap.y) ** 2 + z_setback**2
        with np.errstate(divide="ignore"):
            kernel = r2**-1.5
        weights = rho_x[:, None] * rho_y[None, :]
        return strength * float(np.sum(weights * kernel) / np.sum(weights))

    order = 8
    previous = estimate(order)
    while order < max_order:
        order *= 2
        current = estimate(order)
        error = abs(current - previous)
        if math.isfinite(current) and error <= rtol * abs(current):
            return current
        previous = current
    raise QuadratureError("dot expectation value did not converge", previous, error)


def interdot_shift(trap: TrapPosition, geom: DotGeometry) -> float:
    """<L|V|L> - <R|V|R> for one trap charge, in ueV."""
    if geom.point_mode:
        z = geom.z_setback
        return (screened_potential(trap, (*geom.center_L, z))
                - screened_potential(trap, (*geom.center_R, z)))
    return (dot_expectation(trap, geom.center_L, geom.sigma, geom.z_setback)
            - dot_expectation(trap, geom.center_R, geom.sigma, geom.z_setback))


def build_trap_set(spec: SamplingSpec, geom: DotGeometry, rng: np.random.Generator) -> TrapSet:
    """Sample one device and attach the interdot shift of every trap."""
    positions = sample_traps(spec, rng)
    shifts = tuple(interdot_shift(t, geom) for t in positions.traps)
    return TrapSet(positions.traps, shifts, positions.in_area_count)
