"""Monte Carlo variability and fidelity simulator for silicon MOS two-qubit gates.

Random interface charge traps shift the interdot detuning of a double quantum
dot; together with quasi-static Overhauser fields this degrades the exchange
driven CZ gate and its robust composite variant. The package samples device
ensembles, propagates noisy and ideal unitaries, and summarizes the resulting
fidelity distributions.
"""

__version__ = "0.1.0"

from .constants import HBAR, MU_B
from .device import DeviceParams
from .traps import DotGeometry, SamplingSpec, TrapPosition, TrapSet

__all__ = [
    "HBAR",
    "MU_B",
    "DeviceParams",
    "DotGeometry",
    "SamplingSpec",
    "TrapPosition",
    "TrapSet",
    "__version__",
]
