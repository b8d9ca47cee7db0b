"""Physical constants in the package unit system (ueV, ns, nm, T)."""

import math

HBAR = 0.658212  # ueV * ns
MU_B = 57.8838  # ueV / T

COULOMB_UEV_NM = 1.439964e6  # e^2 / (4 pi eps0), ueV * nm
EPS_SI = 11.7  # relative permittivity of silicon
Q_TF = 2.0 / 3.0  # Thomas-Fermi screening wave vector, 1/nm

# e^2 / (4 pi eps_si) / q_TF^2, the 1/r^3 kernel strength for d = 0
SCREENED_PREFACTOR = COULOMB_UEV_NM / EPS_SI / Q_TF**2  # ueV * nm^3

NM2_PER_CM2 = 1e14

TWO_PI = 2.0 * math.pi
