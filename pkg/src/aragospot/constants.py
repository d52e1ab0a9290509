"""Physical constants used throughout the package (SI units).

All numerical routines take SI inputs and produce SI outputs; the single
record below is the only place constant values live.  Values are CODATA
2018 (h, c, k_B, e are exact in the 2019 SI redefinition).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    version: str
    c: float        # speed of light [m/s]
    h: float        # Planck constant [J s]
    hbar: float     # reduced Planck constant [J s]
    eps0: float     # vacuum permittivity [F/m]
    mu0: float      # vacuum permeability [N/A^2]
    k_B: float      # Boltzmann constant [J/K]
    amu: float      # atomic mass constant [kg]


_H = 6.62607015e-34

CODATA2018 = PhysicalConstants(
    version="CODATA-2018",
    c=299792458.0,
    h=_H,
    hbar=_H / (2.0 * math.pi),
    eps0=8.8541878128e-12,
    mu0=1.25663706212e-6,
    k_B=1.380649e-23,
    amu=1.66053906660e-27,
)

CONST = CODATA2018
