"""Physical constants (SI, CODATA 2018; all three are exact in the 2019 SI)."""

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    h: float = 6.62607015e-34  # J s
    k_B: float = 1.380649e-23  # J/K

    @property
    def hbar(self) -> float:
        return self.h / (2.0 * math.pi)


CONSTANTS = PhysicalConstants()
H = CONSTANTS.h
HBAR = CONSTANTS.hbar
K_B = CONSTANTS.k_B
