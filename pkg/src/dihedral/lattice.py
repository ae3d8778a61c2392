"""Cosine coefficients of the dihedral lattice and the divisibility classes of m."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

# 2*cos(pi*k/3) for k mod 6
_TWICE_COS = (2, 1, -1, -2, -1, 1)


class MClass(enum.Enum):
    SIX = "Six"
    ODD_THREE = "OddThree"
    EVEN_NOT_THREE = "EvenNotThree"
    COPRIME = "Coprime"


@dataclass(frozen=True)
class LatticeConfig:
    """Dihedral order ``m`` and Fourier truncation ``N``."""

    m: int
    N: int

    def __post_init__(self) -> None:
        if int(self.m) != self.m or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")

    def twice_cos(self, k: int) -> int:
        """Integer 2*cos(m*pi*k/3), always one of -2, -1, 1, 2."""
        return _TWICE_COS[(self.m * k) % 6]

    def cos_table(self) -> list[int]:
        """Numerators (over 2) of cos(m*pi*k/3) for k = 0..5."""
        return [self.twice_cos(k) for k in range(6)]


def cos_coeff(cfg: LatticeConfig, k: int) -> Fraction:
    """Exact value of cos(m*pi*k/3)."""
    return Fraction(cfg.twice_cos(k), 2)


def c_m(cfg: LatticeConfig) -> Fraction:
    """The constant 2*cos(m*pi/3)."""
    return Fraction(cfg.twice_cos(1))


def m_class(cfg: LatticeConfig) -> MClass:
    even, three = cfg.m % 2 == 0, cfg.m % 3 == 0
    if even and three:
        return MClass.SIX
    if three:
        return MClass.ODD_THREE
    if even:
        return MClass.EVEN_NOT_THREE
    return MClass.COPRIME
