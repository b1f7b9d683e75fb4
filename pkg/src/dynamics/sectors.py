import cmath
import math
from dataclasses import dataclass
from typing import Optional


class SECTOR_CASES:
    REPELLING_A = "repelling_A"
    ATTRACTING_B = "attracting_B"


@dataclass(frozen=True)
class SectorSpec:
    """
    the q sectors about 0 that hold the bifurcated cycle: centred on the angles 2 j pi / q in the
    repelling case and on (2j - 1) pi / q in the attracting case, each of half-width
    (pi/2 - theta0/2) / q
    """
    q: int
    theta0: float
    case: str = SECTOR_CASES.REPELLING_A

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("q must be a positive integer")
        if not (0 < self.theta0 < math.pi / 2):
            raise ValueError("theta0 must lie in (0, pi/2)")
        if self.case not in (SECTOR_CASES.REPELLING_A, SECTOR_CASES.ATTRACTING_B):
            raise ValueError(f"unknown sector case {self.case!r}")

    @property
    def half_width(self) -> float:
        return (math.pi / 2 - self.theta0 / 2) / self.q

    def center(self, j: int) -> float:
        if self.case == SECTOR_CASES.REPELLING_A:
            return 2 * j * math.pi / self.q
        return (2 * j - 1) * math.pi / self.q


def _angle_gap(a: float, b: float) -> float:
    return abs(math.remainder(a - b, 2 * math.pi))


def sector_label(p: complex, spec: SectorSpec) -> Optional[int]:
    """index j in 1..q of the sector holding arg p, or None"""
    if p == 0:
        return None
    theta = cmath.phase(p)
    for j in range(1, spec.q + 1):
        if _angle_gap(theta, spec.center(j)) < spec.half_width:
            return j
    return None
