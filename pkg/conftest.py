import cmath
import math

import pytest

from src.dynamics.AnalyticMap import AnalyticMap


@pytest.fixture
def parabolic():
    """z + z^2"""
    return AnalyticMap.polynomial([0, 1, 1], name="z+z^2")


@pytest.fixture
def perturbed():
    """0.9 z + z^2, fixed points 0 and 0.1"""
    return AnalyticMap.polynomial([0, 0.9, 1], name="0.9z+z^2")


@pytest.fixture
def cubic_limit():
    """g o g for g = -z + z^3"""
    g = AnalyticMap.polynomial([0, -1, 0, 1])
    return AnalyticMap.iterate(g, 2, validity_radius=0.8, name="g2")


def quadratic_member(n: int) -> AnalyticMap:
    return AnalyticMap.polynomial([0, cmath.exp(1 / n), 1], name=f"quadratic[n={n}]")


def cubic_member(n: int) -> AnalyticMap:
    g = AnalyticMap.polynomial([0, -math.exp(1 / n), 0, 1])
    return AnalyticMap.iterate(g, 2, validity_radius=0.8, name=f"g2[n={n}]")


@pytest.fixture
def quarter():
    """z^2 + 1/4 on the whole plane"""
    return AnalyticMap.polynomial([0.25, 0, 1], validity_radius=math.inf, name="z^2+1/4")
