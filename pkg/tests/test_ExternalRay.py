import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from src.dynamics.AnalyticMap import AnalyticMap, evaluate
from src.errors import (
    EmptyRayError,
    GridMismatchError,
    InvalidAngleError,
    NonEscapingError,
    PotentialFloorError,
    PreconditionError,
    RayLandsInsideError,
)
from src.rays.ExternalRay import (
    TERMINATION,
    RayTail,
    detect_gate_crossing,
    green_potential,
    hausdorff_distance,
    landing_point,
    trace_ray,
    uniform_parameter_distance,
)


@pytest.fixture
def square():
    return AnalyticMap.polynomial([0, 0, 1], validity_radius=math.inf, name="z^2")


def gate_map(offset: float) -> AnalyticMap:
    return AnalyticMap.polynomial([0.25 + offset, 0, 1], validity_radius=math.inf)


def test_green_potential(square):
    assert green_potential(square, 2) == pytest.approx(math.log(2))
    assert green_potential(square, 1.5j) == pytest.approx(math.log(1.5))
    doubled = AnalyticMap.polynomial([0, 0, 2], validity_radius=math.inf)
    assert green_potential(doubled, 1) == pytest.approx(math.log(2))
    with pytest.raises(NonEscapingError):
        green_potential(square, 0.5)
    with pytest.raises(ValueError):
        green_potential(AnalyticMap.polynomial([0, 2], validity_radius=math.inf), 1)


def test_real_ray_of_the_square_lands_at_one(square):
    ray = trace_ray(square, 0, 1, t_min=-40.0, candidates=[1, -1])
    assert ray.termination == TERMINATION.LANDED
    assert ray.landing == 1
    points = ray.as_array()
    assert np.max(np.abs(points.imag)) < 1e-9
    assert ray.times[0] == 0
    assert all(b < a for a, b in zip(ray.times[:-1], ray.times[1:]))
    # P(z(t)) = z(t + 1)
    per_unit = round(1 / ray.dt)
    images = evaluate(square, points[per_unit:])
    assert images == pytest.approx(points[:-per_unit], rel=1e-9)
    assert green_potential(square, points[per_unit]) == pytest.approx(0.5, rel=1e-6)


def test_periodic_ray_lands_on_the_cycle(square):
    ray = trace_ray(square, Fraction(1, 3), 2, t_min=-40.0,
                    candidates=[cmath.exp(2j * math.pi / 3), cmath.exp(-2j * math.pi / 3)])
    assert ray.landing == pytest.approx(cmath.exp(2j * math.pi / 3))
    assert np.angle(ray.as_array()) == pytest.approx(2 * math.pi / 3, abs=1e-9)


def test_trace_arguments(square):
    with pytest.raises(InvalidAngleError):
        trace_ray(square, Fraction(1, 3), 1, t_min=-2.0)
    with pytest.raises(PreconditionError):
        trace_ray(square, 0, 1, t_min=1.0)
    with pytest.raises(PreconditionError):
        trace_ray(square, 0, 1, t_min=-2.0, dt=0.3)
    with pytest.raises(PreconditionError):
        trace_ray(AnalyticMap.polynomial([0, 0, 2], validity_radius=math.inf), 0, 1, t_min=-2.0)
    with pytest.raises(PotentialFloorError):
        trace_ray(square, 0, 1, t_min=-3.0, candidates=[5], strict=True)


def test_landing_point_after_the_fact(square):
    ray = trace_ray(square, 0, 1, t_min=-30.0)
    assert ray.termination == TERMINATION.POTENTIAL_FLOOR
    assert ray.landing is None
    assert ray.times[-1] == pytest.approx(-30.0)
    assert ray.log_potential_floor == pytest.approx(-30 * math.log(2))
    assert landing_point(ray, [1, -1], 1e-6) == 1
    assert landing_point(ray, [-1], 1e-6) is None
    assert landing_point(ray, [], 1e-6) is None


def test_ray_distances(square):
    ray = trace_ray(square, 0, 1, t_min=-40.0, candidates=[1])
    shifted = ray.translated(0.1j)
    assert shifted.landing == 1 + 0.1j
    assert len(ray.cloud()) == len(ray) + 1
    assert hausdorff_distance(ray, shifted) == pytest.approx(0.1)
    assert uniform_parameter_distance(ray, shifted) == pytest.approx(0.1)
    coarse = trace_ray(square, 0, 1, t_min=-4.0, dt=1 / 16)
    with pytest.raises(GridMismatchError):
        uniform_parameter_distance(ray, coarse)
    empty = RayTail(angle=Fraction(0), degree=2, period=1, dt=1 / 32, times=(), points=())
    with pytest.raises(EmptyRayError):
        hausdorff_distance(ray, empty)


def test_ray_exports(square):
    ray = trace_ray(square, 0, 1, t_min=-2.0)
    record = ray.to_json()
    assert record["angle"] == "0"
    assert record["samples"] == len(ray)
    assert record["t_last"] == pytest.approx(-2.0)
    frame = ray.to_frame()
    assert list(frame.columns) == ["t", "re", "im"]
    assert len(frame) == len(ray)


def test_ray_through_the_gate():
    s = 0.1
    ray = trace_ray(gate_map(s * s), 0, 1, t_min=-200.0, dt=1 / 16)
    assert ray.termination == TERMINATION.NEWTON_DIVERGENCE
    assert detect_gate_crossing(ray, [0.5 + 1j * s, 0.5 - 1j * s], 0.2, center=0.5)


def test_ray_that_lands_inside_the_disk():
    s = 0.1
    ray = trace_ray(gate_map(-s * s), 0, 1, t_min=-120.0, candidates=[0.4, 0.6])
    assert ray.landing == 0.6
    with pytest.raises(RayLandsInsideError):
        detect_gate_crossing(ray, [0.4, 0.6], 0.2, center=0.5)


def test_ray_that_misses_the_disk(square):
    ray = trace_ray(square, 0, 1, t_min=-10.0)
    assert not detect_gate_crossing(ray, [5j], 0.1, center=5j)


@pytest.mark.parametrize("angle, landing", [(Fraction(0), 1), (Fraction(1, 2), -1)])
def test_rays_of_a_cubic(angle, landing):
    cube = AnalyticMap.polynomial([0, 0, 0, 1], validity_radius=math.inf)
    ray = trace_ray(cube, angle, 1, t_min=-30.0, candidates=[1, -1])
    assert ray.degree == 3
    assert ray.landing == landing
    assert np.abs(ray.as_array()[-1] - landing) < 1e-6


@pytest.mark.parametrize("k", [2, 3])
def test_perturbed_parabolic_ray_lands_at_the_repelling_point(k):
    # z^2 + 1/4 - 4^-k has fixed points (1 +- 2^(1-k)) / 2
    P = gate_map(-(4.0 ** -k))
    repelling, attracting = (1 + 2 ** (1 - k)) / 2, (1 - 2 ** (1 - k)) / 2
    ray = trace_ray(P, 0, 1, t_min=-300.0, dt=1 / 16, candidates=[repelling, attracting])
    assert ray.termination == TERMINATION.LANDED
    assert ray.landing == repelling
    assert abs(ray.points[-1] - repelling) < 1e-6
