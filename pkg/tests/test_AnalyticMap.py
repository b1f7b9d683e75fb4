import math

import numpy as np
import pytest

from src.dynamics.AnalyticMap import (
    AnalyticMap,
    derivative,
    evaluate,
    iterate_orbit,
    local_inverse,
    taylor_coefficients,
)
from src.errors import (
    CriticalPointError,
    DomainExceededError,
    NonFiniteError,
    OrbitEscapedError,
)


def test_polynomial_values(parabolic):
    assert evaluate(parabolic, 0.5) == pytest.approx(0.75)
    assert derivative(parabolic, 0.5) == pytest.approx(2.0)
    values = evaluate(parabolic, np.array([0, 0.5j]))
    assert values == pytest.approx(np.array([0, 0.5j - 0.25]))


def test_iterate_expands_to_composition(cubic_limit):
    assert cubic_limit.expanded == pytest.approx(np.array([0, 1, 0, -2, 0, 3, 0, -3, 0, 1]))
    assert cubic_limit.total_power == 2
    assert cubic_limit.degree == 9
    z = 0.3 + 0.1j
    g = cubic_limit.base
    assert evaluate(cubic_limit, z) == pytest.approx(evaluate(g, evaluate(g, z)))
    assert derivative(cubic_limit, z) == pytest.approx(derivative(g, evaluate(g, z)) * derivative(g, z))


def test_delta_coefficients(parabolic):
    assert parabolic.delta == pytest.approx(np.array([0, 0, 1]))
    identity = AnalyticMap.polynomial([0, 1])
    assert not np.any(identity.delta)


def test_trailing_zeros_are_trimmed():
    f = AnalyticMap.polynomial([0, 2, 0, 0])
    assert f.coefficients == (0j, 2 + 0j)
    with pytest.raises(ValueError):
        AnalyticMap(kind="polynomial", validity_radius=1.0, coefficients=(0j, 1 + 0j, 0j))


def test_invalid_maps():
    with pytest.raises(NonFiniteError):
        AnalyticMap.polynomial([0, math.inf])
    with pytest.raises(ValueError):
        AnalyticMap.polynomial([0, 1, 1], validity_radius=0)
    with pytest.raises(ValueError):
        AnalyticMap.iterate(AnalyticMap.polynomial([0, 1, 1]), 0)
    with pytest.raises(TypeError):
        AnalyticMap(kind="iterate", validity_radius=1.0, base=None, power=2)


def test_domain_is_enforced(parabolic):
    with pytest.raises(DomainExceededError):
        evaluate(parabolic, 1.5)
    with pytest.raises(DomainExceededError):
        derivative(parabolic, np.array([0.1, 2j]))


def test_local_inverse_follows_the_seed(quarter):
    w = 0.25 + 0.09
    assert local_inverse(quarter, w, seed=0.4) == pytest.approx(0.3)
    assert local_inverse(quarter, w, seed=-0.4) == pytest.approx(-0.3)


def test_local_inverse_at_a_critical_point():
    square = AnalyticMap.polynomial([0, 0, 1], validity_radius=math.inf)
    with pytest.raises(CriticalPointError):
        local_inverse(square, 1e-30, seed=0)


def test_orbits(parabolic, perturbed):
    orbit = iterate_orbit(perturbed, 0.05, 3)
    assert len(orbit) == 4
    assert orbit[1] == pytest.approx(0.9 * 0.05 + 0.05 ** 2)
    back = iterate_orbit(perturbed, orbit[-1], -3)
    assert back[-1] == pytest.approx(0.05)
    with pytest.raises(OrbitEscapedError):
        iterate_orbit(parabolic, 0.9, 2)


def test_taylor_coefficients(parabolic, cubic_limit):
    assert taylor_coefficients(parabolic, 0.5, 3) == pytest.approx([0.75, 2, 1, 0])
    assert taylor_coefficients(cubic_limit, 0, 5) == pytest.approx([0, 1, 0, -2, 0, 3], abs=1e-8)


def test_with_linear_factor(parabolic, cubic_limit):
    member = parabolic.with_linear_factor(1.5)
    assert member.coefficients == (0j, 1.5 + 0j, 1 + 0j)
    nested = cubic_limit.with_linear_factor(2.0)
    assert nested.kind == "iterate"
    assert nested.base.coefficients[1] == -2
    assert nested.validity_radius == cubic_limit.validity_radius


def random_interior_points(rng, radius: float, size: int) -> np.ndarray:
    r = 0.9 * radius * np.sqrt(rng.uniform(size=size))
    return r * np.exp(2j * math.pi * rng.uniform(size=size))


@pytest.mark.parametrize("name", ["parabolic", "perturbed", "cubic_limit"])
def test_derivative_matches_central_differences(name, request):
    f = request.getfixturevalue(name)
    rng = np.random.default_rng(7)
    h = 1e-5
    for z in random_interior_points(rng, f.validity_radius, 100):
        difference = (evaluate(f, z + h) - evaluate(f, z - h)) / (2 * h)
        assert abs(derivative(f, z) - difference) < 1e-7


@pytest.mark.parametrize("name", ["parabolic", "perturbed", "cubic_limit"])
def test_local_inverse_undoes_evaluate(name, request):
    f = request.getfixturevalue(name)
    rng = np.random.default_rng(11)
    checked = 0
    for z in random_interior_points(rng, f.validity_radius, 100):
        if abs(derivative(f, z)) <= 0.1:
            continue
        seed = z + 1e-6 * np.exp(2j * math.pi * rng.uniform())
        assert abs(local_inverse(f, evaluate(f, z), seed=seed) - z) < 1e-10
        checked += 1
    assert checked > 50
