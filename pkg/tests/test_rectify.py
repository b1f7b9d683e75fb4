import cmath
import math

import numpy as np
import pytest

from conftest import quadratic_member
from src.dynamics.AnalyticMap import AnalyticMap, iterate_orbit
from src.errors import (
    InsufficientDataError,
    PoleProximityError,
    PreconditionError,
    SegmentNearPoleError,
    StepConsistencyError,
    WrongCountError,
)
from src.forms.BuffForm import BuffForm
from src.forms.ExplicitForm import ExplicitForm
from src.forms.rectify import (
    CONE_SIGNS,
    ConeSpec,
    PathPolyline,
    cone_contains,
    integrate_path,
    lift_circle,
    lift_invariant_curve,
    lift_path,
    lifted_path_json,
    lifted_step,
    lifted_step_inverse,
    monodromy,
    polar_grid,
    verify_theorem_A,
)


@pytest.fixture
def parabolic_form(parabolic):
    return BuffForm(parabolic)


@pytest.fixture
def doubling():
    return BuffForm(AnalyticMap.polynomial([0, 2], validity_radius=4.0))


def test_paths():
    with pytest.raises(ValueError):
        PathPolyline((0.1,))
    with pytest.raises(ValueError):
        PathPolyline((0, math.inf))
    circle = PathPolyline.circle(0.5, 0.1, nodes=16)
    assert len(circle) == 17
    assert circle.start == circle.end
    square = PathPolyline.square(0, 0.1)
    assert square.start == square.end == pytest.approx(0.1 - 0.1j)


def test_integral_over_a_unit_step(doubling):
    assert integrate_path(doubling, PathPolyline.segment(1, 2)) == pytest.approx(1, abs=1e-12)


def test_monodromy(parabolic_form, perturbed):
    assert monodromy(parabolic_form, 0) == pytest.approx(2j * math.pi, abs=1e-8)
    circle = lift_circle(parabolic_form, 0j, 0.1)
    assert circle.translation == pytest.approx(2j * math.pi, abs=1e-9)
    square = lift_path(parabolic_form, PathPolyline.square(0, 0.1))
    assert square.translation == pytest.approx(2j * math.pi, abs=1e-9)

    form = BuffForm(perturbed)
    both = lift_circle(form, 0j, 0.3)
    expected = monodromy(form, 0) + monodromy(form, form.fixed_points[1].location)
    assert both.translation == pytest.approx(expected, abs=1e-7)


def test_circle_through_a_pole(parabolic_form, perturbed):
    with pytest.raises(PoleProximityError):
        lift_circle(BuffForm(perturbed), 0j, 0.1)
    with pytest.raises(SegmentNearPoleError):
        lift_path(parabolic_form, PathPolyline.segment(-0.1, 0.1))


def test_lift_is_a_primitive(parabolic_form):
    path = PathPolyline((0.3, 0.1 + 0.2j, -0.2 + 0.1j))
    lifted = lift_path(parabolic_form, path, start_value=5 + 1j)
    assert lifted.start_value == 5 + 1j
    assert lifted.values[0] == 5 + 1j
    assert lifted.translation == pytest.approx(integrate_path(parabolic_form, path), rel=1e-9)
    steps = np.abs(np.diff(lifted.as_array()))
    assert np.max(steps) <= 0.1 + 1e-12
    frame = lifted.to_frame()
    assert len(frame) == len(lifted.values)
    assert lifted_path_json(lifted)["vertices"] == len(lifted.values)


def test_repeated_vertices_are_skipped(parabolic_form):
    path = PathPolyline((0.3, 0.3, 0.2j))
    assert lift_path(parabolic_form, path).translation == pytest.approx(
        integrate_path(parabolic_form, PathPolyline.segment(0.3, 0.2j)))


def test_lifted_step_of_a_linear_map(doubling):
    z, Z = lifted_step(doubling, 0.01, 0)
    assert z == pytest.approx(0.02)
    assert Z == pytest.approx(1, abs=1e-12)
    with pytest.raises(PreconditionError):
        lifted_step(doubling, 0, 0)
    with pytest.raises(TypeError):
        lifted_step(ExplicitForm.pure(1), 0.1, 0)


def test_inverse_step_undoes_the_step(parabolic_form):
    z0 = 0.05 * cmath.exp(2.5j)
    z1, Z1 = lifted_step(parabolic_form, z0, 0.5j)
    back, Z0 = lifted_step_inverse(parabolic_form, z1, Z1, seed=z0)
    assert back == pytest.approx(z0, abs=1e-14)
    assert Z0 == pytest.approx(0.5j, abs=1e-10)


def test_cones():
    cone = ConeSpec(apex=0, epsilon=0.5)
    assert cone_contains(cone, 1)
    assert not cone_contains(cone, 1 + 1j)
    assert not cone_contains(cone, 0)
    assert cone_contains(ConeSpec(apex=1, epsilon=0.5, sign=CONE_SIGNS.MINUS), 0)
    with pytest.raises(ValueError):
        ConeSpec(apex=0, epsilon=1.0)
    with pytest.raises(ValueError):
        ConeSpec(apex=0, epsilon=0.5, sign="sideways")


def test_lifted_orbits_stay_in_the_cone(parabolic_form):
    z, Z = 0.02j, 0j
    cone = ConeSpec(apex=Z, epsilon=0.1)
    for _ in range(6):
        z, Z = lifted_step(parabolic_form, z, Z)
        assert cone_contains(cone, Z)


def test_polar_grid():
    grid = polar_grid(0.5, angles=8, radii=3)
    assert grid.shape == (24,)
    assert np.max(np.abs(grid)) == pytest.approx(0.5)
    assert np.min(np.abs(grid.imag)) > 0


def test_theorem_a_on_a_small_grid(parabolic):
    ns = [8, 16, 24, 32]
    report = verify_theorem_A(parabolic, [quadratic_member(n) for n in ns], q=1, epsilon=0.25, radii=[0.02],
                              grid=8, grid_radii=3, t_steps=4, indices=ns)
    assert report.passed
    assert report.radius_found == 0.02
    assert report.family_index_start == 8
    assert report.max_ratio < 0.25
    assert math.isfinite(report.deviation_gap)
    assert len(report.rows) == len(ns)
    assert report.to_json()["pass"] is True
    # fixed points are counted over the validity disk of the members, not over r = 0.02
    assert report.fixed_point_count_radius == 1.0
    assert report.to_json()["fixed_point_count_radius"] == 1.0


def test_theorem_a_arguments(parabolic):
    family = [quadratic_member(n) for n in (8, 16)]
    with pytest.raises(PreconditionError):
        verify_theorem_A(parabolic, family, q=1, epsilon=1.5, radii=[0.02])
    with pytest.raises(InsufficientDataError):
        verify_theorem_A(parabolic, family[:1], q=1, epsilon=0.25, radii=[0.02])
    with pytest.raises(WrongCountError):
        verify_theorem_A(parabolic, family, q=2, epsilon=0.25, radii=[0.02])


@pytest.mark.slow
def test_theorem_a_at_desk_scale(parabolic):
    ns = list(range(8, 65, 8))
    report = verify_theorem_A(parabolic, [quadratic_member(n) for n in ns], q=1, epsilon=0.25,
                              radii=[0.2, 0.1, 0.05, 0.02], indices=ns)
    assert report.passed
    assert report.radius_found >= 0.05


def test_invariant_curve_needs_a_full_unit(parabolic_form):
    with pytest.raises(InsufficientDataError):
        lift_invariant_curve(parabolic_form, [0.1, 0.09, 0.08], steps_per_unit=4)


def test_invariant_curve_of_a_backward_orbit(parabolic_form):
    # one sample per unit of time along the repelling axis of z + z^2
    orbit = iterate_orbit(parabolic_form.map, 0.05, -6)
    curve = lift_invariant_curve(parabolic_form, orbit, steps_per_unit=1)
    assert len(curve.lifted.values) == 7
    assert curve.step_mismatch < 1e-6


def test_invariant_curve_rejects_a_curve_that_is_not_invariant(parabolic_form):
    # a straight segment is not mapped into itself by z + z^2
    segment = np.linspace(-0.1, -0.02, 9) + 0.01j
    with pytest.raises(StepConsistencyError) as info:
        lift_invariant_curve(parabolic_form, segment, steps_per_unit=1)
    assert info.value.mismatch > 1


@pytest.mark.parametrize("name", ["parabolic", "perturbed"])
def test_lift_differentiates_to_omega_on_random_paths(name, request):
    form = BuffForm(request.getfixturevalue(name))
    rng = np.random.default_rng(3)
    h = 1e-5
    for _ in range(10):
        # vertices in a square that keeps every segment 0.1 away from the poles on the real axis
        vertices = rng.uniform(0.1, 0.5, size=4) + 1j * rng.uniform(0.1, 0.5, size=4)
        lifted = lift_path(form, PathPolyline(tuple(vertices)))
        base = lifted.base.vertices
        for a, b in zip(base[:-1], base[1:]):
            if a == b:
                continue
            u = (b - a) / abs(b - a)
            m = (a + b) / 2
            local = lift_path(form, PathPolyline.segment(m - h * u, m + h * u))
            assert local.translation / (2 * h * u) == pytest.approx(form.omega(m), rel=1e-6)
