import cmath
import math

import pytest

from conftest import cubic_member, quadratic_member
from src.dynamics.AnalyticMap import AnalyticMap
from src.dynamics.FixedPoints import (
    APPROACH,
    bifurcation_data,
    classify_approach,
    find_fixed_points,
    holomorphic_index,
    index_sum,
    multiplier_param,
    resit,
    sum_rule_check,
)
from src.dynamics.sectors import SECTOR_CASES, SectorSpec, sector_label
from src.errors import (
    BoundaryRootError,
    BranchCutError,
    InsufficientDataError,
    RootFinderError,
    UnitMultiplierError,
    WrongCountError,
)


def test_simple_fixed_points(perturbed):
    records = find_fixed_points(perturbed, 1.0)
    assert [r.multiplicity for r in records] == [1, 1]
    origin, other = records
    assert origin.location == pytest.approx(0, abs=1e-14)
    assert other.location == pytest.approx(0.1)
    assert origin.multiplier == pytest.approx(0.9)
    assert other.multiplier == pytest.approx(1.1)
    assert origin.index == pytest.approx(10)
    assert other.index == pytest.approx(-10)
    assert origin.resit == pytest.approx(0.5 - 10)
    assert origin.big_lambda == pytest.approx(1 / math.log(0.9))


def test_parabolic_fixed_point(parabolic):
    records = find_fixed_points(parabolic, 1.0)
    assert len(records) == 1
    record = records[0]
    assert record.is_parabolic
    assert record.multiplicity == 2
    assert record.multiplier == 1
    assert record.index == pytest.approx(0, abs=1e-9)
    assert record.resit == pytest.approx(1, abs=1e-9)
    assert record.big_lambda is None


def test_triple_fixed_point():
    records = find_fixed_points(AnalyticMap.polynomial([0, 1, 0, 1]), 1.0)
    assert [r.multiplicity for r in records] == [3]
    assert records[0].resit == pytest.approx(1.5, abs=1e-9)


def test_index_and_resit_helpers(perturbed, parabolic):
    assert holomorphic_index(perturbed, 0.1) == pytest.approx(-10)
    assert resit(parabolic, 0) == pytest.approx(1, abs=1e-9)
    assert index_sum(perturbed, 1.0) == pytest.approx(0, abs=1e-9)


def test_root_finder_errors(perturbed):
    with pytest.raises(ValueError):
        find_fixed_points(perturbed, 2.0)
    with pytest.raises(RootFinderError):
        find_fixed_points(AnalyticMap.polynomial([0, 1]), 1.0)
    with pytest.raises(BoundaryRootError):
        find_fixed_points(AnalyticMap.polynomial([0, 0.5, 1]), 0.5)


def test_multiplier_param():
    assert multiplier_param(math.exp(0.5)) == pytest.approx(2)
    assert multiplier_param(cmath.exp(0.25), q=2) == pytest.approx(2)
    with pytest.raises(UnitMultiplierError):
        multiplier_param(1)
    with pytest.raises(UnitMultiplierError):
        multiplier_param(-1, q=2)
    with pytest.raises(BranchCutError):
        multiplier_param(-0.5)


def test_classify_approach():
    radial = [math.exp(1 / n) for n in range(1, 9)]
    assert classify_approach(radial) == APPROACH.NON_TANGENTIAL
    tangential = [cmath.exp(1j / n + 1 / n ** 3) for n in range(1, 9)]
    assert classify_approach(tangential) == APPROACH.TANGENTIAL
    with pytest.raises(InsufficientDataError):
        classify_approach(radial[:7])


def test_quadratic_bifurcation_is_exact(parabolic):
    for n in (8, 16, 64):
        data = bifurcation_data(parabolic, quadratic_member(n), q=1, radius=1.0)
        assert data.delta == pytest.approx(1 - math.exp(1 / n))
        assert data.est2_ratios()[0] == pytest.approx(1, abs=1e-12)
        assert data.big_lambda == pytest.approx(n)
        assert data.rho == pytest.approx(1, abs=1e-9)


def test_quadratic_sum_rule(parabolic):
    for n in (16, 32, 64):
        data = bifurcation_data(parabolic, quadratic_member(n), q=1, radius=1.0)
        assert sum_rule_check(data) < 2 / n


def test_cubic_two_cycle(cubic_limit):
    n = 32
    data = bifurcation_data(cubic_limit, cubic_member(n), q=2, radius=0.8)
    assert len(data.cycle) == 2
    assert data.leading_coefficient == pytest.approx(-2)
    assert data.rotation == 1
    ratio = 2 / (1 + math.exp(1 / n))
    assert all(r == pytest.approx(ratio, rel=1e-9) for r in data.est2_ratios())
    assert abs(data.cycle[0].location) == pytest.approx(math.sqrt(math.exp(1 / n) - 1))


def test_wrong_cycle_count(parabolic):
    with pytest.raises(WrongCountError):
        bifurcation_data(parabolic, quadratic_member(8), q=2, radius=1.0)


def test_index_sum_is_continuous_along_the_family(parabolic):
    limit = index_sum(parabolic, 1.0)
    gaps = [abs(index_sum(quadratic_member(n), 1.0) - limit) for n in (8, 32, 128)]
    assert max(gaps) < 1e-6


def test_sectors():
    spec = SectorSpec(q=2, theta0=0.2)
    assert spec.half_width == pytest.approx((math.pi / 2 - 0.1) / 2)
    assert sector_label(0.1, spec) == 2
    assert sector_label(-0.1, spec) == 1
    assert sector_label(0.1j, spec) is None
    assert sector_label(0, spec) is None
    attracting = SectorSpec(q=2, theta0=0.2, case=SECTOR_CASES.ATTRACTING_B)
    assert sector_label(0.1j, attracting) == 1
    assert sector_label(-0.1j, attracting) == 2
    with pytest.raises(ValueError):
        SectorSpec(q=2, theta0=2.0)


def test_bifurcated_cycle_sits_in_the_repelling_sectors(cubic_limit):
    data = bifurcation_data(cubic_limit, cubic_member(16), q=2, radius=0.8)
    spec = SectorSpec(q=2, theta0=0.2)
    assert sorted(sector_label(r.location, spec) for r in data.cycle) == [1, 2]
