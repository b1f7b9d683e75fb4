import cmath
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from src.dynamics.AnalyticMap import AnalyticMap, evaluate
from src.errors import (
    BoundaryRootError,
    BranchCutError,
    ContourConflictError,
    DegenerateMultiplierError,
    InsufficientDataError,
    RootFinderError,
    UnitMultiplierError,
    WrongCountError,
)
from src.quadrature import contour_mean, winding_number
from src.utils import get_logger, log1p_complex, maybe_pair, to_pair

logger = get_logger(__name__)

root_finder_config = {
    "grid": 40,
    "max_iterations": 64,
    "dedup": 1e-8,
    "cluster": 1e-5,
    "winding_radius": 1e-3,
    "boundary_tolerance": 1e-9,
    "index_radius": 1e-2,
    "cycle_tolerance": 1e-9,
    "shared_multiplier_tolerance": 1e-8,
    "degenerate_tolerance": 1e-10,
}


class APPROACH:
    NON_TANGENTIAL = "non_tangential"
    TANGENTIAL = "tangential"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class FixedPointRecord:
    location: complex
    multiplier: complex
    multiplicity: int
    index: complex
    resit: complex
    big_lambda: Optional[complex]
    # f'(p) - 1, kept separately because 1 - multiplier cancels for multipliers near 1
    multiplier_offset: complex = 0j

    @property
    def is_parabolic(self) -> bool:
        return self.multiplicity > 1

    def to_json(self) -> dict:
        return {
            "location": to_pair(self.location),
            "multiplier": to_pair(self.multiplier),
            "multiplicity": int(self.multiplicity),
            "index": to_pair(self.index),
            "resit": to_pair(self.resit),
            "big_lambda": maybe_pair(self.big_lambda),
        }


@dataclass(frozen=True)
class BifurcationData:
    """
    the fixed point at 0 of f_n together with the q-cycle that bifurcated out of it
    """
    origin_record: FixedPointRecord
    cycle: tuple
    delta: complex
    rho: complex
    q: int
    leading_coefficient: complex = 1 + 0j
    rotation: Optional[int] = None

    @property
    def big_lambda(self) -> Optional[complex]:
        return self.origin_record.big_lambda

    @property
    def big_m(self) -> Optional[complex]:
        return self.cycle[0].big_lambda

    @property
    def cycle_multiplier(self) -> complex:
        return self.cycle[0].multiplier

    def est2_ratios(self) -> List[complex]:
        """a p^q / delta for every cycle point; 1 + o(1) as the family converges"""
        return [self.leading_coefficient * r.location ** self.q / self.delta for r in self.cycle]

    def to_json(self) -> dict:
        return {
            "origin": self.origin_record.to_json(),
            "cycle": [r.to_json() for r in self.cycle],
            "delta": to_pair(self.delta),
            "rho": to_pair(self.rho),
            "q": self.q,
            "rotation": self.rotation,
        }


def _delta_values(f: AnalyticMap):
    coefficients = f.delta
    return lambda z: P.polyval(z, coefficients)


def _newton_candidates(f: AnalyticMap, radius: float) -> np.ndarray:
    """Newton on f(z) - z from a square seed grid clipped to the disk, vectorized over seeds"""
    n = root_finder_config["grid"]
    axis = np.linspace(-radius, radius, n)
    seeds = (axis[None, :] + 1j * axis[:, None]).ravel()
    z = seeds[np.abs(seeds) <= radius].astype(complex)
    delta = f.delta
    slope = P.polyder(delta)
    with np.errstate(all="ignore"):
        for _ in range(root_finder_config["max_iterations"]):
            step = P.polyval(z, delta) / P.polyval(z, slope)
            step[~np.isfinite(step)] = 0
            z = z - step
        last = P.polyval(z, delta) / P.polyval(z, slope)
    settled = np.isfinite(z) & np.isfinite(last) & (np.abs(last) <= 1e-6 * np.maximum(1.0, np.abs(z)))
    exact = P.polyval(z, delta) == 0
    return z[(settled | exact) & (np.abs(z) <= radius * (1 + 1e-6) + 1e-12)]


def _cluster(points: np.ndarray) -> List[List[complex]]:
    points = sorted(points, key=lambda w: (round(w.real, 12), round(w.imag, 12)))
    clusters: List[List[complex]] = []
    for w in points:
        for cluster in clusters:
            if abs(w - cluster[0]) <= root_finder_config["cluster"]:
                cluster.append(w)
                break
        else:
            clusters.append([w])
    return clusters


def _polish(f: AnalyticMap, seed: complex, multiplicity: int) -> complex:
    """Newton on the (m-1)-th derivative of f - z, which has a simple root at an m-fold fixed point"""
    target = P.polyder(f.delta, multiplicity - 1) if multiplicity > 1 else f.delta
    slope = P.polyder(target)
    z = complex(seed)
    for _ in range(root_finder_config["max_iterations"]):
        d = complex(P.polyval(z, slope))
        if d == 0:
            break
        step = complex(P.polyval(z, target)) / d
        z -= step
        if abs(step) <= 1e-15 * max(1.0, abs(z)):
            break
    return z


def _multiplicity(f: AnalyticMap, center: complex, others: Sequence[complex]) -> int:
    radius = root_finder_config["winding_radius"]
    if others:
        radius = min(radius, 0.4 * min(abs(center - o) for o in others))
    return winding_number(_delta_values(f), center, radius)


def _log_multiplier(offset: complex) -> complex:
    return log1p_complex(offset)


def _big_lambda(multiplier: complex, offset: complex, multiplicity: int) -> Optional[complex]:
    if multiplicity > 1 or offset == 0:
        return None
    if multiplier.imag == 0 and multiplier.real <= 0:
        return None
    return 1 / _log_multiplier(offset)


def _parabolic_index(f: AnalyticMap, p: complex, radius: float) -> complex:
    inner = winding_number(_delta_values(f), p, radius)
    outer = winding_number(_delta_values(f), p, 2 * radius)
    if inner != outer:
        raise ContourConflictError(f"another fixed point lies within {2 * radius:.3g} of {p}")
    delta = f.delta
    return contour_mean(lambda z: -(z - p) / P.polyval(z, delta), p, radius)


def find_fixed_points(f: AnalyticMap, radius: float) -> List[FixedPointRecord]:
    """
    all roots of f(z) - z in the closed disk D(0, radius) with multiplicities, multipliers,
    holomorphic indices, residus iteratifs and multiplier parameters
    """
    if radius > f.validity_radius * (1 + 1e-12):
        raise ValueError("radius must not exceed the validity radius")
    if not np.any(f.delta):
        raise RootFinderError("f(z) - z vanishes identically")

    candidates = _newton_candidates(f, radius)
    clusters = _cluster(candidates)
    centers = [complex(np.mean(c)) for c in clusters]
    logger.debug(f"{len(candidates)} Newton candidates merged into {len(centers)} clusters for {f!r}")

    roots = []
    for i, center in enumerate(centers):
        others = centers[:i] + centers[i + 1:]
        m = _multiplicity(f, center, others)
        if m < 1:
            raise RootFinderError(f"cluster at {center} encloses no root")
        roots.append((_polish(f, center, m), m))

    # a polished root may have collapsed onto a neighbour
    merged = []
    for z, m in roots:
        if any(abs(z - w) <= root_finder_config["dedup"] for w, _ in merged):
            continue
        merged.append((z, m))
    roots = [(z, m) for z, m in merged if abs(z) <= radius * (1 + root_finder_config["boundary_tolerance"])]

    for z, _ in roots:
        if abs(abs(z) - radius) <= root_finder_config["boundary_tolerance"] * max(1.0, radius):
            raise BoundaryRootError(f"fixed point {z} lies on the circle |z| = {radius}")

    expected = winding_number(_delta_values(f), 0j, radius)
    found = sum(m for _, m in roots)
    if found != expected:
        raise RootFinderError(f"found {found} fixed points (with multiplicity) but the disk holds {expected}")

    records = [_record(f, z, m, [w for w, _ in roots if w != z]) for z, m in roots]
    records.sort(key=lambda r: (abs(r.location), cmath.phase(r.location)))
    logger.info(f"{f!r}: {len(records)} fixed points in D(0, {radius})")
    return records


def _record(f: AnalyticMap, z: complex, m: int, others: Sequence[complex]) -> FixedPointRecord:
    offset = complex(P.polyval(z, P.polyder(f.delta)))
    if m > 1:
        multiplier = 1 + 0j
        radius = root_finder_config["index_radius"]
        if others:
            radius = min(radius, 0.2 * min(abs(z - o) for o in others))
        index = _parabolic_index(f, z, radius)
        offset = 0j
    else:
        multiplier = 1 + offset
        index = -1 / offset
    return FixedPointRecord(
        location=z,
        multiplier=multiplier,
        multiplicity=m,
        index=index,
        resit=m / 2 - index,
        big_lambda=_big_lambda(multiplier, offset, m),
        multiplier_offset=offset,
    )


def _local_multiplicity(f: AnalyticMap, p: complex) -> int:
    return winding_number(_delta_values(f), complex(p), root_finder_config["winding_radius"])


def holomorphic_index(f: AnalyticMap, p: complex, radius: float = None) -> complex:
    """res(dz / (z - f(z)), p): closed form for simple fixed points, contour integral otherwise"""
    p = complex(p)
    if _local_multiplicity(f, p) == 1:
        return -1 / complex(P.polyval(p, P.polyder(f.delta)))
    return _parabolic_index(f, p, root_finder_config["index_radius"] if radius is None else radius)


def resit(f: AnalyticMap, p: complex, multiplicity: int = None) -> complex:
    m = _local_multiplicity(f, p) if multiplicity is None else multiplicity
    return m / 2 - holomorphic_index(f, p)


def multiplier_param(lam: complex, q: int = 1) -> complex:
    """1 / Log(lambda^q) on the principal branch"""
    w = complex(lam) ** q
    if w == 1:
        raise UnitMultiplierError("lambda^q = 1 has no multiplier parameter")
    if w.imag == 0 and w.real <= 0:
        raise BranchCutError(f"lambda^q = {w} lies on the branch cut of Log")
    return 1 / cmath.log(w)


def classify_approach(lambdas: Sequence[complex], q: int = 1, bound: float = 10.0) -> str:
    """
    finite-data proxy for non-tangential approach: the ratio |Im Lambda / Re Lambda| over the
    last half of the list stays below bound
    """
    if len(lambdas) < 8:
        raise InsufficientDataError("classify_approach needs at least 8 multipliers")
    ratios = []
    for lam in lambdas:
        big_lambda = multiplier_param(lam, q)
        ratios.append(math.inf if big_lambda.real == 0 else abs(big_lambda.imag / big_lambda.real))
    tail = np.array(ratios[len(ratios) // 2:])
    if np.max(tail) <= bound:
        return APPROACH.NON_TANGENTIAL
    if tail[-1] > bound and np.all(np.diff(tail) >= 0):
        return APPROACH.TANGENTIAL
    return APPROACH.UNDETERMINED


def _origin_resit(limit_map: AnalyticMap, radius: float) -> complex:
    records = find_fixed_points(limit_map, radius)
    origin = min(records, key=lambda r: abs(r.location))
    return origin.resit


def bifurcation_data(limit_map: AnalyticMap, perturbed_map: AnalyticMap, q: int, radius: float) -> BifurcationData:
    records = find_fixed_points(perturbed_map, radius)
    if len(records) != q + 1 or any(r.multiplicity != 1 for r in records):
        raise WrongCountError(f"expected {q + 1} simple fixed points, found "
                              f"{[(r.location, r.multiplicity) for r in records]}")
    for r in records:
        if abs(r.multiplier_offset) < root_finder_config["degenerate_tolerance"]:
            raise DegenerateMultiplierError(f"multiplier at {r.location} is within 1e-10 of 1")
        if abs(evaluate(perturbed_map, r.location) - r.location) > root_finder_config["cycle_tolerance"]:
            raise RootFinderError(f"{r.location} is not fixed to tolerance")

    origin = min(records, key=lambda r: abs(r.location))
    cycle = sorted((r for r in records if r is not origin), key=lambda r: cmath.phase(r.location) % (2 * math.pi))
    mu = cycle[0].multiplier
    for r in cycle:
        if abs(r.multiplier - mu) > root_finder_config["shared_multiplier_tolerance"] * max(1.0, abs(mu)):
            raise RootFinderError(f"cycle multipliers disagree: {r.multiplier} vs {mu}")

    rotation = None
    if perturbed_map.kind == "iterate" and perturbed_map.power == q and q > 1:
        rotation = _cycle_rotation(perturbed_map.base, [r.location for r in cycle])

    return BifurcationData(
        origin_record=origin,
        cycle=tuple(cycle),
        delta=-origin.multiplier_offset,
        rho=_origin_resit(limit_map, radius),
        q=q,
        leading_coefficient=complex(limit_map.expanded[q + 1]) if len(limit_map.expanded) > q + 1 else 0j,
        rotation=rotation,
    )


def _cycle_rotation(g: AnalyticMap, points: Sequence[complex]) -> int:
    """the shift p with g(p_j) = p_{j+p mod q} for points ordered by argument"""
    q = len(points)
    shifts = set()
    for j, point in enumerate(points):
        image = evaluate(g, point)
        k = int(np.argmin([abs(image - w) for w in points]))
        if abs(image - points[k]) > 1e-7 * max(1.0, abs(image)):
            raise RootFinderError(f"g does not permute the cycle: g({point}) = {image}")
        shifts.add((k - j) % q)
    if len(shifts) != 1:
        raise RootFinderError(f"g acts on the cycle with inconsistent shifts {sorted(shifts)}")
    return shifts.pop()


def sum_rule_check(data: BifurcationData) -> float:
    """|Lambda_n + q M_n - rho|"""
    if data.big_lambda is None or data.big_m is None:
        raise UnitMultiplierError("multiplier parameters are undefined for this data")
    return abs(data.big_lambda + data.q * data.big_m - data.rho)


def index_sum(f: AnalyticMap, radius: float) -> complex:
    """sum of holomorphic indices of all fixed points in D(0, radius)"""
    return sum((r.index for r in find_fixed_points(f, radius)), 0j)
