import cmath
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Union

import numba
import numpy as np
import pandas as pd
from matplotlib.path import Path
from scipy.spatial.distance import directed_hausdorff

from src.dynamics.AnalyticMap import AnalyticMap, local_inverse
from src.errors import (
    CriticalPointError,
    EmptyRayError,
    GridMismatchError,
    InvalidAngleError,
    NoConvergenceError,
    NonEscapingError,
    PotentialFloorError,
    PreconditionError,
    RayLandsInsideError,
)
from src.utils import get_logger, maybe_pair

logger = get_logger(__name__)

ray_config = {
    "escape_radius": 1e10,
    "max_iterations": 200000,
    "boettcher_level": 30.0,
    "start_potential": 8.0,
    "dt": 1 / 32,
    "max_dt": 1 / 16,
    "min_dt": 1 / 512,
    "landing_window": 8,
    "jump_factor": 8.0,
    "jump_floor": 1e-9,
}


class TERMINATION:
    LANDED = "landed"
    POTENTIAL_FLOOR = "potential-floor"
    NEWTON_DIVERGENCE = "newton-divergence"
    BRANCH_JUMP = "branch-jump"


@numba.njit(cache=True)
def _escape(coefficients, z, escape_radius, max_iterations):
    """number of iterations until |z| > escape_radius (-1 if never) and the escaped value"""
    for n in range(max_iterations):
        if abs(z) > escape_radius:
            return n, z
        acc = 0j
        for k in range(len(coefficients) - 1, -1, -1):
            acc = acc * z + coefficients[k]
        z = acc
    return -1, z


@dataclass(frozen=True)
class RayTail:
    """
    samples z(t) of an external ray at t = 0, -dt, -2 dt, ... where the Green's potential is (d^q)^t,
    with the landing point when one was detected
    """
    angle: Fraction
    degree: int
    period: int
    dt: float
    times: tuple
    points: tuple
    landing: Optional[complex] = None
    log_potential_floor: float = 0.0
    termination: str = TERMINATION.POTENTIAL_FLOOR

    def __post_init__(self):
        if len(self.times) != len(self.points):
            raise ValueError("a ray needs one parameter value per sample")

    @property
    def potential_floor(self) -> float:
        return math.exp(self.log_potential_floor)

    @property
    def samples(self) -> List[tuple]:
        return list(zip(self.times, self.points))

    def __len__(self):
        return len(self.points)

    def as_array(self) -> np.ndarray:
        return np.array(self.points, dtype=complex)

    def cloud(self) -> np.ndarray:
        """samples with the landing point appended as the t = -inf sample"""
        points = self.as_array()
        if self.landing is not None:
            points = np.append(points, self.landing)
        return points

    def translated(self, offset: complex) -> "RayTail":
        landing = None if self.landing is None else self.landing + offset
        return replace(self, points=tuple(z + offset for z in self.points), landing=landing)

    def to_frame(self) -> pd.DataFrame:
        points = self.as_array()
        return pd.DataFrame({"t": self.times, "re": points.real, "im": points.imag})

    def to_json(self) -> dict:
        return {
            "angle": str(self.angle),
            "degree": self.degree,
            "period": self.period,
            "dt": self.dt,
            "samples": len(self.points),
            "t_last": self.times[-1] if self.times else None,
            "landing": maybe_pair(self.landing),
            "log_potential_floor": self.log_potential_floor,
            "termination": self.termination,
        }


def _require_polynomial(P: AnalyticMap) -> np.ndarray:
    if P.kind != "polynomial":
        raise ValueError("external rays need a polynomial")
    coefficients = np.array(P.coefficients, dtype=complex)
    if len(coefficients) < 3:
        raise ValueError("external rays need degree at least 2")
    return coefficients


def log_green_potential(P: AnalyticMap, z: complex) -> float:
    """log G(z), which stays finite where G itself underflows"""
    coefficients = _require_polynomial(P)
    d = len(coefficients) - 1
    n, w = _escape(coefficients, complex(z), ray_config["escape_radius"], ray_config["max_iterations"])
    if n < 0:
        raise NonEscapingError(f"{z} did not escape within {ray_config['max_iterations']} iterations")
    level = math.log(abs(w)) + math.log(abs(coefficients[-1])) / (d - 1)
    return math.log(level) - n * math.log(d)


def green_potential(P: AnalyticMap, z: complex) -> float:
    """
    G(z) = lim d^{-n} log|P^n(z)|, read off once the orbit passes the escape radius, including the
    log|a_d| / (d - 1) correction for a non-monic leading coefficient
    """
    return math.exp(log_green_potential(P, z))


def _check_angle(theta: Fraction, d: int, q: int) -> Fraction:
    theta = Fraction(theta) % 1
    if q < 1:
        raise InvalidAngleError("the period must be a positive integer")
    if (theta * d ** q) % 1 != theta:
        raise InvalidAngleError(f"{theta} is not periodic of period {q} under multiplication by {d}")
    return theta


class _BoettcherSolver:
    """points of given potential and angle: Newton on P^n(z) = phi^{-1}(W) with d^n s large"""

    def __init__(self, P: AnalyticMap, theta: Fraction, q: int):
        coefficients = np.array(P.coefficients, dtype=complex)
        self.P = P
        self.theta = theta
        self.d = len(coefficients) - 1
        self.q = q
        # phi(z) = z + a_{d-1} / d + O(1/z) for monic P
        self.shift = coefficients[-2] / self.d
        self.iterates: Dict[int, AnalyticMap] = {}

    def iterate(self, n: int) -> AnalyticMap:
        if n not in self.iterates:
            self.iterates[n] = AnalyticMap.iterate(self.P, n, validity_radius=math.inf)
        return self.iterates[n]

    def potential(self, t: float) -> float:
        return math.exp(t * self.q * math.log(self.d))

    def target(self, t: float):
        s = self.potential(t)
        n = 0
        while self.d ** n * s < ray_config["boettcher_level"]:
            n += 1
        turns = float((self.theta * self.d ** n) % 1)
        w = cmath.exp(self.d ** n * s + 2j * math.pi * turns) - self.shift
        return n, w

    def seed(self, t: float) -> complex:
        return cmath.exp(self.potential(t) + 2j * math.pi * float(self.theta)) - self.shift

    def solve(self, t: float, seed: complex) -> complex:
        n, w = self.target(t)
        if n == 0:
            return w
        return local_inverse(self.iterate(n), w, seed)


def _advance(solver: _BoettcherSolver, t_from: float, z_from: complex, t_to: float, speed: float):
    """point at t_to continued from (t_from, z_from), halving the step on failure or on a jump"""
    try:
        z = solver.solve(t_to, z_from)
        jump = speed > 0 and abs(z - z_from) > ray_config["jump_factor"] * speed * abs(t_from - t_to) \
            and abs(z - z_from) > ray_config["jump_floor"]
    except (NoConvergenceError, CriticalPointError):
        jump = True
        z = None
    if not jump:
        return z
    half = (t_from - t_to) / 2
    if half < ray_config["min_dt"]:
        raise NoConvergenceError(f"Boettcher continuation failed near t = {t_to} even at step {2 * half}")
    t_mid = t_from - half
    z_mid = _advance(solver, t_from, z_from, t_mid, speed)
    return _advance(solver, t_mid, z_mid, t_to, abs(z_mid - z_from) / half)


def _nearest(z: complex, candidates: Sequence[complex]):
    distances = [abs(z - c) for c in candidates]
    k = int(np.argmin(distances))
    return complex(candidates[k]), distances[k]


def _window_lands(points: Sequence[complex], candidate: complex, tol: float) -> bool:
    window = ray_config["landing_window"]
    if len(points) < window:
        return False
    distances = [abs(z - candidate) for z in points[-window:]]
    return max(distances) < tol and all(b <= a for a, b in zip(distances[:-1], distances[1:]))


def trace_ray(P: AnalyticMap, theta: Union[Fraction, str, float], q: int, t_min: float, dt: float = None,
              candidates: Sequence[complex] = None, landing_tol: float = 1e-6, strict: bool = False) -> RayTail:
    """
    external ray of angle theta of the monic polynomial P sampled at t = 0, -dt, ..., t_min.
    samples with t >= -1 come from the Boettcher coordinate; deeper samples are pulled back by the
    branch of P^{-q} that follows the ray, so P^q(z(t)) = z(t + 1) holds by construction.
    with candidates the trace stops once the last samples have settled on one of them.
    """
    coefficients = _require_polynomial(P)
    if coefficients[-1] != 1:
        raise PreconditionError("ray tracing needs a monic polynomial")
    d = len(coefficients) - 1
    theta = _check_angle(Fraction(theta), d, q)
    dt = ray_config["dt"] if dt is None else dt
    if not (t_min < 0):
        raise PreconditionError("t_min must be negative")
    steps_per_unit = round(1 / dt)
    if dt > ray_config["max_dt"] or abs(steps_per_unit * dt - 1) > 1e-12:
        raise PreconditionError(f"dt must be 1/N with dt <= {ray_config['max_dt']}")
    candidates = list(candidates) if candidates else []

    solver = _BoettcherSolver(P, theta, q)
    k_start = math.ceil(math.log(ray_config["start_potential"]) / (q * math.log(d)) / dt)
    t, z, speed = k_start * dt, solver.seed(k_start * dt), 0.0
    times: List[float] = []
    points: List[complex] = []
    termination = TERMINATION.POTENTIAL_FLOOR
    k_last = math.floor(-t_min / dt + 1e-9)

    try:
        # Boettcher stage down to t = -1
        for k in range(k_start - 1, -min(steps_per_unit, k_last) - 1, -1):
            t_next = k * dt
            z_next = _advance(solver, t, z, t_next, speed)
            speed = abs(z_next - z) / dt
            t, z = t_next, z_next
            if k <= 0:
                times.append(t)
                points.append(z)
    except (NoConvergenceError, CriticalPointError) as e:
        termination = TERMINATION.NEWTON_DIVERGENCE
        logger.info(f"ray {theta} of {P!r}: Boettcher stage stopped at t = {t}: {e}")

    pull_back = AnalyticMap.iterate(P, q, validity_radius=math.inf) if q > 1 else \
        AnalyticMap.polynomial(P.coefficients, validity_radius=math.inf)
    landing = None
    if termination == TERMINATION.POTENTIAL_FLOOR:
        for k in range(len(points), k_last + 1):
            try:
                z_next = local_inverse(pull_back, points[k - steps_per_unit], seed=points[k - 1])
            except (NoConvergenceError, CriticalPointError) as e:
                termination = TERMINATION.NEWTON_DIVERGENCE
                logger.info(f"ray {theta} of {P!r}: pull-back stopped at t = {-k * dt}: {e}")
                break
            step, previous = abs(z_next - points[-1]), abs(points[-1] - points[-2])
            if step > ray_config["jump_factor"] * previous and step > ray_config["jump_floor"]:
                termination = TERMINATION.BRANCH_JUMP
                logger.info(f"ray {theta} of {P!r}: branch jump at t = {-k * dt}")
                break
            times.append(-k * dt)
            points.append(z_next)
            if candidates:
                candidate, _ = _nearest(z_next, candidates)
                if _window_lands(points, candidate, landing_tol):
                    landing = candidate
                    termination = TERMINATION.LANDED
                    break

    if not points:
        raise EmptyRayError(f"ray {theta} of {P!r} has no samples")
    if strict and termination in (TERMINATION.NEWTON_DIVERGENCE, TERMINATION.BRANCH_JUMP):
        raise NoConvergenceError(f"ray {theta} of {P!r} terminated early ({termination}) at t = {times[-1]}")
    if strict and candidates and landing is None:
        raise PotentialFloorError(f"ray {theta} of {P!r} reached t = {times[-1]} without landing")
    logger.info(f"ray {theta} of {P!r}: {len(points)} samples, {termination}")
    return RayTail(
        angle=theta,
        degree=d,
        period=q,
        dt=dt,
        times=tuple(times),
        points=tuple(points),
        landing=landing,
        log_potential_floor=times[-1] * q * math.log(d),
        termination=termination,
    )


def landing_point(ray: RayTail, candidates: Sequence[complex], tol: float) -> Optional[complex]:
    """
    the candidate nearest the deepest sample, if the last 8 samples lie within tol of it at
    non-increasing distances
    """
    if not candidates or not ray.points:
        return None
    candidate, _ = _nearest(ray.points[-1], candidates)
    return candidate if _window_lands(ray.points, candidate, tol) else None


def _plane(points: np.ndarray) -> np.ndarray:
    return np.column_stack([points.real, points.imag])


def hausdorff_distance(a: RayTail, b: RayTail) -> float:
    """symmetric Hausdorff distance between the sample clouds, landing points included"""
    first, second = a.cloud(), b.cloud()
    if len(first) == 0 or len(second) == 0:
        raise EmptyRayError("hausdorff distance needs two non-empty rays")
    first, second = _plane(first), _plane(second)
    return max(directed_hausdorff(first, second)[0], directed_hausdorff(second, first)[0])


def _extended(ray: RayTail, length: int) -> np.ndarray:
    """samples padded with the landing point past the end of a landed ray"""
    points = ray.as_array()
    if len(points) >= length or ray.landing is None:
        return points[:length]
    return np.concatenate([points, np.full(length - len(points), ray.landing, dtype=complex)])


def uniform_parameter_distance(a: RayTail, b: RayTail) -> float:
    """max over shared t of |z_a(t) - z_b(t)|, a landed ray standing at its landing point beyond its last sample"""
    if not len(a) or not len(b):
        raise EmptyRayError("uniform distance needs two non-empty rays")
    if abs(a.dt - b.dt) > 1e-15 or a.times[0] != b.times[0]:
        raise GridMismatchError(f"rays sampled with steps {a.dt} and {b.dt}")
    length = max(len(a), len(b))
    if a.landing is None:
        length = min(length, len(a))
    if b.landing is None:
        length = min(length, len(b))
    distance = float(np.max(np.abs(_extended(a, length) - _extended(b, length))))
    if a.landing is not None and b.landing is not None:
        distance = max(distance, abs(a.landing - b.landing))
    return distance


def _circle_crossing(outside: complex, inside: complex, center: complex, r: float) -> complex:
    """point of the segment [outside, inside] on the circle |z - center| = r"""
    a, b = outside - center, inside - outside
    # |a + s b|^2 = r^2
    qa = abs(b) ** 2
    qb = 2 * (a.conjugate() * b).real
    qc = abs(a) ** 2 - r ** 2
    s = (-qb - math.sqrt(max(qb * qb - 4 * qa * qc, 0.0))) / (2 * qa)
    return outside + min(max(s, 0.0), 1.0) * b


def _first_passage(points: Sequence[complex], center: complex, r: float) -> Optional[tuple]:
    inside = [abs(z - center) < r for z in points]
    for k in range(1, len(points)):
        if inside[k] and not inside[k - 1]:
            for j in range(k, len(points)):
                if not inside[j]:
                    return k, j
            return k, None
    return None


def detect_gate_crossing(ray: RayTail, fixed_points: Sequence[complex], r: float, center: complex = 0j) -> bool:
    """
    whether the arc of the ray inside D(center, r) separates the fixed points of that closed disk.
    the arc is closed by radial segments out to radius 2r and an arc of that radius, and the fixed points
    are sorted by which side of the closed curve they fall on
    """
    center = complex(center)
    if ray.landing is not None and abs(ray.landing - center) < r:
        raise RayLandsInsideError(f"the ray lands at {ray.landing} inside D({center}, {r})")
    passage = _first_passage(ray.points, center, r)
    if passage is None:
        return False
    k_in, k_out = passage
    if k_out is None:
        raise RayLandsInsideError(f"the ray ends inside D({center}, {r}) without exiting")

    entry = _circle_crossing(ray.points[k_in - 1], ray.points[k_in], center, r)
    exit_ = _circle_crossing(ray.points[k_out], ray.points[k_out - 1], center, r)
    a_in, a_out = cmath.phase(entry - center), cmath.phase(exit_ - center)
    sweep = (a_in - a_out) % (2 * math.pi)
    arc = center + 2 * r * np.exp(1j * (a_out + sweep * np.linspace(0, 1, 65)))
    boundary = np.concatenate([[entry], ray.points[k_in:k_out], [exit_], arc, [entry]])
    region = Path(_plane(np.asarray(boundary, dtype=complex)), closed=True)

    enclosed = [p for p in fixed_points if abs(complex(p) - center) <= r * (1 + 1e-9)]
    sides = {bool(region.contains_point((complex(p).real, complex(p).imag))) for p in enclosed}
    logger.debug(f"gate test: {len(enclosed)} fixed points, sides {sides}")
    return len(sides) == 2
