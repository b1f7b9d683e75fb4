import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.integrate import solve_ivp

from src.errors import (
    BranchCutError,
    NoClosedOrbitError,
    PreconditionError,
    ResidueNotImaginaryError,
)
from src.forms.BaseForm import BaseForm
from src.forms.rectify import PathPolyline
from src.utils import get_logger

logger = get_logger(__name__)

flow_config = {
    "rtol": 1e-9,
    "atol": 1e-12,
    "imaginary_tolerance": 1e-8,
    "period_agreement": 1e-4,
    "section_fraction": 0.5,
    "overrun": 1.5,
    "closure": 1e-3,
    "bisection_width": 1e-4,
    "inner_fraction": 1e-3,
}


class TRAJECTORY_STATUS:
    COMPLETED = "completed"
    EXITED = "exited"
    SINGULAR = "singular"
    CLOSED = "closed"
    OPEN = "open"


@dataclass(frozen=True)
class TrajectorySpec:
    direction: complex = 1 + 0j
    t_max: float = 10.0
    step: float = 0.05
    stop_radius: float = 1e-6

    def __post_init__(self):
        if abs(abs(complex(self.direction)) - 1) > 1e-12:
            raise ValueError("direction must have modulus 1")
        if not (self.t_max > 0):
            raise ValueError("t_max must be positive")
        if not (self.step > 0):
            raise ValueError("step must be positive")
        if self.stop_radius < 0:
            raise ValueError("stop_radius must be non-negative")


@dataclass(frozen=True)
class Trajectory(PathPolyline):
    """a solution curve of dz/dt = alpha chi(z) at the accepted integrator steps"""
    times: tuple = ()
    status: str = TRAJECTORY_STATUS.COMPLETED

    def __post_init__(self):
        super().__post_init__()
        if len(self.times) != len(self.vertices):
            raise ValueError("a trajectory needs one time per vertex")

    @property
    def duration(self) -> float:
        return self.times[-1] - self.times[0]

    @property
    def closure_gap(self) -> float:
        return abs(self.end - self.start)


def _rhs(form: BaseForm, direction: complex):
    def rhs(_, y):
        return direction * form.field(y)
    return rhs


def _exit_event(radius: float):
    def event(_, y):
        return radius - abs(y[0])
    event.terminal = True
    return event


def _singular_event(form: BaseForm, stop_radius: float):
    def event(_, y):
        return min(abs(y[0] - p) for p in form.poles) - stop_radius if form.poles else 1.0
    event.terminal = True
    return event


def _as_trajectory(solution, z0: complex, status: str) -> Trajectory:
    times = tuple(float(t) for t in solution.t)
    points = tuple(complex(z) for z in solution.y[0])
    if len(points) < 2:
        times = (0.0, 0.0)
        points = (complex(z0), complex(z0))
    return Trajectory(vertices=points, times=times, status=status)


def trajectory(form: BaseForm, z0: complex, spec: TrajectorySpec, disk_radius: float = None) -> Trajectory:
    """
    dz/dt = alpha chi(z) from z0 by adaptive Runge-Kutta 4(5) until t_max, until the path leaves
    D(0, disk_radius), or until it comes within stop_radius of a singular point
    """
    z0 = complex(z0)
    form.check_domain(z0)
    _, distance = form.nearest_pole(z0)
    if distance == 0:
        raise PreconditionError(f"{z0} is a singular point of the field")
    disk_radius = form.validity_radius if disk_radius is None else disk_radius

    events = [_singular_event(form, spec.stop_radius)]
    if math.isfinite(disk_radius):
        events.append(_exit_event(disk_radius))
    solution = solve_ivp(_rhs(form, complex(spec.direction)), (0.0, spec.t_max), np.array([z0]),
                         method="RK45", rtol=flow_config["rtol"], atol=flow_config["atol"],
                         max_step=spec.step, events=events)
    if solution.status == -1:
        logger.debug(f"trajectory from {z0} stopped: {solution.message}")
        status = TRAJECTORY_STATUS.SINGULAR
    elif solution.status == 1:
        status = TRAJECTORY_STATUS.SINGULAR if len(solution.t_events[0]) else TRAJECTORY_STATUS.EXITED
    else:
        status = TRAJECTORY_STATUS.COMPLETED
    return _as_trajectory(solution, z0, status)


def normal_form_phi0(m: int, c: complex, w: complex) -> complex:
    """-1 / ((m - 1) w^{m-1}) + c Log w, the rectifying coordinate of the normal form"""
    if m < 2:
        raise ValueError("m must be at least 2")
    w = complex(w)
    if w == 0:
        raise PreconditionError("phi_0 is singular at w = 0")
    c = complex(c)
    value = -1 / ((m - 1) * w ** (m - 1))
    if c != 0:
        if w.imag == 0 and w.real < 0:
            raise BranchCutError(f"w = {w} lies on the branch cut of Log")
        value += c * cmath.log(w)
    return value


def circle_lift_curvature(form: BaseForm, r: float, theta: float, center: complex = 0j) -> float:
    """
    signed curvature of the lift of the circle |z - center| = r at angle theta:
    Re[1 + (z - c) w'(z) / w(z)] / |(z - c) w(z)|
    """
    z = center + r * cmath.exp(1j * theta)
    omega = form.omega(z)
    slope = form.domega(z)
    w = z - center
    return (1 + w * slope / omega).real / abs(w * omega)


def discrete_curvature(points: Sequence[complex]) -> np.ndarray:
    """signed three-point curvature 2 cross(b - a, c - b) / (|b - a| |c - b| |c - a|) at every interior vertex"""
    points = np.asarray(points, dtype=complex)
    if len(points) < 3:
        raise ValueError("curvature needs at least three points")
    a, b, c = points[:-2], points[1:-1], points[2:]
    first, second = b - a, c - b
    cross = (np.conj(first) * second).imag
    return 2 * cross / (np.abs(first) * np.abs(second) * np.abs(c - a))


def _rotated_residue(form: BaseForm, p: complex, direction: complex) -> complex:
    residue = form.residue(p) / complex(direction)
    if abs(residue.real) > flow_config["imaginary_tolerance"] * max(1.0, abs(residue)):
        raise ResidueNotImaginaryError(f"res(w / alpha, {p}) = {residue} is not purely imaginary")
    return residue


def canonical_loop(form: BaseForm, p: complex, z0: complex, direction: complex = 1 + 0j,
                   disk_radius: float = None, period: float = None) -> Trajectory:
    """
    the trajectory of alpha chi from z0 up to its first return to the ray from p through z0, found as a
    crossing of the section Im((z - p) e^{-i psi}) = 0 with Re > 0 after half the expected period
    """
    p, z0 = complex(p), complex(z0)
    if z0 == p:
        raise PreconditionError("the loop must start away from its center")
    if period is None:
        period = closed_orbit_period(form, p, direction)
    disk_radius = form.validity_radius if disk_radius is None else disk_radius
    rotation = cmath.exp(-1j * cmath.phase(z0 - p))

    def section(_, y):
        return ((y[0] - p) * rotation).imag

    events = [section]
    if math.isfinite(disk_radius):
        events.append(_exit_event(disk_radius))
    solution = solve_ivp(_rhs(form, complex(direction)), (0.0, flow_config["overrun"] * period), np.array([z0]),
                         method="RK45", rtol=flow_config["rtol"], atol=flow_config["atol"],
                         max_step=period / 64, events=events)
    if solution.status == 1 and len(events) > 1 and len(solution.t_events[1]):
        return _as_trajectory(solution, z0, TRAJECTORY_STATUS.EXITED)

    for t_cross, y_cross in zip(solution.t_events[0], solution.y_events[0]):
        if t_cross > flow_config["section_fraction"] * period and ((y_cross[0] - p) * rotation).real > 0:
            keep = solution.t < t_cross
            times = tuple(float(t) for t in solution.t[keep]) + (float(t_cross),)
            points = tuple(complex(z) for z in solution.y[0][keep]) + (complex(y_cross[0]),)
            return Trajectory(vertices=points, times=times, status=TRAJECTORY_STATUS.CLOSED)
    return _as_trajectory(solution, z0, TRAJECTORY_STATUS.OPEN)


def closed_orbit_period(form: BaseForm, p: complex, direction: complex = 1 + 0j,
                        cross_check_radius: float = None) -> float:
    """
    period |2 pi i res(w / alpha, p)| of the closed trajectories of alpha chi about p, from the residue alone.
    the cross-check is opt-in: only when cross_check_radius is given is the period also measured on the loop
    through p + cross_check_radius, with NoClosedOrbitError if that loop does not close or its return time
    differs by more than period_agreement.
    """
    period = abs(2j * math.pi * _rotated_residue(form, p, direction))
    if cross_check_radius is not None:
        loop = canonical_loop(form, p, complex(p) + cross_check_radius, direction, period=period)
        if loop.status != TRAJECTORY_STATUS.CLOSED:
            raise NoClosedOrbitError(f"the trajectory through {complex(p) + cross_check_radius} does not close")
        if abs(loop.duration - period) > flow_config["period_agreement"] * period:
            raise NoClosedOrbitError(f"measured return time {loop.duration} disagrees with the period {period}")
    return period


def _closes(form: BaseForm, p: complex, rho: float, psi: float, direction: complex, disk_radius: float,
            period: float) -> bool:
    start = p + rho * cmath.exp(1j * psi)
    if abs(start) >= disk_radius:
        return False
    loop = canonical_loop(form, p, start, direction, disk_radius, period)
    tolerance = flow_config["closure"] * max(rho, 1e-3)
    return loop.status == TRAJECTORY_STATUS.CLOSED and loop.closure_gap <= tolerance


def canonical_neighborhood_radius(form: BaseForm, p: complex, direction: complex, disk_radius: float,
                                  angle: float = 0.0) -> float:
    """
    largest starting distance rho (to 1e-4) along the ray from p at the given angle whose trajectory of
    alpha chi closes up without leaving D(0, disk_radius); a lower estimate of the reach of the canonical
    neighborhood of p
    """
    p = complex(p)
    period = closed_orbit_period(form, p, direction)
    hi = disk_radius - abs(p)
    lo = flow_config["inner_fraction"] * disk_radius
    if hi <= lo or not _closes(form, p, lo, angle, direction, disk_radius, period):
        raise NoClosedOrbitError(f"no closed trajectory found about {p}")
    while hi - lo > flow_config["bisection_width"]:
        mid = (lo + hi) / 2
        if _closes(form, p, mid, angle, direction, disk_radius, period):
            lo = mid
        else:
            hi = mid
    logger.info(f"canonical neighborhood of {p} reaches {lo:.5g}")
    return lo


def min_polyline_distance(a: PathPolyline, b: PathPolyline) -> float:
    """smallest vertex-to-vertex distance between two polylines"""
    first, second = a.as_array(), b.as_array()
    return float(np.min(np.abs(first[:, None] - second[None, :])))


def trajectory_frame(path: Trajectory) -> pd.DataFrame:
    points = path.as_array()
    return pd.DataFrame({"t": path.times, "re": points.real, "im": points.imag})
