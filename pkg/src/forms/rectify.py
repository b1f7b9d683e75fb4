import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from src.dynamics.AnalyticMap import AnalyticMap, evaluate, local_inverse
from src.errors import (
    InsufficientDataError,
    PoleProximityError,
    PreconditionError,
    StepConsistencyError,
    WrongCountError,
)
from src.forms.BaseForm import BaseForm
from src.forms.BuffForm import BuffForm, deviation_table, inverse_deviation_t, u_f
from src.quadrature import adaptive_gauss_legendre
from src.utils import get_logger, to_pair

logger = get_logger(__name__)

lift_config = {
    "max_step": 0.1,
    "max_depth": 40,
    "circle_nodes": 256,
    "step_consistency": 1e-6,
}

theorem_a_config = {
    "grid_angles": 24,
    "grid_radii": 12,
    "t_steps": 16,
}


class CONE_SIGNS:
    PLUS = "plus"
    MINUS = "minus"


@dataclass(frozen=True)
class PathPolyline:
    """piecewise-linear path through its vertices; repeated vertices contribute nothing"""
    vertices: tuple

    def __post_init__(self):
        vertices = tuple(complex(v) for v in self.vertices)
        if len(vertices) < 2:
            raise ValueError("a path needs at least two vertices")
        if not all(cmath.isfinite(v) for v in vertices):
            raise ValueError("path vertices must be finite")
        object.__setattr__(self, "vertices", vertices)

    @classmethod
    def segment(cls, a: complex, b: complex) -> "PathPolyline":
        return cls((a, b))

    @classmethod
    def circle(cls, center: complex, radius: float, nodes: int = None, start_angle: float = 0.0,
               turns: int = 1) -> "PathPolyline":
        """closed inscribed polygon of the circle, counterclockwise for positive turns"""
        nodes = lift_config["circle_nodes"] if nodes is None else nodes
        theta = start_angle + 2 * np.pi * turns * np.arange(nodes * abs(turns) + 1) / (nodes * abs(turns))
        points = center + radius * np.exp(1j * theta)
        points[-1] = points[0]
        return cls(tuple(points))

    @classmethod
    def square(cls, center: complex, half_width: float) -> "PathPolyline":
        corners = [1 - 1j, 1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]
        return cls(tuple(center + half_width * c for c in corners))

    def __len__(self):
        return len(self.vertices)

    @property
    def start(self) -> complex:
        return self.vertices[0]

    @property
    def end(self) -> complex:
        return self.vertices[-1]

    def as_array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=complex)


@dataclass(frozen=True)
class LiftedPath:
    """
    a path together with the values of a branch of the primitive Z of w along a refinement of it;
    the branch is fixed by start_value and followed by continuity
    """
    base: PathPolyline
    values: tuple
    start_value: complex

    def __post_init__(self):
        if len(self.values) != len(self.base):
            raise ValueError("a lifted path needs one value per base vertex")

    @property
    def end_value(self) -> complex:
        return self.values[-1]

    @property
    def translation(self) -> complex:
        return self.values[-1] - self.values[0]

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=complex)

    def to_frame(self) -> pd.DataFrame:
        base = self.base.as_array()
        values = self.as_array()
        return pd.DataFrame({
            "t_index": np.arange(len(values)),
            "base_re": base.real,
            "base_im": base.imag,
            "Z_re": values.real,
            "Z_im": values.imag,
        })


@dataclass(frozen=True)
class ConeSpec:
    apex: complex
    epsilon: float
    sign: str = CONE_SIGNS.PLUS

    def __post_init__(self):
        if not (0 < self.epsilon < 1):
            raise ValueError("the cone aperture epsilon must lie in (0, 1)")
        if self.sign not in (CONE_SIGNS.PLUS, CONE_SIGNS.MINUS):
            raise ValueError(f"unknown cone sign {self.sign!r}")


@dataclass
class TheoremAReport:
    epsilon: float
    radius_found: float
    family_index_start: Optional[int]
    grid_size: int
    t_samples: int
    max_ratio: float
    forward_max: float = math.nan
    backward_max: float = math.nan
    deviation_gap: float = math.nan
    fixed_point_count_radius: float = math.nan
    rows: List[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_ratio < self.epsilon

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "radius_found": self.radius_found,
            "family_index_start": self.family_index_start,
            "grid_size": self.grid_size,
            "t_samples": self.t_samples,
            "max_ratio": self.max_ratio,
            "forward_max": self.forward_max,
            "backward_max": self.backward_max,
            "deviation_gap": self.deviation_gap,
            "fixed_point_count_radius": self.fixed_point_count_radius,
            "pass": self.passed,
        }


def _segment_integral(form: BaseForm, a: complex, b: complex) -> complex:
    if a == b:
        return 0j
    form.check_segment(a, b)
    direction = b - a
    return direction * adaptive_gauss_legendre(lambda s: form.omega(a + s * direction), 0.0, 1.0)


def integrate_path(form: BaseForm, path: PathPolyline) -> complex:
    """integral of w along the polyline, segment by segment"""
    form.check_domain(path.as_array())
    form.check_path(path.vertices)
    return sum((_segment_integral(form, a, b) for a, b in zip(path.vertices[:-1], path.vertices[1:])), 0j)


def _refine(form: BaseForm, a: complex, b: complex, depth: int = 0) -> Tuple[List[complex], List[complex]]:
    """interior points and increments of [a, b] with every increment at most max_step"""
    increment = _segment_integral(form, a, b)
    if abs(increment) <= lift_config["max_step"] or depth >= lift_config["max_depth"]:
        return [b], [increment]
    mid = (a + b) / 2
    left_points, left_steps = _refine(form, a, mid, depth + 1)
    right_points, right_steps = _refine(form, mid, b, depth + 1)
    return left_points + right_points, left_steps + right_steps


def lift_path(form: BaseForm, path: PathPolyline, start_value: complex = 0j) -> LiftedPath:
    """
    continuation of Z along the path from start_value; segments are bisected until each step of Z
    is at most 0.1 so the lifted polyline follows the true curve
    """
    form.check_domain(path.as_array())
    form.check_path(path.vertices)
    points = [path.start]
    values = [complex(start_value)]
    for a, b in zip(path.vertices[:-1], path.vertices[1:]):
        if a == b:
            continue
        new_points, steps = _refine(form, a, b)
        for point, step in zip(new_points, steps):
            points.append(point)
            values.append(values[-1] + step)
    if len(points) == 1:
        points.append(points[0])
        values.append(values[0])
    return LiftedPath(base=PathPolyline(tuple(points)), values=tuple(values), start_value=complex(start_value))


def lift_circle(form: BaseForm, center: complex, radius: float, start_value: complex = 0j, nodes: int = None,
                start_angle: float = 0.0) -> LiftedPath:
    """
    Z along the circle itself (not an inscribed polygon), counterclockwise from center + radius e^{i start_angle},
    integrating w(z) dz = w(z) i (z - center) dtheta between nodes
    """
    nodes = lift_config["circle_nodes"] if nodes is None else nodes
    theta = start_angle + 2 * np.pi * np.arange(nodes + 1) / nodes
    points = center + radius * np.exp(1j * theta)
    form.check_domain(points)
    form.check_point(points)
    for pole in form.poles:
        if abs(abs(pole - center) - radius) < form.pole_guard:
            raise PoleProximityError(f"the circle passes within {form.pole_guard:.3g} of the pole {pole}", pole=pole)

    def integrand(s):
        z = center + radius * np.exp(1j * s)
        return form.omega(z) * 1j * (z - center)

    values = [complex(start_value)]
    for lo, hi in zip(theta[:-1], theta[1:]):
        values.append(values[-1] + adaptive_gauss_legendre(integrand, lo, hi))
    points[-1] = points[0]
    return LiftedPath(base=PathPolyline(tuple(points)), values=tuple(values), start_value=complex(start_value))


def monodromy(form: BaseForm, p: complex) -> complex:
    """2 pi i res(w, p), the translation Z picks up once around p"""
    return 2j * np.pi * form.residue(p)


def _require_map(form: BaseForm) -> AnalyticMap:
    if not isinstance(form, BuffForm):
        raise TypeError("the lifted dynamics needs the Buff form of a map")
    return form.map


def lifted_step(form: BuffForm, z: complex, Z: complex) -> Tuple[complex, complex]:
    """(f(z), Z + 1 + u_f(z))"""
    f = _require_map(form)
    z = complex(z)
    if form.delta(z) == 0:
        raise PreconditionError(f"{z} is a fixed point")
    return evaluate(f, z), complex(Z) + 1 + u_f(form, z)


def lifted_step_inverse(form: BuffForm, z: complex, Z: complex, seed: complex) -> Tuple[complex, complex]:
    """
    (f^{-1}(z), Z - 1 + u) with u = 1 + integral of w over [z, f^{-1}(z)]; lifted_step undoes it
    """
    f = _require_map(form)
    z = complex(z)
    z_prev = local_inverse(f, z, seed)
    u = inverse_deviation_t(form, z, 1.0, seed=z_prev)
    return z_prev, complex(Z) - 1 + u


def cone_contains(cone: ConeSpec, point: complex) -> bool:
    """
    Z in the cone {apex + R e^{i theta}: R > 0, |theta| < asin(epsilon)} (plus) or about the direction pi (minus);
    the apex itself is not a member
    """
    offset = complex(point) - complex(cone.apex)
    if offset == 0:
        return False
    if cone.sign == CONE_SIGNS.MINUS:
        offset = -offset
    return abs(cmath.phase(offset)) < math.asin(cone.epsilon)


def polar_grid(radius: float, angles: int = None, radii: int = None) -> np.ndarray:
    """radii x angles points r_j e^{i theta_k} with r_j = radius j / radii, angles offset off the real axis"""
    angles = theorem_a_config["grid_angles"] if angles is None else angles
    radii = theorem_a_config["grid_radii"] if radii is None else radii
    r = radius * np.arange(1, radii + 1) / radii
    theta = 2 * np.pi * (np.arange(angles) + 0.5) / angles
    return (r[:, None] * np.exp(1j * theta)[None, :]).ravel()


def _clear_of_poles(form: BaseForm, points: np.ndarray) -> np.ndarray:
    keep = np.ones(len(points), dtype=bool)
    for p in form.poles:
        keep &= np.abs(points - p) >= form.pole_guard
    return points[keep]


def _ratio_max(table: np.ndarray, t_values: np.ndarray) -> float:
    ratios = np.abs(table) / t_values[None, :]
    if np.all(np.isnan(ratios)):
        return math.nan
    return float(np.nanmax(ratios))


def _member_maxima(form: BuffForm, points: np.ndarray, t_values: np.ndarray) -> Tuple[float, float]:
    clear = _clear_of_poles(form, points)
    forward = _ratio_max(deviation_table(form, clear, t_values, "forward"), t_values)
    backward = _ratio_max(deviation_table(form, clear, t_values, "backward"), t_values)
    return forward, backward


def deviation_gap(limit_form: BuffForm, form: BuffForm, points: np.ndarray, t_values: np.ndarray) -> float:
    """max over the grid of |u_{n,t} - u_t| / t between a family member and its limit"""
    clear = _clear_of_poles(limit_form, _clear_of_poles(form, np.atleast_1d(points)))
    t_values = np.asarray(t_values, dtype=float)
    gap = np.abs(deviation_table(form, clear, t_values) - deviation_table(limit_form, clear, t_values))
    gap = gap / t_values[None, :]
    return math.nan if np.all(np.isnan(gap)) else float(np.nanmax(gap))


def _tail_start(maxima: Sequence[float], epsilon: float) -> Optional[int]:
    """smallest position from which every entry is finite and below epsilon"""
    start = None
    for k in range(len(maxima) - 1, -1, -1):
        if math.isfinite(maxima[k]) and maxima[k] < epsilon:
            start = k
        else:
            break
    return start


def verify_theorem_A(limit_map: AnalyticMap, family: Sequence[AnalyticMap], q: int, epsilon: float,
                     radii: Sequence[float], grid: int = None, t_steps: int = None,
                     grid_radii: int = None, indices: Sequence[int] = None, threads: int = 1,
                     progress: bool = False) -> TheoremAReport:
    """
    sweeps |u_{n,t}(z)| / t and its inverse analogue over a polar grid in D(0, r) and t = k / t_steps.
    radii are tried in descending order; the first radius at which some tail of the family stays below
    epsilon in both directions is reported together with the family index where that tail starts.
    """
    grid = theorem_a_config["grid_angles"] if grid is None else grid
    grid_radii = theorem_a_config["grid_radii"] if grid_radii is None else grid_radii
    t_steps = theorem_a_config["t_steps"] if t_steps is None else t_steps
    if not (0 < epsilon < 1):
        raise PreconditionError("epsilon must lie in (0, 1)")
    if len(family) < 2:
        raise InsufficientDataError("the family needs at least two members")
    if not radii:
        raise PreconditionError("at least one candidate radius is needed")
    indices = list(range(len(family))) if indices is None else list(indices)
    if len(indices) != len(family):
        raise ValueError("indices must label every family member")

    # members are counted over their own validity disks, not over the candidate radii
    forms = [BuffForm(f) for f in family]
    for n, form in zip(indices, forms):
        count = sum(r.multiplicity for r in form.fixed_points)
        if count != q + 1:
            raise WrongCountError(f"family member {n} has {count} fixed points in D(0, {form.validity_radius:g}), "
                                  f"expected {q + 1}")
    limit_form = BuffForm(limit_map)
    t_values = np.arange(1, t_steps + 1) / t_steps

    report = TheoremAReport(epsilon=epsilon, radius_found=0.0, family_index_start=None,
                            grid_size=grid * grid_radii, t_samples=t_steps, max_ratio=math.inf,
                            fixed_point_count_radius=max(f.validity_radius for f in family))
    for radius in sorted(radii, reverse=True):
        points = polar_grid(radius, grid, grid_radii)
        logger.info(f"Theorem A sweep at r = {radius} over {len(forms)} family members")
        with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
            results = list(tqdm(executor.map(lambda form: _member_maxima(form, points, t_values), forms),
                                total=len(forms), disable=not progress, desc=f"r={radius}"))
        maxima = [max(forward, backward) for forward, backward in results]
        for n, (forward, backward) in zip(indices, results):
            report.rows.append({"radius": radius, "n": n, "forward_max": forward, "backward_max": backward})

        start = _tail_start(maxima, epsilon)
        tail = maxima[start:] if start is not None else maxima
        finite = [m for m in tail if math.isfinite(m)]
        tail_max = max(finite) if finite else math.inf
        if start is None:
            report.max_ratio = min(report.max_ratio, tail_max)
            logger.info(f"r = {radius}: no tail of the family stays below {epsilon}")
            continue
        report.radius_found = radius
        report.family_index_start = indices[start]
        report.max_ratio = tail_max
        report.forward_max = max(results[k][0] for k in range(start, len(results)))
        report.backward_max = max(results[k][1] for k in range(start, len(results)))
        report.deviation_gap = deviation_gap(limit_form, forms[-1], points, t_values)
        logger.info(f"r = {radius}: pass from n = {indices[start]} with max ratio {tail_max:.4g}")
        break
    return report


@dataclass(frozen=True)
class InvariantCurveLift:
    lifted: LiftedPath
    steps_per_unit: int
    step_mismatch: float


def lift_invariant_curve(form: BuffForm, points: Sequence[complex], steps_per_unit: int,
                         start_value: complex = 0j) -> InvariantCurveLift:
    """
    lift of a curve sampled at t = 0, -dt, -2 dt, ... with dt = 1 / steps_per_unit and f(z(t)) = z(t + 1).
    the lift must satisfy F^{-1}(Gamma(t)) = Gamma(t - 1); StepConsistencyError when the largest violation
    exceeds the step tolerance.
    """
    points = [complex(z) for z in points]
    if len(points) <= steps_per_unit:
        raise InsufficientDataError("the curve must span more than one unit of t")
    path = PathPolyline(tuple(points))
    form.check_domain(path.as_array())
    form.check_path(path.vertices)
    values = [complex(start_value)]
    for a, b in zip(points[:-1], points[1:]):
        values.append(values[-1] + _segment_integral(form, a, b))
    lifted = LiftedPath(base=path, values=tuple(values), start_value=complex(start_value))

    mismatch = 0.0
    for k in range(len(points) - steps_per_unit):
        _, previous = lifted_step_inverse(form, points[k], values[k], seed=points[k + steps_per_unit])
        mismatch = max(mismatch, abs(previous - values[k + steps_per_unit]))
    if mismatch > lift_config["step_consistency"]:
        raise StepConsistencyError(f"invariant curve lift violates F^-1(Gamma(t)) = Gamma(t-1) by {mismatch:.3g}",
                                   mismatch=mismatch)
    return InvariantCurveLift(lifted=lifted, steps_per_unit=steps_per_unit, step_mismatch=mismatch)


def lifted_path_json(lifted: LiftedPath) -> dict:
    return {
        "start_value": to_pair(lifted.start_value),
        "end_value": to_pair(lifted.end_value),
        "translation": to_pair(lifted.translation),
        "vertices": len(lifted.values),
    }
