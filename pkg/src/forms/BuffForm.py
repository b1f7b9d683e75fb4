import math
from typing import Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from src.dynamics.AnalyticMap import AnalyticMap, evaluate, local_inverse
from src.dynamics.FixedPoints import FixedPointRecord, find_fixed_points
from src.errors import (
    BranchCutError,
    ContourConflictError,
    PositivityError,
    PreconditionError,
    QuadratureError,
)
from src.forms.BaseForm import BaseForm, segment_distance
from src.quadrature import GL_NODES, GL_WEIGHTS, adaptive_gauss_legendre, contour_mean
from src.utils import get_logger, log1p_complex

logger = get_logger(__name__)

buff_config = {
    "pole_guard_fraction": 1e-4,
    "series_threshold": 1e-2,
    "inverse_iterations": 40,
    "panel_tolerance": 1e-10,
    "max_panel_doublings": 6,
}

# Gregory coefficients: x / Log(1 + x) = sum G_k x^k
GREGORY = np.array([1, 1 / 2, -1 / 12, 1 / 24, -19 / 720, 3 / 160, -863 / 60480, 275 / 24192])


def _as_array(x):
    return np.asarray(x, dtype=complex)


def h_parts(x):
    """
    (h, h - 1) for h(x) = x / Log(1 + x) with h(0) = 1, accurate for small |x|
    """
    x = _as_array(x)
    small = np.abs(x) < buff_config["series_threshold"]
    tail = P.polyval(x, np.concatenate(([0], GREGORY[1:])))
    safe = np.where(small, 0.5, x)
    with np.errstate(all="ignore"):
        direct = safe / np.log(1 + safe)
    h = np.where(small, 1 + tail, direct)
    hm1 = np.where(small, tail, direct - 1)
    return h, hm1


def h_slope(x):
    """h'(x)"""
    x = _as_array(x)
    small = np.abs(x) < buff_config["series_threshold"]
    series = P.polyval(x, GREGORY[1:] * np.arange(1, len(GREGORY)))
    safe = np.where(small, 0.5, x)
    with np.errstate(all="ignore"):
        log = np.log(1 + safe)
        direct = 1 / log - safe / (log ** 2 * (1 + safe))
    return np.where(small, series, direct)


def _scalar(value, like):
    return value if isinstance(like, np.ndarray) else complex(value)


class BuffForm(BaseForm):
    """
    class that represents the Buff form w_f = (f' - 1) / ((f - z) Log f') dz of a map f and its
    dual vector field chi_f.

    evaluation goes through w = h(D') / D with D = f - z and h(x) = x / Log(1 + x), which removes
    the cancellation in f' - 1 and in Log f' near fixed points.
    """

    def __init__(self, f: AnalyticMap, pole_guard: float = None, fixed_points: Sequence[FixedPointRecord] = None):
        if not isinstance(f, AnalyticMap):
            raise TypeError("BuffForm needs an AnalyticMap")
        self.map = f
        self.validity_radius = f.validity_radius
        self.pole_guard = buff_config["pole_guard_fraction"] * f.validity_radius if pole_guard is None else pole_guard
        if fixed_points is None:
            fixed_points = find_fixed_points(f, f.validity_radius)
        self.fixed_points: Tuple[FixedPointRecord, ...] = tuple(fixed_points)

        self._delta = f.delta
        self._delta_slope = P.polyder(self._delta)
        self._delta_curve = P.polyder(self._delta_slope)
        # Taylor coefficient polynomials: c_k(z) = D^(k)(z) / k!
        degree = len(self._delta) - 1
        self._taylor = [P.polyder(self._delta, k) / math.factorial(k) for k in range(1, degree + 1)]
        logger.debug(f"Buff form of {f!r} with poles {self.poles}")

    def __repr__(self):
        return f"BuffForm({self.map!r})"

    @property
    def poles(self) -> Tuple[complex, ...]:
        return tuple(r.location for r in self.fixed_points)

    def record(self, p: complex) -> FixedPointRecord:
        pole = self.match_pole(p)
        return next(r for r in self.fixed_points if r.location == pole)

    # pieces of f - z
    def delta(self, z):
        return P.polyval(z, self._delta)

    def delta_slope(self, z):
        return P.polyval(z, self._delta_slope)

    def _check_positive(self, slope):
        derivative = 1 + np.atleast_1d(slope)
        bad = derivative.real <= 0
        if np.any(bad):
            value = derivative[bad][0]
            if value.imag == 0:
                raise BranchCutError(f"f' = {value} lies on the branch cut of Log")
            raise PositivityError(f"Re f' = {value.real:.6g} is not positive")

    def omega(self, z):
        self.check_domain(z)
        self.check_point(z)
        slope = self.delta_slope(z)
        self._check_positive(slope)
        h, _ = h_parts(slope)
        return _scalar(h / self.delta(z), z)

    def chi(self, z):
        self.check_domain(z)
        slope = self.delta_slope(z)
        self._check_positive(slope)
        h, _ = h_parts(slope)
        return _scalar(self.delta(z) / h, z)

    def field(self, z):
        _, hm1 = h_parts(self.delta_slope(z))
        return _scalar(self.delta(z) / (1 + hm1), z)

    def domega(self, z):
        self.check_domain(z)
        self.check_point(z)
        delta = self.delta(z)
        slope = self.delta_slope(z)
        self._check_positive(slope)
        h, _ = h_parts(slope)
        value = h_slope(slope) * P.polyval(z, self._delta_curve) / delta - h * slope / delta ** 2
        return _scalar(value, z)

    def residue(self, p: complex) -> complex:
        return residue_closed_form(self.record(p))

    # deviation integrands, vectorized over points (axis 0) and parameters (axis 1)
    def _taylor_values(self, z: np.ndarray) -> np.ndarray:
        return np.array([P.polyval(z, c) for c in self._taylor]).reshape(len(self._taylor), -1)

    def forward_integrand(self, z, tau):
        """
        D(z) w(z + tau D(z)) - 1 written without cancellation: with r = sum_k c_k tau^k D^(k-1)
        and E = D'(z + tau D), the value is (h(E) - 1 - r) / (1 + r)
        """
        z = np.atleast_1d(_as_array(z))
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        delta0 = self.delta(z)
        coefficients = self._taylor_values(z)
        u = tau[None, :] * delta0[:, None]
        q = np.zeros_like(u)
        for c in coefficients[::-1]:
            q = q * u + c[:, None]
        r = tau[None, :] * q
        slope = self.delta_slope(z[:, None] + u)
        self._check_positive(slope)
        _, hm1 = h_parts(slope)
        return (hm1 - r) / (1 + r)

    def inverse_offset(self, z, seed=None):
        """
        B = f^{-1}(z) - z on the branch near z (or near seed), solved in the form
        D(z) + B + sum_k c_k B^k = 0 to keep relative accuracy
        """
        z = np.atleast_1d(_as_array(z))
        delta0 = self.delta(z)
        coefficients = self._taylor_values(z)
        if seed is None:
            b = -delta0 / (1 + coefficients[0])
        else:
            b = np.atleast_1d(_as_array(seed)) - z
        for _ in range(buff_config["inverse_iterations"]):
            value = np.zeros_like(b)
            slope = np.zeros_like(b)
            for k, c in reversed(list(enumerate(coefficients, start=1))):
                value = value * b + c
                slope = slope * b + k * c
            residual = delta0 + b + b * value
            step = residual / (1 + slope)
            b = b - step
            if np.all(np.abs(step) <= 4e-16 * np.maximum(np.abs(b), 1e-300)):
                break
        return b

    def backward_integrand(self, z, b, tau):
        """
        1 + B w(z + tau B) for B = f^{-1}(z) - z, as (S + h(E) - 1) / (S - 1) with
        S = sum_k c_k B^(k-1) (tau^k - 1)
        """
        z = np.atleast_1d(_as_array(z))
        b = np.atleast_1d(_as_array(b))
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        coefficients = self._taylor_values(z)
        s = np.zeros((len(z), len(tau)), dtype=complex)
        power = np.ones_like(b)
        for k, c in enumerate(coefficients, start=1):
            s = s + (c * power)[:, None] * (tau[None, :] ** k - 1)
            power = power * b
        slope = self.delta_slope(z[:, None] + tau[None, :] * b[:, None])
        self._check_positive(slope)
        _, hm1 = h_parts(slope)
        return (s + hm1) / (s - 1)


def residue_closed_form(record: FixedPointRecord) -> complex:
    """1 / Log f'(p) at a simple fixed point, resit at a multiplier-1 point"""
    if record.multiplicity > 1:
        return record.resit
    lam = record.multiplier
    if lam.imag == 0 and lam.real <= 0:
        raise BranchCutError(f"multiplier {lam} lies on the branch cut of Log")
    if record.multiplier_offset != 0:
        return 1 / log1p_complex(record.multiplier_offset)
    return 1 / np.log(lam)


def residue_numeric(form: BaseForm, p: complex, radius: float) -> complex:
    """(1 / 2 pi i) times the integral of w over |z - p| = radius, trapezoid with node doubling"""
    p = complex(p)
    for other in form.poles:
        if other != p and abs(other - p) > 1e-12 and abs(other - p) < 2 * radius:
            raise ContourConflictError(f"the pole {other} is within {2 * radius:.3g} of {p}")
    return contour_mean(lambda z: form.omega(z) * (z - p), p, radius)


def _deviation_checks(form: BuffForm, z: complex, t: float):
    if not (0 <= t <= 1):
        raise PreconditionError("t must lie in [0, 1]")
    form.check_domain(z)
    form.check_domain(evaluate(form.map, z))


def u_f_t(form: BuffForm, z: complex, t: float) -> complex:
    """
    -t + integral of w over [z, z + t (f(z) - z)], the deviation of the partial lift of the
    segment from a partial unit translation
    """
    z = complex(z)
    _deviation_checks(form, z, t)
    if t == 0:
        return 0j
    delta0 = complex(form.delta(z))
    if delta0 == 0:
        if t == 1:
            return 0j
    else:
        form.check_segment(z, z + t * delta0)
    return adaptive_gauss_legendre(lambda tau: form.forward_integrand(z, tau)[0], 0.0, t)


def u_f(form: BuffForm, z: complex) -> complex:
    """-1 + integral of w over [z, f(z)]; vanishes at the fixed points"""
    return u_f_t(form, z, 1.0)


def inverse_deviation_t(form: BuffForm, z: complex, t: float, seed: complex = None) -> complex:
    """
    t + integral of w over [z, z + t (f^{-1}(z) - z)], the backward analogue of u_f_t
    """
    z = complex(z)
    if not (0 <= t <= 1):
        raise PreconditionError("t must lie in [0, 1]")
    form.check_domain(z)
    if t == 0:
        return 0j
    if seed is not None:
        seed = local_inverse(form.map, z, seed)
    b = complex(form.inverse_offset(z, seed)[0])
    form.check_domain(z + b)
    if b != 0:
        form.check_segment(z, z + t * b)
    return adaptive_gauss_legendre(lambda tau: form.backward_integrand(z, b, tau)[0], 0.0, t)


def _usable_points(form: BuffForm, points: np.ndarray, offsets: np.ndarray, reach: float) -> np.ndarray:
    """points whose segment [z, z + reach * offset] stays in the disk and clear of every pole"""
    usable = np.abs(points + reach * offsets) <= form.validity_radius
    for k, (z, offset) in enumerate(zip(points, offsets)):
        if usable[k] and offset != 0:
            end = z + reach * offset
            usable[k] = all(segment_distance(p, z, end) >= form.pole_guard for p in form.poles)
    return usable


def deviation_table(form: BuffForm, points: np.ndarray, t_values: np.ndarray, direction: str = "forward") -> np.ndarray:
    """
    u_{f,t}(z) (forward) or its inverse analogue (backward) for every point and every t in t_values,
    integrated on Gauss-Legendre panels that are doubled until the table settles.
    points whose segment passes within pole_guard of a pole come back as nan. QuadratureError when the
    table has not settled after max_panel_doublings.
    """
    points = np.atleast_1d(_as_array(points))
    t_values = np.asarray(t_values, dtype=float)
    edges = np.concatenate(([0.0], t_values))
    if np.any(np.diff(edges) <= 0) or edges[-1] > 1:
        raise PreconditionError("t_values must increase within (0, 1]")
    if direction not in ("forward", "backward"):
        raise ValueError(f"unknown direction {direction!r}")

    offsets = form.delta(points) if direction == "forward" else form.inverse_offset(points)
    usable = _usable_points(form, points, offsets, edges[-1])
    table = np.full((len(points), len(t_values)), np.nan, dtype=complex)
    kept, kept_offsets = points[usable], offsets[usable]
    if not len(kept):
        return table

    def integrand(tau):
        if direction == "forward":
            return form.forward_integrand(kept, tau)
        return form.backward_integrand(kept, kept_offsets, tau)

    def panels(split: int) -> np.ndarray:
        fine = np.concatenate([np.linspace(a, b, split + 1)[:-1] for a, b in zip(edges[:-1], edges[1:])]
                              + [edges[-1:]])
        widths = np.diff(fine)
        tau = (fine[:-1, None] + widths[:, None] * GL_NODES[None, :]).ravel()
        values = integrand(tau).reshape(len(kept), len(widths), len(GL_NODES))
        per_panel = np.einsum("npk,k->np", values, GL_WEIGHTS) * widths[None, :]
        return np.cumsum(per_panel.reshape(len(kept), len(t_values), split).sum(axis=2), axis=1)

    current = panels(1)
    for doubling in range(1, buff_config["max_panel_doublings"] + 1):
        refined = panels(2 ** doubling)
        gap = np.max(np.abs(refined - current))
        current = refined
        if gap <= buff_config["panel_tolerance"] * max(1.0, np.max(np.abs(current))):
            break
    else:
        raise QuadratureError(f"deviation table for {form!r} did not settle after {doubling} panel doublings "
                              f"(last change {gap:.3g})")
    table[usable] = current
    logger.debug(f"{direction} deviation table: {int(usable.sum())} of {len(points)} points usable")
    return table
