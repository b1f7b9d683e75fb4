import cmath
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence, Union

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import polynomial as P

from src.errors import (
    CriticalPointError,
    DomainExceededError,
    NoConvergenceError,
    NonFiniteError,
    OrbitEscapedError,
    QuadratureError,
)
from src.utils import get_logger

logger = get_logger(__name__)

newton_config = {
    "tolerance": 1e-12,
    "max_iterations": 64,
    "critical_threshold": 1e-10,
}

cauchy_config = {
    "radius_cap": 0.1,
    "initial_nodes": 32,
    "max_nodes": 2 ** 16,
    "tolerance": 1e-10,
}

ComplexLike = Union[complex, float, np.ndarray]


def horner(coefficients: Sequence[complex], z: complex) -> complex:
    """value of the ascending coefficient list at a scalar z"""
    acc = 0j
    for c in reversed(coefficients):
        acc = acc * z + c
    return acc


def horner_with_derivative(coefficients: Sequence[complex], z: complex):
    value = 0j
    slope = 0j
    for c in reversed(coefficients):
        slope = slope * z + value
        value = value * z + c
    return value, slope


@dataclass(frozen=True)
class AnalyticMap:
    """
    class that represents a holomorphic map on the disk D(0, validity_radius).

    the map is either a polynomial, given by its ascending coefficient list, or a q-fold
    composition of another AnalyticMap. instances are immutable and hashable.
    """
    kind: str
    validity_radius: float
    coefficients: tuple = ()
    base: "AnalyticMap" = None
    power: int = 1
    name: str = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("polynomial", "iterate"):
            raise ValueError(f"unknown map kind {self.kind!r}")
        if not (self.validity_radius > 0):
            raise ValueError("validity_radius must be positive")
        if self.kind == "polynomial":
            if len(self.coefficients) == 0:
                raise ValueError("polynomial needs at least one coefficient")
            if self.coefficients[-1] == 0:
                raise ValueError("leading coefficient must be nonzero")
            if not all(cmath.isfinite(c) for c in self.coefficients):
                raise NonFiniteError("polynomial coefficients must be finite")
        else:
            if not isinstance(self.base, AnalyticMap):
                raise TypeError("iterate needs an AnalyticMap base")
            if not isinstance(self.power, (int, np.integer)) or self.power < 1:
                raise ValueError("iterate power must be a positive integer")

    @classmethod
    def polynomial(cls, coefficients: Sequence[complex], validity_radius: float = 1.0, name: str = None):
        coefficients = [complex(c) for c in coefficients]
        while len(coefficients) > 1 and coefficients[-1] == 0:
            coefficients.pop()
        return cls(kind="polynomial", validity_radius=float(validity_radius),
                   coefficients=tuple(coefficients), name=name)

    @classmethod
    def iterate(cls, base: "AnalyticMap", power: int, validity_radius: float = None, name: str = None):
        if validity_radius is None:
            validity_radius = base.validity_radius
        return cls(kind="iterate", validity_radius=float(validity_radius), base=base, power=int(power), name=name)

    def __call__(self, z):
        return evaluate(self, z)

    def __repr__(self):
        if self.name:
            return f"AnalyticMap({self.name})"
        if self.kind == "polynomial":
            return f"AnalyticMap(poly{list(self.coefficients)}, r0={self.validity_radius})"
        return f"AnalyticMap({self.base!r}^{self.power}, r0={self.validity_radius})"

    @property
    def root(self) -> "AnalyticMap":
        """the polynomial at the bottom of a chain of iterates"""
        m = self
        while m.kind == "iterate":
            m = m.base
        return m

    @property
    def total_power(self) -> int:
        m, q = self, 1
        while m.kind == "iterate":
            q *= m.power
            m = m.base
        return q

    @property
    def degree(self) -> int:
        return len(self.expanded) - 1

    @cached_property
    def expanded(self) -> np.ndarray:
        """ascending coefficients of the fully composed polynomial"""
        if self.kind == "polynomial":
            return np.array(self.coefficients, dtype=complex)
        inner = Polynomial(self.base.expanded)
        composed = inner
        for _ in range(self.power - 1):
            composed = inner(composed)
        return np.asarray(composed.coef, dtype=complex)

    @cached_property
    def delta(self) -> np.ndarray:
        """ascending coefficients of f(z) - z"""
        coefficients = np.zeros(max(len(self.expanded), 2), dtype=complex)
        coefficients[:len(self.expanded)] = self.expanded
        coefficients[1] -= 1
        return P.polytrim(coefficients) if np.any(coefficients) else np.zeros(1, dtype=complex)

    @cached_property
    def _derivative_coefficients(self) -> tuple:
        if self.kind != "polynomial":
            raise TypeError("derivative coefficients only exist for polynomial kind")
        d = P.polyder(np.array(self.coefficients, dtype=complex))
        return tuple(complex(c) for c in d)

    def value(self, z: complex) -> complex:
        """unchecked scalar evaluation"""
        if self.kind == "polynomial":
            return horner(self.coefficients, z)
        for _ in range(self.power):
            z = self.base.value(z)
        return z

    def value_and_derivative(self, z: complex):
        """unchecked scalar evaluation of (f(z), f'(z))"""
        if self.kind == "polynomial":
            return horner_with_derivative(self.coefficients, z)
        slope = 1 + 0j
        for _ in range(self.power):
            z, d = self.base.value_and_derivative(z)
            slope *= d
        return z, slope

    def with_linear_factor(self, factor: complex, name: str = None) -> "AnalyticMap":
        """
        same shape of map with the linear coefficient of the innermost polynomial multiplied by factor;
        used to build multiplier families g_n from a limit map g
        """
        if self.kind == "polynomial":
            coefficients = list(self.coefficients) + [0j] * max(0, 2 - len(self.coefficients))
            coefficients[1] *= factor
            return AnalyticMap.polynomial(coefficients, self.validity_radius, name=name)
        return AnalyticMap.iterate(self.base.with_linear_factor(factor), self.power, self.validity_radius, name=name)


def _check_domain(radius: float, z, error=DomainExceededError):
    magnitude = np.max(np.abs(z)) if isinstance(z, np.ndarray) else abs(z)
    if magnitude > radius * (1 + 1e-12):
        raise error(f"|z| = {magnitude:.6g} exceeds validity radius {radius:.6g}")


def _finite(value, what: str):
    ok = np.all(np.isfinite(value)) if isinstance(value, np.ndarray) else cmath.isfinite(value)
    if not ok:
        raise NonFiniteError(f"non-finite {what}")
    return value


def evaluate(f: AnalyticMap, z: ComplexLike) -> ComplexLike:
    """
    value of the map at z (scalar or array); iterates evaluate the base repeatedly
    """
    _check_domain(f.validity_radius, z)
    if isinstance(z, np.ndarray):
        if f.kind == "polynomial":
            return _finite(P.polyval(z, np.array(f.coefficients)), "map value")
        w = z
        for _ in range(f.power):
            w = evaluate(f.base, w)
        return w
    z = complex(z)
    if f.kind == "polynomial":
        return _finite(horner(f.coefficients, z), "map value")
    for _ in range(f.power):
        z = evaluate(f.base, z)
    return z


def derivative(f: AnalyticMap, z: ComplexLike) -> ComplexLike:
    _check_domain(f.validity_radius, z)
    if isinstance(z, np.ndarray):
        if f.kind == "polynomial":
            return _finite(P.polyval(z, np.array(f._derivative_coefficients)), "derivative")
        slope = np.ones_like(z, dtype=complex)
        w = z
        for _ in range(f.power):
            slope = slope * derivative(f.base, w)
            w = evaluate(f.base, w)
        return slope
    z = complex(z)
    if f.kind == "polynomial":
        return _finite(horner(f._derivative_coefficients, z), "derivative")
    slope = 1 + 0j
    for _ in range(f.power):
        slope *= derivative(f.base, z)
        z = evaluate(f.base, z)
    return _finite(slope, "derivative")


def local_inverse(f: AnalyticMap, w: complex, seed: complex, tolerance: float = None,
                  max_iterations: int = None) -> complex:
    """
    the preimage of w under f on the branch selected by seed, by Newton iteration
    """
    tolerance = newton_config["tolerance"] if tolerance is None else tolerance
    max_iterations = newton_config["max_iterations"] if max_iterations is None else max_iterations
    z = complex(seed)
    w = complex(w)
    for _ in range(max_iterations):
        value, slope = f.value_and_derivative(z)
        if not (cmath.isfinite(value) and cmath.isfinite(slope)):
            raise NoConvergenceError(f"Newton iterate for f(z) = {w} left the finite plane")
        if abs(slope) < newton_config["critical_threshold"]:
            raise CriticalPointError(f"|f'| = {abs(slope):.3g} near {z}: critical point nearby")
        step = (value - w) / slope
        z -= step
        if abs(step) <= tolerance * max(1.0, abs(z)):
            if abs(z) > f.validity_radius * (1 + 1e-12):
                raise NoConvergenceError(f"preimage {z} lies outside the validity disk")
            return z
    raise NoConvergenceError(f"Newton for f(z) = {w} from seed {seed} did not converge in {max_iterations} steps")


def iterate_orbit(f: AnalyticMap, z: complex, k: int) -> list:
    """[z, f(z), ..., f^k(z)]; negative k walks backwards through local inverses"""
    orbit = [complex(z)]
    try:
        _check_domain(f.validity_radius, z, OrbitEscapedError)
        for _ in range(abs(k)):
            current = orbit[-1]
            if k >= 0:
                nxt = evaluate(f, current)
            else:
                nxt = local_inverse(f, current, seed=current)
            _check_domain(f.validity_radius, nxt, OrbitEscapedError)
            orbit.append(nxt)
    except DomainExceededError as e:
        raise OrbitEscapedError(str(e)) from e
    return orbit


def taylor_coefficients(f: AnalyticMap, center: complex, n: int) -> list:
    """
    first n+1 Taylor coefficients at center: exact shift for polynomials, Cauchy integrals for iterates
    """
    center = complex(center)
    _check_domain(f.validity_radius, center)
    if f.kind == "polynomial":
        coefficients = np.array(f.coefficients, dtype=complex)
        if center != 0:
            coefficients = Polynomial(coefficients)(Polynomial([center, 1])).coef
        out = np.zeros(n + 1, dtype=complex)
        m = min(n + 1, len(coefficients))
        out[:m] = coefficients[:m]
        return [complex(c) for c in out]
    return _cauchy_coefficients(f, center, n)


def _cauchy_coefficients(f: AnalyticMap, center: complex, n: int) -> list:
    radius = min(f.validity_radius / 4, cauchy_config["radius_cap"])
    radius = min(radius, (f.validity_radius - abs(center)) / 2)
    if radius <= 0:
        raise DomainExceededError("center too close to the validity boundary for a Cauchy contour")
    nodes = max(cauchy_config["initial_nodes"], 2 * (n + 1))
    previous = None
    scale = radius ** np.arange(n + 1)
    while nodes <= cauchy_config["max_nodes"]:
        theta = 2 * np.pi * np.arange(nodes) / nodes
        values = evaluate(f, center + radius * np.exp(1j * theta))
        current = (np.fft.fft(values) / nodes)[:n + 1] / scale
        if previous is not None:
            gap = np.max(np.abs(current - previous) * scale)
            if gap <= cauchy_config["tolerance"] * max(1.0, np.max(np.abs(current) * scale)):
                return [complex(c) for c in current]
        previous = current
        nodes *= 2
    raise QuadratureError(f"Cauchy coefficients at {center} did not converge with {cauchy_config['max_nodes']} nodes")
