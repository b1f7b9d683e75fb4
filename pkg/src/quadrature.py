"""
quadrature rules shared by the fixed-point, form and flow code:
16-node Gauss-Legendre with bisection on real parameter intervals, and
node-doubling trapezoid means on circles.
"""
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from src.errors import QuadratureError

quadrature_config = {
    "nodes": 16,
    "tolerance": 1e-10,
    "max_segments": 2 ** 14,
    "contour_initial_nodes": 32,
    "contour_max_nodes": 2 ** 16,
    "contour_tolerance": 1e-10,
}

_raw_nodes, _raw_weights = leggauss(quadrature_config["nodes"])
# nodes and weights on [0, 1]
GL_NODES = (_raw_nodes + 1) / 2
GL_WEIGHTS = _raw_weights / 2


def gauss_legendre(func: Callable, a: float, b: float) -> complex:
    """fixed 16-node rule; func must accept an array of parameters"""
    width = b - a
    return complex(np.dot(GL_WEIGHTS, func(a + width * GL_NODES)) * width)


def adaptive_gauss_legendre(func: Callable, a: float = 0.0, b: float = 1.0, tolerance: float = None,
                            max_segments: int = None) -> complex:
    """
    integral of func over [a, b]. each interval is bisected until the two-level estimates
    agree to tolerance (scaled by the interval share and the magnitude of the estimate).
    """
    tolerance = quadrature_config["tolerance"] if tolerance is None else tolerance
    max_segments = quadrature_config["max_segments"] if max_segments is None else max_segments
    if a == b:
        return 0j
    span = abs(b - a)
    stack = [(a, b, gauss_legendre(func, a, b))]
    segments = 1
    total = 0j
    while stack:
        lo, hi, whole = stack.pop()
        mid = (lo + hi) / 2
        left = gauss_legendre(func, lo, mid)
        right = gauss_legendre(func, mid, hi)
        refined = left + right
        if not np.isfinite(refined):
            raise QuadratureError(f"non-finite integrand on [{lo}, {hi}]")
        if abs(refined - whole) <= tolerance * max(1.0, abs(refined)) * abs(hi - lo) / span:
            total += refined
            continue
        segments += 1
        if segments > max_segments:
            raise QuadratureError(f"no convergence within {max_segments} sub-segments")
        stack.append((mid, hi, right))
        stack.append((lo, mid, left))
    return total


def contour_mean(func: Callable, center: complex, radius: float, tolerance: float = None,
                 max_nodes: int = None) -> complex:
    """
    mean of func over the circle |z - center| = radius by the trapezoid rule, doubling the
    node count until successive estimates agree. (1/2 pi i) times the contour integral of w(z) dz
    is the mean of w(z) (z - center).
    """
    tolerance = quadrature_config["contour_tolerance"] if tolerance is None else tolerance
    max_nodes = quadrature_config["contour_max_nodes"] if max_nodes is None else max_nodes
    nodes = quadrature_config["contour_initial_nodes"]
    theta = 2 * np.pi * np.arange(nodes) / nodes
    estimate = complex(np.mean(func(center + radius * np.exp(1j * theta))))
    while nodes < max_nodes:
        odd = 2 * np.pi * (np.arange(nodes) + 0.5) / nodes
        refined = (estimate + complex(np.mean(func(center + radius * np.exp(1j * odd))))) / 2
        nodes *= 2
        if not np.isfinite(refined):
            raise QuadratureError(f"non-finite integrand on the circle about {center}")
        if abs(refined - estimate) <= tolerance * max(1.0, abs(refined)):
            return refined
        estimate = refined
    raise QuadratureError(f"trapezoid rule on the circle about {center} did not converge with {max_nodes} nodes")


def winding_number(values: Callable, center: complex, radius: float, max_nodes: int = 2 ** 16) -> int:
    """
    winding number about 0 of the closed curve theta -> values(center + radius e^{i theta});
    samples are doubled until no increment of the argument exceeds pi/4
    """
    nodes = 256
    while nodes <= max_nodes:
        theta = 2 * np.pi * np.arange(nodes + 1) / nodes
        w = values(center + radius * np.exp(1j * theta))
        if np.any(w == 0) or not np.all(np.isfinite(w)):
            raise QuadratureError(f"curve passes through 0 on the circle about {center}")
        increments = np.angle(w[1:] / w[:-1])
        if np.max(np.abs(increments)) < np.pi / 4:
            return int(round(np.sum(increments) / (2 * np.pi)))
        nodes *= 2
    raise QuadratureError(f"winding number about {center} unresolved with {max_nodes} samples")
