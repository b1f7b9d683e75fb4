from typing import Sequence, Tuple

import numpy as np

from src.errors import DomainExceededError, PoleProximityError, SegmentNearPoleError


def segment_distance(point: complex, a: complex, b: complex) -> float:
    """distance from point to the closed segment [a, b]"""
    direction = b - a
    if direction == 0:
        return abs(point - a)
    s = ((point - a) * direction.conjugate()).real / abs(direction) ** 2
    s = min(1.0, max(0.0, s))
    return abs(point - (a + s * direction))


class BaseForm:
    """
    class that represents a meromorphic 1-form w(z) dz on a disk D(0, validity_radius)
    together with its dual vector field chi = 1 / w.

    subclasses provide omega, chi, domega and residue; the pole bookkeeping lives here.
    """
    validity_radius: float = 1.0
    pole_guard: float = 1e-4

    @property
    def poles(self) -> Tuple[complex, ...]:
        raise NotImplementedError

    def omega(self, z):
        raise NotImplementedError

    def chi(self, z):
        raise NotImplementedError

    def field(self, z):
        """chi for the flow right-hand side, evaluated without the domain check"""
        return self.chi(z)

    def domega(self, z):
        """derivative of omega; five-point complex finite difference unless a subclass knows better"""
        z = complex(z)
        h = 1e-6 * max(abs(z), 1e-3)
        return (-self.omega(z + 2 * h) + 8 * self.omega(z + h) - 8 * self.omega(z - h) + self.omega(z - 2 * h)) / (12 * h)

    def residue(self, p: complex) -> complex:
        raise NotImplementedError

    def nearest_pole(self, z: complex):
        if not self.poles:
            return None, np.inf
        distances = [abs(z - p) for p in self.poles]
        k = int(np.argmin(distances))
        return self.poles[k], distances[k]

    def match_pole(self, p: complex, tolerance: float = 1e-8) -> complex:
        pole, distance = self.nearest_pole(complex(p))
        if pole is None or distance > tolerance * max(1.0, abs(p)):
            raise ValueError(f"{p} is not a pole of this form")
        return pole

    def check_domain(self, z):
        magnitude = np.max(np.abs(z)) if isinstance(z, np.ndarray) else abs(z)
        if magnitude > self.validity_radius * (1 + 1e-12):
            raise DomainExceededError(f"|z| = {magnitude:.6g} exceeds validity radius {self.validity_radius:.6g}")

    def check_point(self, z):
        points = np.atleast_1d(z)
        for p in self.poles:
            distance = np.min(np.abs(points - p))
            if distance < self.pole_guard:
                raise PoleProximityError(f"evaluation within {distance:.3g} of the pole {p}", pole=p)

    def check_segment(self, a: complex, b: complex):
        for p in self.poles:
            distance = segment_distance(p, a, b)
            if distance < self.pole_guard:
                raise SegmentNearPoleError(f"segment [{a}, {b}] passes within {distance:.3g} of the pole {p}",
                                           pole=p)

    def check_path(self, vertices: Sequence[complex]):
        for a, b in zip(vertices[:-1], vertices[1:]):
            self.check_segment(a, b)
