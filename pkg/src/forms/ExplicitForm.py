import math
from typing import Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from src.forms.BaseForm import BaseForm


class ExplicitForm(BaseForm):
    """
    class that represents a form w = N(z) / z^order dz with a polynomial numerator N, given by formula
    rather than by a map. its only pole is 0 and its dual field is chi = z^order / N(z).

    the model forms of the theory are all of this shape: the normal forms (1 + c w^{m-1}) / w^m,
    the linear fields chi = k z, and the pure forms 1 / z^{q+1}.
    """

    def __init__(self, numerator: Sequence[complex], order: int, validity_radius: float = math.inf,
                 pole_guard: float = 1e-8, name: str = None):
        numerator = np.array([complex(c) for c in numerator], dtype=complex)
        if len(numerator) == 0 or numerator[0] == 0:
            raise ValueError("the numerator must not vanish at 0")
        if not isinstance(order, (int, np.integer)) or order < 1:
            raise ValueError("the pole order must be a positive integer")
        self.numerator = numerator
        self.order = int(order)
        self.validity_radius = validity_radius
        self.pole_guard = pole_guard
        self.name = name
        self._numerator_slope = P.polyder(numerator) if len(numerator) > 1 else np.zeros(1, dtype=complex)

    @classmethod
    def normal_form(cls, m: int, c: complex, **kwargs) -> "ExplicitForm":
        """(1 + c w^{m-1}) / w^m, the form of the model field w^m / (1 + c w^{m-1})"""
        if m < 2:
            raise ValueError("normal forms need m >= 2")
        numerator = [0j] * m
        numerator[0] = 1
        numerator[m - 1] += complex(c)
        return cls(numerator, m, name=kwargs.pop("name", f"normal(m={m}, c={complex(c)})"), **kwargs)

    @classmethod
    def linear(cls, k: complex, **kwargs) -> "ExplicitForm":
        """1 / (k z), the form of the linear field chi = k z"""
        if k == 0:
            raise ValueError("k must be nonzero")
        return cls([1 / complex(k)], 1, name=kwargs.pop("name", f"linear(k={complex(k)})"), **kwargs)

    @classmethod
    def pure(cls, q: int, **kwargs) -> "ExplicitForm":
        """1 / z^{q+1}"""
        return cls([1], q + 1, name=kwargs.pop("name", f"pure(q={q})"), **kwargs)

    def __repr__(self):
        return f"ExplicitForm({self.name})" if self.name else f"ExplicitForm({list(self.numerator)}, {self.order})"

    @property
    def poles(self) -> Tuple[complex, ...]:
        return (0j,)

    def omega(self, z):
        self.check_domain(z)
        self.check_point(z)
        value = P.polyval(z, self.numerator) / z ** self.order
        return value if isinstance(z, np.ndarray) else complex(value)

    def chi(self, z):
        self.check_domain(z)
        value = z ** self.order / P.polyval(z, self.numerator)
        return value if isinstance(z, np.ndarray) else complex(value)

    def field(self, z):
        return z ** self.order / P.polyval(z, self.numerator)

    def domega(self, z):
        self.check_domain(z)
        self.check_point(z)
        value = (P.polyval(z, self._numerator_slope) * z - self.order * P.polyval(z, self.numerator)) \
            / z ** (self.order + 1)
        return value if isinstance(z, np.ndarray) else complex(value)

    def residue(self, p: complex) -> complex:
        self.match_pole(p)
        k = self.order - 1
        return complex(self.numerator[k]) if k < len(self.numerator) else 0j

