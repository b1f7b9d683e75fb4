import math

import numpy as np
import pytest

from src.errors import QuadratureError
from src.quadrature import adaptive_gauss_legendre, contour_mean, gauss_legendre, winding_number


def test_fixed_rule_is_exact_for_polynomials():
    assert gauss_legendre(lambda t: t ** 3, 0.0, 2.0) == pytest.approx(4.0, abs=1e-13)


def test_adaptive_rule():
    assert adaptive_gauss_legendre(np.exp) == pytest.approx(math.e - 1, abs=1e-12)
    peaked = adaptive_gauss_legendre(lambda t: 1 / (t + 1e-3), 0.0, 1.0)
    assert peaked == pytest.approx(math.log(1001), rel=1e-9)
    assert adaptive_gauss_legendre(np.exp, 0.5, 0.5) == 0


def test_adaptive_rule_gives_up_on_a_pole():
    with pytest.raises(QuadratureError):
        adaptive_gauss_legendre(lambda t: 1 / (t - 0.5) ** 2, 0.0, 1.0, max_segments=8)


def test_contour_mean_recovers_a_residue():
    # res(e^z / z^2, 0) = 1
    assert contour_mean(lambda z: np.exp(z) / z, 0j, 0.5) == pytest.approx(1, abs=1e-12)


def test_winding_number():
    assert winding_number(lambda z: z ** 3, 0j, 1.0) == 3
    assert winding_number(lambda z: z - 2, 0j, 1.0) == 0
    with pytest.raises(QuadratureError):
        winding_number(lambda z: z - 1, 0j, 1.0)
