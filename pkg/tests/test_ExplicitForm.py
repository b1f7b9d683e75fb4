import cmath

import pytest

from src.errors import BranchCutError, PreconditionError
from src.forms.BaseForm import BaseForm
from src.forms.ExplicitForm import ExplicitForm
from src.forms.flow import normal_form_phi0
from src.forms.rectify import PathPolyline, integrate_path


def test_model_residues():
    assert ExplicitForm.normal_form(2, 0.2 + 1j).residue(0) == 0.2 + 1j
    assert ExplicitForm.normal_form(3, 1).residue(0) == 1
    assert ExplicitForm.linear(1j).residue(0) == pytest.approx(-1j)
    assert ExplicitForm.pure(2).residue(0) == 0
    with pytest.raises(ValueError):
        ExplicitForm.pure(1).residue(0.5)


def test_invalid_forms():
    with pytest.raises(ValueError):
        ExplicitForm([0, 1], 2)
    with pytest.raises(ValueError):
        ExplicitForm([1], 0)
    with pytest.raises(ValueError):
        ExplicitForm.normal_form(1, 0)
    with pytest.raises(ValueError):
        ExplicitForm.linear(0)


def test_form_and_field_are_dual():
    form = ExplicitForm.normal_form(3, 0.5 - 0.25j)
    z = 0.4 + 0.3j
    assert form.omega(z) * form.chi(z) == pytest.approx(1, abs=1e-12)
    assert form.domega(z) == pytest.approx(BaseForm.domega(form, z), rel=1e-6)


def test_phi0_values():
    assert normal_form_phi0(2, 0, 0.1) == pytest.approx(-10)
    assert normal_form_phi0(3, 0, 0.1) == pytest.approx(-50)
    assert normal_form_phi0(2, 1, 1) == pytest.approx(-1)
    assert normal_form_phi0(2, 0, -1) == pytest.approx(1)
    with pytest.raises(BranchCutError):
        normal_form_phi0(2, 1, -1)
    with pytest.raises(PreconditionError):
        normal_form_phi0(2, 1, 0)
    with pytest.raises(ValueError):
        normal_form_phi0(1, 0, 0.5)


@pytest.mark.parametrize("m, c", [(2, 0), (3, 1), (4, 0.2 + 1j)])
def test_integral_of_the_normal_form_is_phi0(m, c):
    form = ExplicitForm.normal_form(m, c)
    for theta in (0.3, 1.7, -2.5):
        a, b = 0.5 * cmath.exp(1j * theta), 0.2 * cmath.exp(1j * theta)
        integral = integrate_path(form, PathPolyline.segment(a, b))
        expected = normal_form_phi0(m, c, b) - normal_form_phi0(m, c, a)
        assert integral == pytest.approx(expected, rel=1e-9, abs=1e-8)
