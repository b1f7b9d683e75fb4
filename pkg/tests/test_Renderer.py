import math

import numpy as np
import pandas as pd
import pytest

from src.dynamics.AnalyticMap import AnalyticMap
from src.forms.BuffForm import BuffForm
from src.forms.ExplicitForm import ExplicitForm
from src.rays.ExternalRay import trace_ray
from src.rendering.Renderer import render_phase_portrait, render_rays, render_spiral, spiral_audit
from src.rendering.tables import omega_samples, rows_frame, write_csv


def test_spiral_audit_of_a_perturbed_map(perturbed):
    form = BuffForm(perturbed)
    audit = spiral_audit(form, 0.3)
    expected = 2j * math.pi * (1 / math.log(0.9) + 1 / math.log(1.1))
    assert audit.expected == pytest.approx(expected)
    assert audit.passed
    assert audit.to_json()["pass"] is True

    # only the origin inside
    inner = spiral_audit(form, 0.05)
    assert inner.expected == pytest.approx(2j * math.pi / math.log(0.9))
    assert inner.error < 1e-6


def test_figures_are_written(tmp_path, parabolic):
    out = render_phase_portrait(ExplicitForm.normal_form(2, 0.2 + 1j), 1.0, 4, tmp_path / "portrait.svg")
    assert out.read_text().lstrip().startswith("<?xml")

    audit = render_spiral(BuffForm(parabolic), 0.1, tmp_path / "nested" / "spiral.svg")
    assert (tmp_path / "nested" / "spiral.svg").exists()
    assert audit.translation == pytest.approx(2j * math.pi, abs=1e-8)

    square = AnalyticMap.polynomial([0, 0, 1], validity_radius=math.inf)
    rays = [trace_ray(square, 0, 1, t_min=-4.0, dt=1 / 16)]
    out = render_rays(rays, tmp_path / "rays.svg", labels=["0"], fixed_points=[1], disk=(1, 0.1),
                      window=((0, 2), (-1, 1)))
    assert out.stat().st_size > 0


def test_figures_are_reproducible(tmp_path):
    form = ExplicitForm.linear(1j)
    first = render_phase_portrait(form, 1.0, 3, tmp_path / "a.svg")
    second = render_phase_portrait(form, 1.0, 3, tmp_path / "b.svg")
    assert first.read_bytes() == second.read_bytes()


def test_rows_frame_splits_complex_columns(tmp_path):
    frame = rows_frame([{"n": 8, "z": 1 + 2j, "ok": True}, {"n": 16, "z": np.complex128(-0.5j), "ok": False}])
    assert list(frame.columns) == ["n", "z_re", "z_im", "ok"]
    assert frame["z_im"].tolist() == [2.0, -0.5]
    out = write_csv(frame, tmp_path / "tables" / "rows.csv")
    again = pd.read_csv(out)
    assert again["z_re"].tolist() == [1.0, -0.0]
    assert out.read_text().splitlines()[0] == "n,z_re,z_im,ok"
    assert out.read_bytes().startswith(b"n,z_re,z_im,ok\r\n")
    assert out.read_bytes().count(b"\r\n") == 3


def test_omega_samples(parabolic, perturbed):
    frame = omega_samples(BuffForm(parabolic), 0.2, angles=8, radii=2)
    assert len(frame) == 16
    assert {"omega_re", "u_f_re"} <= set(frame.columns)
    # the fixed point 0.1 lies on the grid
    assert len(omega_samples(BuffForm(perturbed), 0.1, angles=4, radii=1)) == 3
    explicit = omega_samples(ExplicitForm.pure(1), 0.2, angles=4, radii=1)
    assert "u_f_re" not in explicit.columns
    # 1/z^2 on the four axis points of |z| = 0.2
    assert explicit["omega_re"].to_numpy() == pytest.approx([25, -25, 25, -25])
