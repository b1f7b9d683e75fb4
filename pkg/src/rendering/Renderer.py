"""
SVG figures: phase portraits of Buff fields, lifted circles (spirals) and external rays.

figures are written with a fixed hash salt and without date metadata so reruns give the same file.
"""
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib
import numpy as np
from matplotlib.figure import Figure
from matplotlib.patches import Circle

from src.errors import BuffdynError
from src.forms.BaseForm import BaseForm
from src.forms.BuffForm import BuffForm, residue_closed_form
from src.forms.flow import TrajectorySpec, trajectory
from src.forms.rectify import LiftedPath, lift_circle
from src.rays.ExternalRay import RayTail
from src.utils import get_logger, to_pair

logger = get_logger(__name__)

matplotlib.rcParams["svg.hashsalt"] = "buffdyn"

render_config = {
    "figsize": (6, 6),
    "trajectory_step": 0.05,
    "trajectory_time": 40.0,
    "ring_fraction": 0.6,
    "spiral_nodes": 512,
    "audit_tolerance": 1e-6,
}


def _figure():
    # pyplot-free, usable from worker threads
    fig = Figure(figsize=render_config["figsize"])
    return fig, fig.subplots()


def _save(fig, out: Union[str, Path]) -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg", metadata={"Date": None})
    logger.info(f"wrote {out}")
    return out


def _plane(points) -> tuple:
    points = np.asarray(points, dtype=complex)
    return points.real, points.imag


def render_phase_portrait(form: BaseForm, disk: float, n_trajectories: int, out: Union[str, Path],
                          direction: complex = 1 + 0j, t_max: float = None) -> Path:
    """
    trajectories of alpha chi seeded on a ring inside D(0, disk), followed in both time directions,
    with the singular points marked
    """
    t_max = render_config["trajectory_time"] if t_max is None else t_max
    seeds = render_config["ring_fraction"] * disk * np.exp(2j * np.pi * (np.arange(n_trajectories) + 0.5)
                                                           / n_trajectories)
    fig, ax = _figure()
    for seed in seeds:
        for sign in (1, -1):
            spec = TrajectorySpec(direction=sign * complex(direction), t_max=t_max,
                                  step=render_config["trajectory_step"], stop_radius=1e-4 * disk)
            try:
                path = trajectory(form, seed, spec, disk_radius=disk)
            except BuffdynError as e:
                logger.debug(f"skipping trajectory from {seed}: {e}")
                continue
            ax.plot(*_plane(path.vertices), color="tab:blue", linewidth=0.6)
    poles = [p for p in form.poles if abs(p) <= disk]
    if poles:
        ax.plot(*_plane(poles), "o", color="tab:red", markersize=4)
    ax.add_patch(Circle((0, 0), disk, fill=False, color="grey", linewidth=0.5))
    ax.set_xlim(-disk, disk)
    ax.set_ylim(-disk, disk)
    ax.set_aspect("equal")
    ax.set_title(repr(form))
    return _save(fig, out)


@dataclass(frozen=True)
class SpiralAudit:
    """net translation of a lifted circle against 2 pi i times the residues enclosed"""
    radius: float
    translation: complex
    expected: complex
    lifted: LiftedPath

    @property
    def error(self) -> float:
        return abs(self.translation - self.expected)

    @property
    def passed(self) -> bool:
        return self.error < render_config["audit_tolerance"]

    def to_json(self) -> dict:
        return {
            "radius": self.radius,
            "translation": to_pair(self.translation),
            "expected": to_pair(self.expected),
            "error": self.error,
            "pass": self.passed,
        }


def spiral_audit(form: BuffForm, r: float, nodes: int = None) -> SpiralAudit:
    """
    lifts |z| = r once counterclockwise; the expected translation is 2 pi i sum res(w, p) over the
    fixed points inside, which for a bifurcated q-cycle is 2 pi i (Lambda + q M)
    """
    nodes = render_config["spiral_nodes"] if nodes is None else nodes
    lifted = lift_circle(form, 0j, r, nodes=nodes)
    inside = [record for record in form.fixed_points if abs(record.location) < r]
    expected = 2j * math.pi * sum((residue_closed_form(record) for record in inside), 0j)
    return SpiralAudit(radius=r, translation=lifted.translation, expected=expected, lifted=lifted)


def render_spiral(form: BuffForm, r: float, out: Union[str, Path]) -> SpiralAudit:
    """SVG of the lifted circle annotated with its net translation; returns the audit"""
    audit = spiral_audit(form, r)
    values = audit.lifted.as_array()
    fig, ax = _figure()
    ax.plot(*_plane(values), color="tab:purple", linewidth=0.8)
    ax.plot(*_plane(values[:1]), "o", color="tab:green", markersize=4)
    ax.plot(*_plane(values[-1:]), "s", color="tab:red", markersize=4)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_title(f"lift of |z| = {r} for {form!r}")
    ax.annotate(f"translation {audit.translation.real:.6g}{audit.translation.imag:+.6g}i\n"
                f"expected {audit.expected.real:.6g}{audit.expected.imag:+.6g}i",
                xy=(0.02, 0.02), xycoords="axes fraction", fontsize=8)
    _save(fig, out)
    return audit


def render_rays(rays: Sequence[RayTail], out: Union[str, Path], labels: Sequence[str] = None,
                fixed_points: Sequence[complex] = (), disk: Optional[tuple] = None,
                window: Optional[tuple] = None) -> Path:
    """ray tails with their landing points; disk = (center, radius) draws the gate disk"""
    fig, ax = _figure()
    colors = matplotlib.colormaps["viridis"](np.linspace(0, 1, max(len(rays), 2)))
    for k, ray in enumerate(rays):
        label = labels[k] if labels else None
        ax.plot(*_plane(ray.points), color=colors[k], linewidth=0.8, label=label)
        if ray.landing is not None:
            ax.plot(*_plane([ray.landing]), "x", color=colors[k], markersize=5)
    if fixed_points:
        ax.plot(*_plane(fixed_points), "o", color="tab:red", markersize=3)
    if disk is not None:
        center, radius = disk
        ax.add_patch(Circle((complex(center).real, complex(center).imag), radius, fill=False,
                           color="grey", linestyle="--", linewidth=0.6))
    if window is not None:
        (x0, x1), (y0, y1) = window
        ax.set_xlim(x0, x1)
        ax.set_ylim(y0, y1)
    ax.set_aspect("equal", adjustable="datalim")
    if labels:
        ax.legend(fontsize=7)
    return _save(fig, out)
