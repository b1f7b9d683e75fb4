import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Sequence, Union

import numpy as np
import pandas as pd
from numpy.polynomial import Polynomial
from tqdm import tqdm

from src.dynamics.AnalyticMap import AnalyticMap
from src.dynamics.FixedPoints import (
    bifurcation_data,
    classify_approach,
    find_fixed_points,
    index_sum,
    sum_rule_check,
)
from src.errors import (
    BuffdynError,
    ExperimentError,
    InsufficientDataError,
    PreconditionError,
    StepConsistencyError,
)
from src.experiments.ExperimentConfig import ExperimentConfig
from src.forms.BuffForm import BuffForm, residue_closed_form, residue_numeric
from src.forms.ExplicitForm import ExplicitForm
from src.forms.rectify import lift_circle, lift_config, lift_invariant_curve, monodromy, verify_theorem_A
from src.rays.ExternalRay import (
    detect_gate_crossing,
    hausdorff_distance,
    landing_point,
    trace_ray,
    uniform_parameter_distance,
)
from src.rendering.Renderer import render_phase_portrait, render_rays, render_spiral
from src.rendering.tables import omega_samples, rows_frame, write_csv
from src.utils import get_logger, to_pair

logger = get_logger(__name__)

experiment_config = {
    "theorem_a": {"q": 1, "epsilon": 0.25, "radii": [0.2, 0.1, 0.05, 0.02, 0.01, 0.005],
                  "min_radius": 0.005, "max_start": 64},
    "theorem_b": {"q": 1, "angle": "0", "k_start": 2, "k_stop": 8, "perturbation": -1.0, "base": 4.0,
                  "perturbed_coefficient": 0, "t_min": -1800.0, "dt": 1 / 16, "landing_tol": 1e-6,
                  "limit_landing_tol": 1e-2, "final_tolerance": 1e-2, "candidate_radius": 2.0,
                  "lift_radius": 0.5, "lift_steps": 4, "lift_pole_margin": 0.25},
    "est2": {"q": 1, "tolerance": 0.05, "exact_tolerance": 1e-12},
    "sum_rule": {"q": 1, "envelope": 2.0, "n_min": 16},
    "gate": {"q": 1, "angle": "0", "s_values": [0.05, 0.1, 0.2], "s_power": 2, "perturbation": 1.0,
             "perturbed_coefficient": 0, "center": 0.5, "r": 0.2, "t_min": -400.0, "dt": 1 / 16},
    "phase_portrait": {"form": "buff", "disk": 0.5, "n_trajectories": 12, "direction": 1 + 0j},
    "spiral": {"r": 0.2, "tolerance": 1e-6},
    "residue_audit": {"max_radius": 0.05, "separation_fraction": 0.4, "boundary_fraction": 0.5,
                      "tolerance": 1e-8, "loop_tolerance": 1e-9},
}


def _clean(value):
    """json-ready copy: complex as [re, im], non-finite floats as null"""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (complex, np.complexfloating)):
        return [_clean(float(np.real(value))), _clean(float(np.imag(value)))]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    if isinstance(value, (Fraction, Path)):
        return str(value)
    return value


@dataclass
class ExperimentReport:
    id: str
    kind: str
    inputs: Dict[str, Any]
    results: Dict[str, Any] = field(default_factory=dict)
    tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
    figures: Dict[str, Path] = field(default_factory=dict)
    passed: bool = True
    wall_clock: float = 0.0

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 2

    def to_json(self) -> dict:
        return _clean({
            "id": self.id,
            "kind": self.kind,
            "inputs": self.inputs,
            "results": self.results,
            "tables": sorted(self.tables),
            "figures": {name: path.name for name, path in sorted(self.figures.items())},
            "pass": self.passed,
        })

    def write(self, out_dir: Union[str, Path]) -> List[Path]:
        """<id>.json, <id>.timing.json and one <id>_<table>.csv per table"""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = []
        report_path = out_dir / f"{self.id}.json"
        report_path.write_text(json.dumps(self.to_json(), sort_keys=True, indent=2, allow_nan=False) + "\n")
        written.append(report_path)
        timing_path = out_dir / f"{self.id}.timing.json"
        timing_path.write_text(json.dumps({"id": self.id, "wall_clock": self.wall_clock}, sort_keys=True) + "\n")
        written.append(timing_path)
        for name, frame in sorted(self.tables.items()):
            written.append(write_csv(frame, out_dir / f"{self.id}_{name}.csv"))
        return written


class Experiment:
    """
    class that runs one configured experiment and assembles its report.

    each kind has a _run_<kind> method filling the report; errors raised inside a stage are re-raised as
    ExperimentError tagged with the stage name.
    """

    def __init__(self, config: ExperimentConfig, out_dir: Union[str, Path] = "out", threads: int = 1,
                 progress: bool = False):
        if not isinstance(config, ExperimentConfig):
            raise TypeError("Experiment needs an ExperimentConfig")
        if threads < 1:
            raise ValueError("threads must be at least 1")
        self.config = config
        self.out_dir = Path(out_dir)
        self.threads = threads
        self.progress = progress
        self.defaults = experiment_config[config.kind]

    def __repr__(self):
        return f"Experiment({self.config.id})"

    @contextmanager
    def stage(self, name: str):
        logger.info(f"{self.config.id}: {name}")
        try:
            yield
        except ExperimentError:
            raise
        except (BuffdynError, ValueError, ArithmeticError, OSError) as e:
            raise ExperimentError(name, e) from e

    def param(self, getter: str, key: str):
        return getattr(self.config, getter)(key, self.defaults.get(key))

    def figure_path(self, name: str) -> Path:
        return self.out_dir / f"{self.config.id}_{name}.svg"

    def map_rows(self, func: Callable, items: Sequence, desc: str) -> List:
        """func over items on the thread pool, results in submission order"""
        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            return list(tqdm(executor.map(func, items), total=len(items), disable=not self.progress, desc=desc))

    def run(self) -> ExperimentReport:
        with self.stage("output"):
            self.out_dir.mkdir(parents=True, exist_ok=True)
        report = ExperimentReport(id=self.config.id, kind=self.config.kind, inputs=self.config.inputs())
        start = time.perf_counter()
        getattr(self, f"_run_{self.config.kind}")(report)
        report.wall_clock = time.perf_counter() - start
        with self.stage("write"):
            report.write(self.out_dir)
        logger.info(f"{self.config.id}: {'pass' if report.passed else 'FAIL'} in {report.wall_clock:.1f}s")
        return report

    # experiments

    def _run_theorem_a(self, report: ExperimentReport):
        with self.stage("family"):
            limit_map = self.config.get_map(self.config.family.limit) if self.config.family else None
            family = self.config.family_maps()
        with self.stage("sweep"):
            result = verify_theorem_A(
                limit_map, family,
                q=self.param("get_int", "q"),
                epsilon=self.param("get_real", "epsilon"),
                radii=self.param("get_reals", "radii"),
                grid=self.config.get_int("grid_angles", None),
                grid_radii=self.config.get_int("grid_radii", None),
                t_steps=self.config.get_int("t_steps", None),
                indices=self.config.family.indices,
                threads=self.threads,
                progress=self.progress,
            )
        report.results = result.to_json()
        report.tables["sweep"] = rows_frame(result.rows)
        start = result.family_index_start
        report.passed = result.passed and result.radius_found >= self.param("get_real", "min_radius") \
            and start is not None and start <= self.param("get_int", "max_start")

    def _perturbed(self, P: AnalyticMap, amount: complex, index: int, name: str) -> AnalyticMap:
        coefficients = list(P.coefficients) + [0j] * max(0, index + 1 - len(P.coefficients))
        coefficients[index] += amount
        return AnalyticMap.polynomial(coefficients, validity_radius=math.inf, name=name)

    def _run_theorem_b(self, report: ExperimentReport):
        q = self.param("get_int", "q")
        theta = Fraction(self.param("get_str", "angle"))
        t_min = self.param("get_real", "t_min")
        dt = self.param("get_real", "dt")
        landing_tol = self.param("get_real", "landing_tol")
        radius = self.param("get_real", "candidate_radius")
        base = self.param("get_real", "base")
        amount = self.param("get_complex", "perturbation")
        index = self.param("get_int", "perturbed_coefficient")
        k_values = list(range(self.param("get_int", "k_start"), self.param("get_int", "k_stop") + 1))
        if len(k_values) < 2:
            raise ExperimentError("setup", InsufficientDataError("Theorem B needs at least two k values"))

        with self.stage("limit ray"):
            limit = self.config.get_map(self.config.get_str("map", "limit"))
            limit = AnalyticMap.polynomial(limit.coefficients, validity_radius=math.inf, name=limit.name)
            limit_records = find_fixed_points(limit, radius)
            parabolic = [r for r in limit_records if r.is_parabolic]
            if not parabolic:
                raise PreconditionError(f"{limit!r} has no parabolic fixed point in D(0, {radius})")
            center = parabolic[0].location
            limit_ray = trace_ray(limit, theta, q, t_min, dt)
            limit_ray = replace(limit_ray, landing=landing_point(limit_ray, [center],
                                                                 self.param("get_real", "limit_landing_tol")))

        def member(k):
            P_k = self._perturbed(limit, amount * base ** (-k), index, f"{limit.name}[k={k}]")
            records = find_fixed_points(P_k, radius)
            ray = trace_ray(P_k, theta, q, t_min, dt, candidates=[r.location for r in records],
                            landing_tol=landing_tol)
            row = {
                "k": k,
                "samples": len(ray),
                "t_last": ray.times[-1],
                "termination": ray.termination,
                "landed": ray.landing is not None,
                "landing": complex(np.nan, np.nan) if ray.landing is None else ray.landing,
                "multiplier_abs": math.nan,
                "repelling": False,
                "uniform_distance": uniform_parameter_distance(ray, limit_ray),
                "hausdorff_distance": hausdorff_distance(ray, limit_ray),
                "lift_step_mismatch": math.nan,
            }
            if ray.landing is not None:
                record = min(records, key=lambda r: abs(r.location - ray.landing))
                row["multiplier_abs"] = abs(record.multiplier)
                row["repelling"] = abs(record.multiplier) > 1
                row["lift_step_mismatch"] = self._invariant_lift(P_k, ray, center)
            return row, ray

        with self.stage("perturbed rays"):
            results = self.map_rows(member, k_values, "rays")
        rows = [row for row, _ in results]
        rays = [ray for _, ray in results]

        with self.stage("approach"):
            half_steps = np.arange(k_values[0], k_values[-1] + 0.25, 0.5)
            multipliers = []
            for k in half_steps:
                P_k = self._perturbed(limit, amount * base ** (-k), index, None)
                repelling = [r for r in find_fixed_points(P_k, radius) if abs(r.multiplier) > 1]
                multipliers.append(min(repelling, key=lambda r: abs(r.location - center)).multiplier)
            approach = classify_approach(multipliers, q)

        distances = [row["uniform_distance"] for row in rows]
        decreasing = all(b < a for a, b in zip(distances[:-1], distances[1:]))
        final_tolerance = self.param("get_real", "final_tolerance")
        report.results = {
            "limit_ray": limit_ray.to_json(),
            "parabolic_point": to_pair(center),
            "approach": approach,
            "all_landed": all(row["landed"] for row in rows),
            "all_repelling": all(row["repelling"] for row in rows),
            "strictly_decreasing": decreasing,
            "lift_consistent": all(not row["lift_step_mismatch"] > lift_config["step_consistency"] for row in rows),
            "final_distance": distances[-1],
            "convergence": "uniform convergence detected" if decreasing and distances[-1] < final_tolerance
            else "no uniform convergence detected",
        }
        report.tables["convergence"] = rows_frame(rows)
        report.passed = report.results["all_landed"] and report.results["all_repelling"] and decreasing \
            and distances[-1] < final_tolerance
        with self.stage("figure"):
            report.figures["rays"] = render_rays(
                [limit_ray] + rays, self.figure_path("rays"),
                labels=["limit"] + [f"k={k}" for k in k_values],
                fixed_points=[center] + [row["landing"] for row in rows if row["landed"]],
                window=((center.real - 0.5, center.real + 1.5), (center.imag - 1, center.imag + 1)),
            )

    def _invariant_lift(self, P_k: AnalyticMap, ray, center: complex) -> float:
        """
        step mismatch of the lifted ray tail for P_k conjugated by z = x + center, recorded even when it
        exceeds the step tolerance; NaN when the tail inside the lift disk is too short
        """
        lift_radius = self.param("get_real", "lift_radius")
        steps = self.param("get_int", "lift_steps")
        stride = round(1 / ray.dt) // steps
        shifted = Polynomial(P_k.coefficients)(Polynomial([center, 1])) - Polynomial([center])
        conjugate = AnalyticMap.polynomial(shifted.coef, validity_radius=lift_radius)
        points = ray.as_array()[::stride] - center
        landing = ray.landing - center
        margin = self.param("get_real", "lift_pole_margin") * abs(landing)
        try:
            form = BuffForm(conjugate)
            inside = np.flatnonzero(np.abs(points) < lift_radius)
            if not len(inside):
                return math.nan
            tail = []
            for x in points[inside[0]:]:
                if abs(x) >= lift_radius or min(abs(x - p) for p in form.poles) <= margin:
                    break
                tail.append(complex(x))
            return lift_invariant_curve(form, tail, steps).step_mismatch
        except StepConsistencyError as e:
            logger.warning(f"{P_k!r}: {e}")
            return e.mismatch
        except BuffdynError as e:
            logger.info(f"no invariant-curve lift for {P_k!r}: {e}")
            return math.nan

    def _run_est2(self, report: ExperimentReport):
        q = self.param("get_int", "q")
        with self.stage("family"):
            limit_map = self.config.get_map(self.config.family.limit) if self.config.family else None
            family = self.config.family_maps()
            radius = self.config.get_real("radius", limit_map.validity_radius)

        def member(pair):
            n, f = pair
            data = bifurcation_data(limit_map, f, q, radius)
            ratios = data.est2_ratios()
            return {
                "n": n,
                "delta": data.delta,
                "ratio": ratios[0],
                "ratio_error": max(abs(r - 1) for r in ratios),
                "rotation": -1 if data.rotation is None else data.rotation,
            }

        with self.stage("bifurcation"):
            rows = self.map_rows(member, list(zip(self.config.family.indices, family)), "est2")
        errors = np.array([row["ratio_error"] for row in rows])
        tail = errors[len(errors) // 2:]
        exact = self.param("get_real", "exact_tolerance")
        decreasing = bool(np.all(np.diff(tail) <= exact))
        tolerance = self.param("get_real", "tolerance")
        report.results = {
            "final_error": float(errors[-1]),
            "max_error": float(errors.max()),
            "decreasing_tail": decreasing,
            "exact": bool(errors.max() <= exact),
        }
        report.tables["ratios"] = rows_frame(rows)
        report.passed = bool(errors[-1] < tolerance) and decreasing and (q != 1 or report.results["exact"])

    def _run_sum_rule(self, report: ExperimentReport):
        q = self.param("get_int", "q")
        envelope = self.param("get_real", "envelope")
        n_min = self.param("get_int", "n_min")
        with self.stage("family"):
            limit_map = self.config.get_map(self.config.family.limit) if self.config.family else None
            family = self.config.family_maps()
            radius = self.config.get_real("radius", limit_map.validity_radius)
            limit_index = index_sum(limit_map, radius)

        def member(pair):
            n, f = pair
            data = bifurcation_data(limit_map, f, q, radius)
            deviation = sum_rule_check(data)
            indices = index_sum(f, radius)
            return {
                "n": n,
                "big_lambda": data.big_lambda,
                "big_m": data.big_m,
                "rho": data.rho,
                "deviation": deviation,
                "envelope": envelope / n,
                "within_envelope": n < n_min or deviation < envelope / n,
                "index_sum": indices,
                "index_gap": abs(indices - limit_index),
            }

        with self.stage("sum rule"):
            rows = self.map_rows(member, list(zip(self.config.family.indices, family)), "sum rule")
        report.results = {
            "limit_index_sum": limit_index,
            "final_deviation": rows[-1]["deviation"],
            "max_index_gap": max(row["index_gap"] for row in rows),
        }
        report.tables["sum_rule"] = rows_frame(rows)
        report.passed = all(row["within_envelope"] for row in rows)

    def _run_gate(self, report: ExperimentReport):
        q = self.param("get_int", "q")
        theta = Fraction(self.param("get_str", "angle"))
        center = self.param("get_complex", "center")
        r = self.param("get_real", "r")
        t_min = self.param("get_real", "t_min")
        dt = self.param("get_real", "dt")
        power = self.param("get_int", "s_power")
        amount = self.param("get_complex", "perturbation")
        index = self.param("get_int", "perturbed_coefficient")
        s_values = self.param("get_reals", "s_values")
        with self.stage("map"):
            P = self.config.get_map(self.config.get_str("map", "limit"))
            P = AnalyticMap.polynomial(P.coefficients, validity_radius=math.inf, name=P.name)
            search = self.config.get_real("candidate_radius", abs(center) + 2 * r)

        def member(s):
            P_s = self._perturbed(P, amount * s ** power, index, f"{P.name}[s={s}]")
            fixed = [rec.location for rec in find_fixed_points(P_s, search)]
            ray = trace_ray(P_s, theta, q, t_min, dt)
            crossing = detect_gate_crossing(ray, fixed, r, center)
            row = {
                "s": s,
                "gate_crossing": crossing,
                "enclosed": sum(abs(z - center) <= r for z in fixed),
                "t_last": ray.times[-1],
                "termination": ray.termination,
            }
            return row, ray, fixed

        with self.stage("rays"):
            results = self.map_rows(member, s_values, "gate")
        rows = [row for row, _, _ in results]
        report.results = {"gate_crossing": [row["gate_crossing"] for row in rows], "center": to_pair(center), "r": r}
        report.tables["gate"] = rows_frame(rows)
        report.passed = all(row["gate_crossing"] for row in rows)
        with self.stage("figure"):
            report.figures["rays"] = render_rays(
                [ray for _, ray, _ in results], self.figure_path("rays"),
                labels=[f"s={s}" for s in s_values],
                fixed_points=[z for _, _, fixed in results for z in fixed],
                disk=(center, r),
                window=((center.real - 3 * r, center.real + 3 * r), (center.imag - 3 * r, center.imag + 3 * r)),
            )

    def build_form(self):
        """the form named by the form key: buff (of a configured map), normal, linear or pure"""
        kind = self.param("get_str", "form")
        if kind == "buff":
            return BuffForm(self.config.get_map(self.config.get_str("map")))
        if kind == "normal":
            return ExplicitForm.normal_form(self.config.get_int("m"), self.config.get_complex("c", 0j))
        if kind == "linear":
            return ExplicitForm.linear(self.config.get_complex("k"))
        if kind == "pure":
            return ExplicitForm.pure(self.config.get_int("q"))
        raise PreconditionError(f"unknown form kind {kind!r}")

    def _run_phase_portrait(self, report: ExperimentReport):
        with self.stage("form"):
            form = self.build_form()
            disk = self.param("get_real", "disk")
        with self.stage("portrait"):
            report.figures["portrait"] = render_phase_portrait(
                form, disk, self.param("get_int", "n_trajectories"), self.figure_path("portrait"),
                direction=self.param("get_complex", "direction"))
        with self.stage("samples"):
            report.tables["samples"] = omega_samples(form, disk)
        report.results = {
            "form": repr(form),
            "singular_points": [to_pair(p) for p in form.poles if abs(p) <= disk],
        }

    def _run_spiral(self, report: ExperimentReport):
        names = self.config.get_names("maps", list(self.config.maps))
        radii = self.config.get_reals("radii", [self.param("get_real", "r")] * len(names))
        if len(radii) != len(names):
            raise ExperimentError("setup", PreconditionError("radii must give one radius per map"))
        tolerance = self.param("get_real", "tolerance")

        def member(pair):
            name, r = pair
            form = BuffForm(self.config.get_map(name))
            audit = render_spiral(form, r, self.figure_path(f"spiral_{name}"))
            return {"map": name, "r": r, "translation": audit.translation, "expected": audit.expected,
                    "error": audit.error, "pass": audit.error < tolerance}

        with self.stage("spirals"):
            rows = self.map_rows(member, list(zip(names, radii)), "spirals")
        for name in names:
            report.figures[f"spiral_{name}"] = self.figure_path(f"spiral_{name}")
        report.results = {"max_error": max(row["error"] for row in rows)}
        report.tables["spiral"] = rows_frame(rows)
        report.passed = all(row["pass"] for row in rows)

    def _contour_radius(self, form: BuffForm, p: complex) -> float:
        others = [abs(q - p) for q in form.poles if q != p]
        separation = min(others) if others else math.inf
        room = form.validity_radius - abs(p)
        return min(self.param("get_real", "max_radius"),
                   self.param("get_real", "separation_fraction") * separation,
                   self.param("get_real", "boundary_fraction") * room)

    def _run_residue_audit(self, report: ExperimentReport):
        names = self.config.get_names("maps", list(self.config.maps))
        with self.stage("maps"):
            maps = [self.config.get_map(name) for name in names]
            if self.config.family is not None:
                maps += self.config.family_maps()
        tolerance = self.param("get_real", "tolerance")
        loop_tolerance = self.param("get_real", "loop_tolerance")

        def member(f):
            form = BuffForm(f)
            name = f.name
            rows = []
            for record in form.fixed_points:
                p = record.location
                radius = self._contour_radius(form, p)
                closed = residue_closed_form(record)
                numeric = residue_numeric(form, p, radius)
                loop = lift_circle(form, p, radius).translation
                rows.append({
                    "map": name,
                    "fixed_point": p,
                    "multiplicity": record.multiplicity,
                    "contour_radius": radius,
                    "closed_form": closed,
                    "numeric": numeric,
                    "error": abs(numeric - closed),
                    "loop_error": abs(loop - monodromy(form, p)),
                })
            return rows

        with self.stage("residues"):
            rows = [row for rows in self.map_rows(member, maps, "residues") for row in rows]
        report.results = {
            "maps": len(maps),
            "fixed_points": len(rows),
            "max_error": max(row["error"] for row in rows),
            "max_loop_error": max(row["loop_error"] for row in rows),
        }
        report.tables["residues"] = rows_frame(rows)
        report.passed = report.results["max_error"] < tolerance and report.results["max_loop_error"] < loop_tolerance
