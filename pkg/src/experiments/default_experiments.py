import math

from src.experiments.ExperimentConfig import ExperimentConfig, FamilySpec, MapSpec

QUADRATIC = MapSpec(coefficients=(0, 1, 1))
CUBIC_SQUARED = MapSpec(coefficients=(0, -1, 0, 1), power=2, radius=0.8)
QUARTER = MapSpec(coefficients=(0.25, 0, 1), radius=math.inf)


def quadratic(lam: complex, radius: float = 1.0) -> MapSpec:
    return MapSpec(coefficients=(0, lam, 1), radius=radius)


class QuadraticTheoremA(ExperimentConfig):
    def __init__(self, **kwargs):
        super().__init__(
            kind="theorem_a",
            id="theorem_a_quadratic",
            maps={"quadratic": QUADRATIC},
            family=FamilySpec(limit="quadratic", c=1, n_start=8, n_stop=64, n_step=8),
            params={"q": 1, "epsilon": 0.25, "radii": [0.2, 0.1, 0.05, 0.02, 0.01, 0.005]},
            **kwargs
        )


class QuadraticTheoremB(ExperimentConfig):
    def __init__(self, **kwargs):
        super().__init__(
            kind="theorem_b",
            id="theorem_b_quadratic",
            maps={"limit": QUARTER},
            params={"angle": "0", "k_start": 2, "k_stop": 8, "perturbation": -1.0, "base": 4.0,
                    "t_min": -1800.0, "dt": 1 / 16},
            **kwargs
        )


class QuadraticEst2(ExperimentConfig):
    def __init__(self, **kwargs):
        super().__init__(
            kind="est2",
            id="est2_quadratic",
            maps={"quadratic": QUADRATIC},
            family=FamilySpec(limit="quadratic", c=1, n_start=8, n_stop=64, n_step=8),
            params={"q": 1},
            **kwargs
        )


class CubicEst2(ExperimentConfig):
    """g_n = -e^{1/n} z + z^3 through its second iterate"""

    def __init__(self, **kwargs):
        super().__init__(
            kind="est2",
            id="est2_cubic",
            maps={"cubic": CUBIC_SQUARED},
            family=FamilySpec(limit="cubic", c=1, n_start=8, n_stop=64, n_step=8),
            params={"q": 2, "tolerance": 0.05},
            **kwargs
        )


class QuadraticSumRule(ExperimentConfig):
    def __init__(self, **kwargs):
        super().__init__(
            kind="sum_rule",
            id="sum_rule_quadratic",
            maps={"quadratic": QUADRATIC},
            family=FamilySpec(limit="quadratic", c=1, n_start=8, n_stop=64, n_step=8),
            params={"q": 1, "envelope": 2.0, "n_min": 16},
            **kwargs
        )


class QuadraticGate(ExperimentConfig):
    def __init__(self, **kwargs):
        super().__init__(
            kind="gate",
            id="gate_quadratic",
            maps={"limit": QUARTER},
            params={"s_values": [0.05, 0.1, 0.2], "center": 0.5, "r": 0.2, "t_min": -400.0, "dt": 1 / 16},
            **kwargs
        )


class NormalFormPortrait(ExperimentConfig):
    def __init__(self, **kwargs):
        super().__init__(
            kind="phase_portrait",
            id="portrait_normal_form",
            params={"form": "normal", "m": 2, "c": 0.2 + 1j, "disk": 1.0, "n_trajectories": 12},
            **kwargs
        )


class RotationPortrait(ExperimentConfig):
    def __init__(self, **kwargs):
        super().__init__(
            kind="phase_portrait",
            id="portrait_rotation",
            params={"form": "linear", "k": 1j, "disk": 1.0, "n_trajectories": 8},
            **kwargs
        )


class QuadraticPortrait(ExperimentConfig):
    def __init__(self, **kwargs):
        super().__init__(
            kind="phase_portrait",
            id="portrait_quadratic",
            maps={"perturbed": quadratic(0.9)},
            params={"form": "buff", "map": "perturbed", "disk": 0.5, "n_trajectories": 12},
            **kwargs
        )


class QuadraticSpiral(ExperimentConfig):
    def __init__(self, **kwargs):
        super().__init__(
            kind="spiral",
            id="spiral_quadratic",
            maps={
                "parabolic": QUADRATIC,
                "real": quadratic(0.9),
                "near": quadratic(1.05),
                "oblique": quadratic(1.04 + 0.05j),
                "doubling": MapSpec(coefficients=(0, 2)),
            },
            params={"maps": ["parabolic", "real", "near", "oblique", "doubling"],
                    "radii": [0.2, 0.2, 0.2, 0.2, 1.0]},
            **kwargs
        )


def _audit_maps() -> dict:
    maps = {}
    for lam in (0.8, 0.85, 0.9, 0.95, 0.99, 1.01, 1.05, 1.1, 1.15, 1.2, 1.25):
        maps[f"quadratic_{lam}"] = quadratic(lam)
    maps["parabolic"] = QUADRATIC
    maps["parabolic_cubic"] = MapSpec(coefficients=(0, 1, 1, 1), radius=0.5)
    maps["triple"] = MapSpec(coefficients=(0, 1, 0, 1))
    maps["cubic"] = CUBIC_SQUARED
    return maps


class ResidueAudit(ExperimentConfig):
    def __init__(self, **kwargs):
        super().__init__(
            kind="residue_audit",
            id="residue_audit",
            maps=_audit_maps(),
            family=FamilySpec(limit="cubic", c=1, n_start=8, n_stop=64, n_step=8),
            params={"tolerance": 1e-8},
            **kwargs
        )


PRESETS = {
    preset().id: preset
    for preset in (
        QuadraticTheoremA,
        QuadraticTheoremB,
        QuadraticEst2,
        CubicEst2,
        QuadraticSumRule,
        QuadraticGate,
        NormalFormPortrait,
        RotationPortrait,
        QuadraticPortrait,
        QuadraticSpiral,
        ResidueAudit,
    )
}
