"""
experiment configuration: which experiment to run, on which maps, with which parameters.

configurations come from INI files ([experiment], [map.<name>], [family] and one section named
after the experiment kind) or from the presets in src.experiments.default_experiments.
"""
import cmath
import configparser
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Union

from src.dynamics.AnalyticMap import AnalyticMap
from src.errors import ConfigParseError
from src.utils import format_complex, parse_complex, parse_real

EXPERIMENT_KINDS = (
    "theorem_a",
    "theorem_b",
    "est2",
    "sum_rule",
    "gate",
    "phase_portrait",
    "spiral",
    "residue_audit",
)

_MISSING = object()


@dataclass(frozen=True)
class MapSpec:
    """a polynomial given by ascending coefficients, iterated power times, valid on D(0, radius)"""
    coefficients: tuple
    power: int = 1
    radius: float = 1.0

    def __post_init__(self):
        if not self.coefficients:
            raise ConfigParseError("a map needs at least one coefficient")
        if self.power < 1:
            raise ConfigParseError("a map power must be a positive integer")
        if not (self.radius > 0):
            raise ConfigParseError("a map radius must be positive")

    def build(self, name: str = None) -> AnalyticMap:
        if self.power == 1:
            return AnalyticMap.polynomial(self.coefficients, validity_radius=self.radius, name=name)
        base = AnalyticMap.polynomial(self.coefficients, validity_radius=self.radius)
        return AnalyticMap.iterate(base, self.power, validity_radius=self.radius, name=name)

    def to_section(self) -> Dict[str, str]:
        return {
            "coefficients": ", ".join(format_complex(c) for c in self.coefficients),
            "power": str(self.power),
            "radius": "inf" if math.isinf(self.radius) else repr(float(self.radius)),
        }


@dataclass(frozen=True)
class FamilySpec:
    """
    multiplier schedule lambda_n = exp(c / n), n = n_start, n_start + n_step, ..., n_stop (inclusive).
    member n is the limit map with its innermost linear coefficient multiplied by lambda_n.
    """
    limit: str
    c: complex = 1 + 0j
    n_start: int = 8
    n_stop: int = 64
    n_step: int = 8

    def __post_init__(self):
        if self.n_start < 1 or self.n_step < 1:
            raise ConfigParseError("family indices must be positive")
        if self.n_stop < self.n_start:
            raise ConfigParseError(f"empty family range {self.n_start}..{self.n_stop}")

    @property
    def indices(self) -> List[int]:
        return list(range(self.n_start, self.n_stop + 1, self.n_step))

    def multiplier(self, n: int) -> complex:
        return cmath.exp(complex(self.c) / n)

    def members(self, limit_map: AnalyticMap) -> List[AnalyticMap]:
        return [limit_map.with_linear_factor(self.multiplier(n), name=f"{self.limit}[n={n}]") for n in self.indices]

    def to_section(self) -> Dict[str, str]:
        return {
            "limit": self.limit,
            "c": format_complex(self.c),
            "n_start": str(self.n_start),
            "n_stop": str(self.n_stop),
            "n_step": str(self.n_step),
        }


def _parse_int(text: str, what: str) -> int:
    try:
        return int(str(text).strip())
    except ValueError as e:
        raise ConfigParseError(f"{what} must be an integer, got {text!r}") from e


def _parse_map(name: str, section) -> MapSpec:
    if "coefficients" not in section:
        raise ConfigParseError(f"[map.{name}] needs a coefficients key")
    coefficients = tuple(parse_complex(c) for c in section["coefficients"].split(",") if c.strip())
    return MapSpec(
        coefficients=coefficients,
        power=_parse_int(section.get("power", "1"), f"[map.{name}] power"),
        radius=parse_real(section.get("radius", "1")),
    )


class ExperimentConfig:
    """
    class that represents one configured experiment.

    maps are kept as MapSpecs and built on demand; per-kind parameters are kept as given (strings when
    read from a file, python values in presets) and read back through the typed getters.
    """

    def __init__(
            self,
            kind: str,
            id: str = None,
            maps: Dict[str, MapSpec] = None,
            family: FamilySpec = None,
            params: Dict[str, Any] = None,
            seed: int = 0,
            source: Path = None
    ):
        if kind not in EXPERIMENT_KINDS:
            raise ConfigParseError(f"unknown experiment kind {kind!r}; expected one of {', '.join(EXPERIMENT_KINDS)}")
        self.kind = kind
        self.id = id or kind
        self.maps = dict(maps or {})
        self.family = family
        self.params = dict(params or {})
        self.seed = seed
        self.source = source
        if family is not None and family.limit not in self.maps:
            raise ConfigParseError(f"family limit {family.limit!r} is not a configured map")

    def __repr__(self):
        return f"ExperimentConfig({self.kind}, id={self.id})"

    @classmethod
    def from_string(cls, text: str, source: Path = None) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as e:
            raise ConfigParseError(f"malformed configuration: {e}") from e
        if not parser.has_section("experiment"):
            raise ConfigParseError("configuration needs an [experiment] section")
        header = parser["experiment"]
        if "kind" not in header:
            raise ConfigParseError("[experiment] needs a kind")
        kind = header["kind"].strip()

        maps = {}
        for section in parser.sections():
            if section.startswith("map."):
                name = section[len("map."):]
                maps[name] = _parse_map(name, parser[section])

        family = None
        if parser.has_section("family"):
            section = parser["family"]
            if "limit" not in section:
                raise ConfigParseError("[family] needs a limit map")
            family = FamilySpec(
                limit=section["limit"].strip(),
                c=parse_complex(section.get("c", "1")),
                n_start=_parse_int(section.get("n_start", "8"), "n_start"),
                n_stop=_parse_int(section.get("n_stop", "64"), "n_stop"),
                n_step=_parse_int(section.get("n_step", "8"), "n_step"),
            )

        params = dict(parser[kind]) if parser.has_section(kind) else {}
        return cls(
            kind=kind,
            id=header.get("id", kind).strip(),
            maps=maps,
            family=family,
            params=params,
            seed=_parse_int(header.get("seed", "0"), "seed"),
            source=source,
        )

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as e:
            raise ConfigParseError(f"cannot read configuration {path}: {e}") from e
        return cls.from_string(text, source=path)

    def to_ini(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        parser["experiment"] = {"kind": self.kind, "id": self.id, "seed": str(self.seed)}
        for name, spec in self.maps.items():
            parser[f"map.{name}"] = spec.to_section()
        if self.family is not None:
            parser["family"] = self.family.to_section()
        if self.params:
            parser[self.kind] = {key: _format_value(value) for key, value in self.params.items()}
        lines = []
        for section in parser.sections():
            lines.append(f"[{section}]")
            lines.extend(f"{key} = {value}" for key, value in parser[section].items())
            lines.append("")
        return "\n".join(lines)

    # maps

    def get_map(self, name: str) -> AnalyticMap:
        if name not in self.maps:
            raise ConfigParseError(f"{self.id}: no map named {name!r}")
        return self.maps[name].build(name=name)

    def all_maps(self) -> Dict[str, AnalyticMap]:
        return {name: spec.build(name=name) for name, spec in self.maps.items()}

    def family_maps(self) -> List[AnalyticMap]:
        if self.family is None:
            raise ConfigParseError(f"{self.id}: a [family] section is required for {self.kind}")
        return self.family.members(self.get_map(self.family.limit))

    # typed parameters

    def _raw(self, key: str, default):
        if key in self.params:
            return self.params[key]
        if default is _MISSING:
            raise ConfigParseError(f"{self.id}: [{self.kind}] needs a {key} entry")
        return default

    def get_str(self, key: str, default=_MISSING) -> str:
        value = self._raw(key, default)
        return value if value is None else str(value).strip()

    def get_real(self, key: str, default=_MISSING) -> float:
        value = self._raw(key, default)
        return parse_real(value) if isinstance(value, str) else value

    def get_int(self, key: str, default=_MISSING) -> int:
        value = self._raw(key, default)
        return _parse_int(value, key) if isinstance(value, str) else value

    def get_complex(self, key: str, default=_MISSING) -> complex:
        value = self._raw(key, default)
        return parse_complex(value) if isinstance(value, str) else (None if value is None else complex(value))

    def get_bool(self, key: str, default=_MISSING) -> bool:
        value = self._raw(key, default)
        if isinstance(value, str):
            if value.strip().lower() not in ("true", "false", "yes", "no", "1", "0"):
                raise ConfigParseError(f"{key} must be a boolean, got {value!r}")
            return value.strip().lower() in ("true", "yes", "1")
        return bool(value)

    def get_reals(self, key: str, default=_MISSING) -> List[float]:
        value = self._raw(key, default)
        if isinstance(value, str):
            return [parse_real(v) for v in value.split(",") if v.strip()]
        return [float(v) for v in value]

    def get_complexes(self, key: str, default=_MISSING) -> List[complex]:
        value = self._raw(key, default)
        if isinstance(value, str):
            return [parse_complex(v) for v in value.split(",") if v.strip()]
        return [complex(v) for v in value]

    def get_names(self, key: str, default=_MISSING) -> List[str]:
        value = self._raw(key, default)
        if isinstance(value, str):
            return [v.strip() for v in value.split(",") if v.strip()]
        return list(value)

    def inputs(self) -> Dict[str, Any]:
        """echo of the configuration for the report"""
        return {
            "kind": self.kind,
            "id": self.id,
            "seed": self.seed,
            "maps": {name: spec.to_section() for name, spec in self.maps.items()},
            "family": None if self.family is None else self.family.to_section(),
            "params": {key: _format_value(value) for key, value in sorted(self.params.items())},
        }


def _format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, complex):
        return format_complex(value)
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    if isinstance(value, (list, tuple)):
        return ", ".join(_format_value(v) for v in value)
    return str(value)
