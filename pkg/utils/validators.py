"""
Radial Wave Lab - Scenario Validation
Pydantic schema of scenario files and lattice / exponent checks
"""

import math
import re
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from constants import (
    P_MIN, P_MAX, LATTICE_TOLERANCE, OUTPUT_FORMATS, ProfileKind,
)
from core.radial_core import critical_exponents, power_tail_exponent
from core.energy_ledger import triangle_vertices, rectangle_vertices, parallelogram_vertices
from utils.data_models import ModelParams, GridSpec, RadialProfile, ProbeSet
from utils.error_handlers import ConfigurationError

_DYADIC = re.compile(r'^\s*(\d+(?:\.\d+)?)\s*(?:\^|\*\*)\s*(-?\d+)\s*$')


def parse_length(value: Any) -> float:
    """Accept numbers and dyadic strings such as "2^-8" """
    if isinstance(value, str):
        match = _DYADIC.match(value)
        if match:
            return float(match.group(1)) ** int(match.group(2))
        try:
            return float(value)
        except ValueError:
            raise ValueError(f"cannot read {value!r} as a number or base^exponent")
    return value


def _aligned(value: float, dr: float) -> bool:
    ratio = value / dr
    return abs(ratio - round(ratio)) <= LATTICE_TOLERANCE * max(1.0, abs(ratio))


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


# =============================================================================
# SECTIONS
# =============================================================================

class ParamsSection(_Section):
    p: float
    linear: bool = False

    @field_validator('p')
    @classmethod
    def _p_range(cls, v: float) -> float:
        if not P_MIN <= v < P_MAX:
            raise ValueError(f"p={v} outside the valid interval [{P_MIN}, {P_MAX})")
        return v


class GridSection(_Section):
    dr: float = Field(gt=0)
    r_max: float = Field(gt=0)
    t_end: float = Field(ge=0)

    @field_validator('dr', 'r_max', 't_end', mode='before')
    @classmethod
    def _dyadic(cls, v: Any) -> Any:
        return parse_length(v)

    @model_validator(mode='after')
    def _lattice(self) -> 'GridSection':
        for name in ('r_max', 't_end'):
            if not _aligned(getattr(self, name), self.dr):
                raise ValueError(f"{name}={getattr(self, name)} is not a multiple of dr={self.dr}")
        return self


class SamplesSection(_Section):
    radii: List[float]
    values: List[float]

    @model_validator(mode='after')
    def _shape(self) -> 'SamplesSection':
        if len(self.radii) != len(self.values) or len(self.radii) < 4:
            raise ValueError("samples need matching radii/values lists with at least 4 entries")
        if any(b <= a for a, b in zip(self.radii[:-1], self.radii[1:])) or self.radii[0] < 0:
            raise ValueError("sample radii must be nonnegative and strictly increasing")
        return self


class ProfileSection(_Section):
    kind: Literal['zero', 'gaussian_bump', 'polynomial_bump', 'power_tail', 'custom_samples']
    amplitude: float = 0.0
    center: float = 0.0
    width: float = Field(default=1.0, gt=0)
    tail_exponent: Optional[float] = None
    epsilon: Optional[float] = None
    truncation_radius: Optional[float] = None
    samples: Optional[SamplesSection] = None
    velocity: Optional['ProfileSection'] = None

    @model_validator(mode='after')
    def _kind_fields(self) -> 'ProfileSection':
        if self.kind == 'power_tail':
            if self.truncation_radius is None:
                raise ValueError("power_tail needs truncation_radius")
            if self.tail_exponent is None and self.epsilon is None:
                raise ValueError("power_tail needs tail_exponent or epsilon")
        if self.kind == 'custom_samples' and self.samples is None:
            raise ValueError("custom_samples needs samples")
        return self

    def to_profile(self, p: float) -> RadialProfile:
        q = self.tail_exponent
        if self.kind == 'power_tail' and q is None:
            q = power_tail_exponent(p, self.epsilon)
        return RadialProfile(
            kind=ProfileKind(self.kind),
            amplitude=self.amplitude,
            center=self.center,
            width=self.width,
            tail_exponent=q,
            truncation_radius=self.truncation_radius,
            sample_radii=None if self.samples is None else list(self.samples.radii),
            sample_values=None if self.samples is None else list(self.samples.values),
            velocity=None if self.velocity is None else self.velocity.to_profile(p),
        )


class AnnulusProbe(_Section):
    c: float
    beta: float


class Theorem2Probe(_Section):
    R: float = Field(gt=0)
    beta: float
    kappa: float


class RegionProbe(_Section):
    """Named lattice polygon; the kind picks which fields are read"""
    name: str
    kind: Literal['triangle', 'rectangle', 'parallelogram', 'polygon']
    t0: Optional[float] = None
    r0: Optional[float] = None
    r1: Optional[float] = None
    r2: Optional[float] = None
    t1: Optional[float] = None
    t2: Optional[float] = None
    height: Optional[float] = None
    vertices: Optional[List[Tuple[float, float]]] = None

    @model_validator(mode='after')
    def _fields(self) -> 'RegionProbe':
        needed = {
            'triangle': ('t0', 'r0'),
            'rectangle': ('r1', 'r2', 't1', 't2'),
            'parallelogram': ('r1', 'r2', 't0', 'height'),
            'polygon': ('vertices',),
        }[self.kind]
        missing = [n for n in needed if getattr(self, n) is None]
        if missing:
            raise ValueError(f"region {self.name} ({self.kind}) is missing {', '.join(missing)}")
        return self

    def to_vertices(self) -> List[Tuple[float, float]]:
        if self.kind == 'triangle':
            return triangle_vertices(self.t0, self.r0)
        if self.kind == 'rectangle':
            return rectangle_vertices(self.r1, self.r2, self.t1, self.t2)
        if self.kind == 'parallelogram':
            return parallelogram_vertices(self.r1, self.r2, self.t0, self.height)
        return [(float(r), float(t)) for r, t in self.vertices]


class DecayProbe(_Section):
    label: float
    window: Optional[Tuple[float, float]] = None


class ProbesSection(_Section):
    outgoing_labels: List[float] = Field(default_factory=list)
    incoming_labels: List[float] = Field(default_factory=list)
    snapshot_times: List[float] = Field(default_factory=list)
    annulus: List[AnnulusProbe] = Field(default_factory=list)
    morawetz_radii: List[float] = Field(default_factory=list)
    theorem2: List[Theorem2Probe] = Field(default_factory=list)
    regions: List[RegionProbe] = Field(default_factory=list)
    appendix_windows: List[Tuple[float, float]] = Field(default_factory=list)
    weighted_energy_times: List[float] = Field(default_factory=list)
    exterior_times: List[float] = Field(default_factory=list)
    exterior_label: float = 0.0
    extraction_times: List[float] = Field(default_factory=list)
    decay_windows: List[DecayProbe] = Field(default_factory=list)


class ConvergenceSection(_Section):
    refinements: List[float]
    checkpoints: Optional[List[Tuple[float, float]]] = None
    reference_dr: Optional[float] = None

    @field_validator('refinements', mode='before')
    @classmethod
    def _dyadic_levels(cls, v: Any) -> Any:
        return [parse_length(x) for x in v] if isinstance(v, list) else v

    @field_validator('reference_dr', mode='before')
    @classmethod
    def _dyadic_reference(cls, v: Any) -> Any:
        return None if v is None else parse_length(v)

    @field_validator('refinements')
    @classmethod
    def _levels(cls, v: List[float]) -> List[float]:
        if len(v) < 3:
            raise ValueError(f"convergence study needs at least 3 refinement levels, got {len(v)}")
        levels = sorted(v, reverse=True)
        for a, b in zip(levels[:-1], levels[1:]):
            if not math.isclose(a / b, 2.0, rel_tol=1e-12):
                raise ValueError(f"refinements must halve dr at each level ({a} -> {b})")
        return levels


class OutputSection(_Section):
    directory: Optional[str] = None
    stride: int = Field(default=0, ge=0)
    formats: List[Literal['csv', 'json']] = Field(default_factory=lambda: list(OUTPUT_FORMATS))


# =============================================================================
# SCENARIO
# =============================================================================

class ScenarioConfig(_Section):
    """A complete scenario file; unknown keys anywhere are errors"""
    name: str = "scenario"
    description: str = ""
    params: ParamsSection
    grid: GridSection
    profile: ProfileSection
    probes: ProbesSection = Field(default_factory=ProbesSection)
    convergence: Optional[ConvergenceSection] = None
    output: OutputSection = Field(default_factory=OutputSection)
    seed: int = 0

    @model_validator(mode='after')
    def _cross_checks(self) -> 'ScenarioConfig':
        dr = self.grid.dr
        probes = self.probes
        exps = critical_exponents(ModelParams(self.params.p))

        lattice_values = {
            'outgoing_labels': probes.outgoing_labels,
            'incoming_labels': probes.incoming_labels,
            'snapshot_times': probes.snapshot_times,
            'morawetz_radii': probes.morawetz_radii,
            'weighted_energy_times': probes.weighted_energy_times,
            'exterior_times': probes.exterior_times,
            'extraction_times': probes.extraction_times,
            'theorem2.R': [t.R for t in probes.theorem2],
            'decay_windows.label': [d.label for d in probes.decay_windows],
            'exterior_label': [probes.exterior_label],
        }
        for region in probes.regions:
            lattice_values[f'regions.{region.name}'] = [x for v in region.to_vertices() for x in v]
        for name, values in lattice_values.items():
            bad = [v for v in values if not _aligned(v, dr)]
            if bad:
                raise ValueError(f"probes.{name}: {bad} not aligned with dr={dr}")

        for name in ('snapshot_times', 'weighted_energy_times', 'exterior_times', 'extraction_times'):
            late = [t for t in getattr(probes, name) if not 0 <= t <= self.grid.t_end]
            if late:
                raise ValueError(f"probes.{name}: {late} outside [0, t_end={self.grid.t_end}]")

        for entry in probes.theorem2:
            if not (exps.kappa0 < entry.kappa < 1.0 and 1.0 - entry.kappa < entry.beta < exps.beta0):
                raise ValueError(
                    f"probes.theorem2 (R={entry.R}, beta={entry.beta}, kappa={entry.kappa}) not admissible "
                    f"for p={self.params.p}: need kappa in ({exps.kappa0:.6g}, 1) and "
                    f"beta in ({max(1.0 - entry.kappa, 0.0):.6g}, {exps.beta0:.6g})"
                )
        for entry in probes.annulus:
            if not (0.0 < entry.c < 1.0 and 0.0 < entry.beta < exps.beta0):
                raise ValueError(
                    f"probes.annulus (c={entry.c}, beta={entry.beta}): need 0 < c < 1 and 0 < beta < {exps.beta0:.6g}"
                )

        names = [r.name for r in probes.regions]
        if len(names) != len(set(names)):
            raise ValueError("probes.regions: duplicate region names")
        return self

    # -------------------------------------------------------------------------
    # Domain objects
    # -------------------------------------------------------------------------

    def model_params(self) -> ModelParams:
        return ModelParams(p=self.params.p, linear=self.params.linear)

    def grid_spec(self, dr: Optional[float] = None) -> GridSpec:
        return GridSpec(dr=dr or self.grid.dr, r_max=self.grid.r_max, t_end=self.grid.t_end)

    def radial_profile(self) -> RadialProfile:
        return self.profile.to_profile(self.params.p)

    def scattering_horizon(self) -> float:
        """t_end, raised to the first lattice time covering R + R^beta of every theorem2 entry"""
        dr = self.grid.dr
        horizon = self.grid.t_end
        for entry in self.probes.theorem2:
            needed = math.ceil((entry.R + entry.R ** entry.beta) / dr - 1e-9) * dr
            horizon = max(horizon, needed)
        return horizon

    def _snapshot_times(self) -> List[float]:
        probes = self.probes
        times = set(probes.snapshot_times) | set(probes.weighted_energy_times) | set(probes.exterior_times)
        times |= set(probes.extraction_times) | {0.0, self.grid.t_end}
        return sorted(times)

    def _shell_radii(self) -> List[float]:
        return sorted(set(self.probes.morawetz_radii) | {t.R for t in self.probes.theorem2})

    def probe_set(self) -> ProbeSet:
        """Probes of the forward run"""
        probes = self.probes
        outgoing = set(probes.outgoing_labels) | {d.label for d in probes.decay_windows}
        return ProbeSet(
            outgoing_labels=sorted(outgoing),
            incoming_labels=sorted(set(probes.incoming_labels)),
            snapshot_times=self._snapshot_times(),
            shell_radii=self._shell_radii(),
            regions={r.name: r.to_vertices() for r in probes.regions},
            stride=self.output.stride,
        )

    def backward_probe_set(self) -> ProbeSet:
        """Probes of the run started from the time-reversed data"""
        return ProbeSet(
            outgoing_labels=sorted({-s for s in self.probes.incoming_labels}),
            snapshot_times=self._snapshot_times(),
            shell_radii=self._shell_radii(),
            stride=self.output.stride,
        )

    def echo(self) -> Dict[str, Any]:
        return self.model_dump(mode='json')


def format_validation_error(error: ValidationError) -> str:
    """Field-level summary of a pydantic error list"""
    lines = []
    for item in error.errors():
        location = '.'.join(str(part) for part in item['loc']) or '<root>'
        lines.append(f"{location}: {item['msg']}")
    return '; '.join(lines)


def parse_scenario(data: Dict[str, Any]) -> ScenarioConfig:
    """
    Validate a raw scenario mapping

    Raises:
        ConfigurationError: With field-level messages for every schema violation
    """
    if not isinstance(data, dict):
        raise ConfigurationError("scenario file must contain a mapping at the top level")
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        message = format_validation_error(e)
        first = e.errors()[0]['loc'] if e.errors() else ()
        raise ConfigurationError(message, field='.'.join(str(p) for p in first) or None) from e


class InputValidator:
    """
    Lightweight checks on command-line inputs
    """

    def validate_threads(self, value: Any) -> Tuple[bool, str]:
        """
        Returns:
            Tuple[bool, str]: (is_valid, error_message)
        """
        try:
            threads = int(value)
        except (TypeError, ValueError):
            return False, f"threads must be an integer, got {value!r}"
        if threads < 1:
            return False, "threads must be at least 1"
        return True, ""

    def validate_config_path(self, path: Optional[str]) -> Tuple[bool, str]:
        if not path:
            return False, "--config is required"
        candidate = Path(path)
        if not candidate.is_file():
            return False, f"config file not found: {path}"
        if candidate.suffix.lower() not in ('.yaml', '.yml'):
            return False, f"config file must be YAML (.yaml/.yml): {path}"
        return True, ""

    def validate_output_dir(self, path: str) -> Tuple[bool, str]:
        candidate = Path(path)
        if candidate.exists() and not candidate.is_dir():
            return False, f"output path exists and is not a directory: {path}"
        return True, ""

    def validate_refinement_count(self, levels: List[float]) -> Tuple[bool, str]:
        if len(levels) < 3:
            return False, f"convergence study needs at least 3 refinement levels, got {len(levels)}"
        return True, ""

    def log_rejection(self, what: str, message: str) -> None:
        logger.warning(f"rejected {what}: {message}")


# Global validator instance
input_validator = InputValidator()
