"""
Radial Wave Lab - Data Models
Domain types shared by the numerical modules and the report layer
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Any, Tuple

import numpy as np

from constants import (
    P_MIN, P_MAX, LATTICE_TOLERANCE, ProfileKind, TraceKind, FluxKind,
    RadiationKind, VerdictStatus,
)
from utils.error_handlers import DomainError, LatticeError, ConfigurationError, ProbeError


def _to_list(values: Any) -> Any:
    """JSON-friendly conversion of numpy payloads"""
    if isinstance(values, np.ndarray):
        return values.tolist()
    if isinstance(values, (np.floating, np.integer)):
        return values.item()
    return values


def snap_to_lattice(value: float, dr: float, what: str = "value") -> int:
    """
    Convert a length or time to its lattice index

    Raises:
        LatticeError: If the value is not an integer multiple of dr
    """
    ratio = value / dr
    index = int(round(ratio))
    if abs(ratio - index) > LATTICE_TOLERANCE * max(1.0, abs(ratio)):
        raise LatticeError(f"{what}={value} is not a multiple of dr={dr}", field=what, value=value)
    return index


# =============================================================================
# MODEL
# =============================================================================

@dataclass(frozen=True)
class ModelParams:
    """Nonlinearity exponent; linear=True switches the source term off"""
    p: float
    linear: bool = False

    def __post_init__(self):
        if not (P_MIN <= self.p < P_MAX):
            raise DomainError(
                f"p={self.p} outside the valid interval [{P_MIN}, {P_MAX})", field="p", value=self.p
            )

    @property
    def potential_coefficient(self) -> float:
        """2/(p+1), weight of |w|^{p+1}/r^{p-1} in the energy density"""
        return 2.0 / (self.p + 1.0)

    @property
    def source_coefficient(self) -> float:
        """2*pi*(p-1)/(p+1), weight of the space-time integral of |w|^{p+1}/r^p"""
        return 2.0 * math.pi * (self.p - 1.0) / (self.p + 1.0)

    @property
    def decay_exponent(self) -> float:
        """(p-2)/(p+1), decay rate of the invariants towards the radiation fields"""
        return (self.p - 2.0) / (self.p + 1.0)

    def to_dict(self) -> Dict[str, Any]:
        return {'p': self.p, 'linear': self.linear}


@dataclass(frozen=True)
class CriticalExponents:
    """Critical Sobolev index, retardation exponent and decay-weight threshold"""
    s_p: float
    beta0: float
    kappa0: float

    def to_dict(self) -> Dict[str, float]:
        return {'s_p': self.s_p, 'beta0': self.beta0, 'kappa0': self.kappa0}


@dataclass(frozen=True)
class GridSpec:
    """
    Uniform radial lattice with dt = dr

    r_i = i*dr for i = 0..n_r, time steps t_n = n*dr for n = 0..n_steps.
    """
    dr: float
    r_max: float
    t_end: float
    lambda_: float = 1.0

    def __post_init__(self):
        if self.dr <= 0 or self.r_max <= 0 or self.t_end < 0:
            raise ConfigurationError(
                f"grid needs dr > 0, r_max > 0, t_end >= 0 (got {self.dr}, {self.r_max}, {self.t_end})"
            )
        if self.lambda_ != 1.0:
            raise ConfigurationError("characteristic transport requires dt/dr = 1", field="lambda", value=self.lambda_)
        snap_to_lattice(self.r_max, self.dr, "r_max")
        snap_to_lattice(self.t_end, self.dr, "t_end")

    @property
    def dt(self) -> float:
        return self.dr

    @property
    def n_r(self) -> int:
        return int(round(self.r_max / self.dr))

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dr))

    @property
    def radii(self) -> np.ndarray:
        return np.arange(self.n_r + 1, dtype=float) * self.dr

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1, dtype=float) * self.dr

    def node_index(self, r: float) -> int:
        index = snap_to_lattice(r, self.dr, "r")
        if not 0 <= index <= self.n_r:
            raise LatticeError(f"r={r} outside [0, {self.r_max}]", field="r", value=r)
        return index

    def step_index(self, t: float) -> int:
        index = snap_to_lattice(t, self.dr, "t")
        if not 0 <= index <= self.n_steps:
            raise LatticeError(f"t={t} outside [0, {self.t_end}]", field="t", value=t)
        return index

    def with_dr(self, dr: float) -> 'GridSpec':
        return GridSpec(dr=dr, r_max=self.r_max, t_end=self.t_end)

    def to_dict(self) -> Dict[str, Any]:
        return {'dr': self.dr, 'r_max': self.r_max, 't_end': self.t_end,
                'lambda': self.lambda_, 'n_r': self.n_r, 'n_steps': self.n_steps}


@dataclass
class RadialProfile:
    """Initial displacement profile u0 (with optional velocity profile u1)"""
    kind: ProfileKind
    amplitude: float = 0.0
    center: float = 0.0
    width: float = 1.0
    tail_exponent: Optional[float] = None
    truncation_radius: Optional[float] = None
    sample_radii: Optional[np.ndarray] = None
    sample_values: Optional[np.ndarray] = None
    velocity: Optional['RadialProfile'] = None

    @classmethod
    def zero(cls) -> 'RadialProfile':
        return cls(kind=ProfileKind.ZERO)

    @property
    def is_zero(self) -> bool:
        own_zero = self.kind == ProfileKind.ZERO or (
            self.kind != ProfileKind.CUSTOM_SAMPLES and self.amplitude == 0.0
        )
        return own_zero and (self.velocity is None or self.velocity.is_zero)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind.value,
            'amplitude': self.amplitude,
            'center': self.center,
            'width': self.width,
            'tail_exponent': self.tail_exponent,
            'truncation_radius': self.truncation_radius,
            'samples': None if self.sample_radii is None else len(self.sample_radii),
            'velocity': self.velocity.to_dict() if self.velocity else None,
        }


@dataclass
class FieldState:
    """
    One time slice: w and the Riemann invariants phi = w_r + w_t, psi = w_r - w_t

    w_t_cells holds int w_t dr over each cell [r_i, r_i+1] when the slice was built from
    profiles; the integrator uses it for an exact first step.
    """
    t: float
    w: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    dr: float
    w_t_cells: Optional[np.ndarray] = None

    @property
    def radii(self) -> np.ndarray:
        return np.arange(len(self.w), dtype=float) * self.dr

    @property
    def w_r(self) -> np.ndarray:
        return 0.5 * (self.phi + self.psi)

    @property
    def w_t(self) -> np.ndarray:
        return 0.5 * (self.phi - self.psi)

    def copy(self) -> 'FieldState':
        cells = None if self.w_t_cells is None else self.w_t_cells.copy()
        return FieldState(self.t, self.w.copy(), self.phi.copy(), self.psi.copy(), self.dr, cells)

    def to_dict(self) -> Dict[str, Any]:
        return {'t': self.t, 'dr': self.dr, 'w': _to_list(self.w),
                'phi': _to_list(self.phi), 'psi': _to_list(self.psi)}


@dataclass
class PointwiseBoundReport:
    """Maxima of |w|/sqrt(E r) and of the sharper p-dependent ratio"""
    energy_ratio: float
    power_ratio: float
    constant: float
    tolerance: float
    violation: bool

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


# =============================================================================
# EVOLUTION
# =============================================================================

@dataclass
class ProbeSet:
    """
    Diagnostics registered before a run

    Lengths and times are physical; they are snapped to the lattice by the recorder.
    Regions are polygons given as counterclockwise (r, t) vertex lists.
    """
    outgoing_labels: List[float] = field(default_factory=list)
    incoming_labels: List[float] = field(default_factory=list)
    snapshot_times: List[float] = field(default_factory=list)
    shell_radii: List[float] = field(default_factory=list)
    regions: Dict[str, List[Tuple[float, float]]] = field(default_factory=dict)
    vertical_nodes: Tuple[int, ...] = (1, 2, 4, 8)
    stride: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'outgoing_labels': list(self.outgoing_labels),
            'incoming_labels': list(self.incoming_labels),
            'snapshot_times': list(self.snapshot_times),
            'shell_radii': list(self.shell_radii),
            'regions': {k: [list(v) for v in vs] for k, vs in self.regions.items()},
            'stride': self.stride,
        }


@dataclass
class CharacteristicTrace:
    """Samples along one characteristic line through lattice nodes"""
    kind: TraceKind
    label: float
    t: np.ndarray
    r: np.ndarray
    w: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    source: np.ndarray
    running_source: np.ndarray

    @property
    def values(self) -> np.ndarray:
        """The invariant transported along the line"""
        return self.psi if self.kind == TraceKind.OUTGOING else self.phi

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind.value, 'label': self.label, 'samples': int(len(self.t)),
                't': _to_list(self.t), 'value': _to_list(self.values),
                'running_source': _to_list(self.running_source)}


@dataclass
class StepSeries:
    """Scalar diagnostics recorded at every step"""
    t: np.ndarray
    energy: np.ndarray
    e_minus: np.ndarray
    e_plus: np.ndarray
    potential: np.ndarray          # integral of |w|^{p+1}/r^{p-1} dr
    far_integral: np.ndarray       # integral of |w|^{p+1}/r^p dr
    u0_est: np.ndarray
    u0_richardson: np.ndarray
    phi0: np.ndarray


@dataclass
class LineFluxTable:
    """
    Full-line integrals accumulated over every lattice characteristic

    Outgoing index j labels tau = (j - n_r)*dr, incoming index j labels s = j*dr.
    Entries are raw time integrals; prefactors are applied by the energy ledger.
    """
    tau: np.ndarray
    out_potential: np.ndarray      # |w|^{p+1}/r^{p-1}
    out_phi_sq: np.ndarray         # phi^2
    out_m: np.ndarray              # |w|^{p+1}/r^p
    out_j: np.ndarray              # |w|^p/r^{p-1}
    s: np.ndarray
    in_potential: np.ndarray
    in_psi_sq: np.ndarray


@dataclass
class ShellSeries:
    """Per-step integrals split at a radius R"""
    radius: float
    kinetic_inside: np.ndarray     # integral over (0,R) of w_r^2 + w_t^2
    potential_inside: np.ndarray   # integral over (0,R) of |w|^{p+1}/r^{p-1}
    far_outside: np.ndarray        # integral over (R,inf) of |w|^{p+1}/r^p
    w_at_radius: np.ndarray
    boundary_term: np.ndarray      # 2*pi*[int (r/R) w_t w_r over (0,R) + int w_t w_r over (R,inf)]


@dataclass
class RegionRecord:
    """Itemized line integrals (without the pi factor) and the double integral of a polygon"""
    name: str
    vertices: List[Tuple[float, float]]
    edge_inward: List[float]
    edge_outward: List[float]
    edge_kinds: List[str]
    double_integral: float


@dataclass
class Trajectory:
    """Result of one run: snapshots plus full-resolution probe records"""
    grid: GridSpec
    params: ModelParams
    states: Dict[int, FieldState]
    series: StepSeries
    lines: LineFluxTable
    traces: Dict[Tuple[TraceKind, int], CharacteristicTrace]
    shells: Dict[int, ShellSeries]
    regions: Dict[str, RegionRecord]
    verticals: Dict[int, Dict[str, np.ndarray]]
    direction: int = 1

    @property
    def initial(self) -> FieldState:
        return self.states[0]

    @property
    def final(self) -> FieldState:
        return self.states[self.grid.n_steps]

    @property
    def origin_series(self) -> np.ndarray:
        """Columns (t, u0_est, u0_est_richardson) in physical time"""
        return np.column_stack([self.direction * self.series.t,
                                self.series.u0_est, self.series.u0_richardson])

    def state_at(self, t: float) -> FieldState:
        n = self.grid.step_index(abs(t))
        if n not in self.states:
            raise_missing('snapshot', t)
        return self.states[n]

    def trace(self, kind: TraceKind, label: float) -> CharacteristicTrace:
        key = (kind, snap_to_lattice(label, self.grid.dr, "label"))
        if key not in self.traces:
            raise_missing(f'{kind.value} trace', label)
        return self.traces[key]

    def shell(self, radius: float) -> ShellSeries:
        index = self.grid.node_index(radius)
        if index not in self.shells:
            raise_missing('shell radius', radius)
        return self.shells[index]

    def region(self, name: str) -> RegionRecord:
        if name not in self.regions:
            raise_missing('region', name)
        return self.regions[name]


def raise_missing(what: str, value: Any) -> None:
    raise ProbeError(f"{what} {value!r} was not registered before the run", field=what, value=value)


@dataclass
class TwoSidedTrajectory:
    """Forward run from the data and forward run from its time-reversed image"""
    forward: Trajectory
    backward: Trajectory

    @property
    def horizon(self) -> float:
        return min(self.forward.grid.t_end, self.backward.grid.t_end)

    @property
    def params(self) -> ModelParams:
        return self.forward.params


@dataclass
class ConvergenceReport:
    """Observed orders under dr halving"""
    refinements: List[float]
    errors: List[float]
    orders: List[float]
    drifts: List[float]
    drift_orders: List[float]
    exact_transport: bool
    mode: str

    @property
    def observed_order(self) -> float:
        finite = [o for o in self.orders if np.isfinite(o)]
        return min(finite) if finite else float('nan')

    def to_dict(self) -> Dict[str, Any]:
        data = dict(self.__dict__)
        data['observed_order'] = self.observed_order
        return data


# =============================================================================
# ENERGY LEDGER
# =============================================================================

@dataclass
class EnergyPartition:
    """Energy, truncated inward/outward energies and their shared potential part"""
    t: float
    E_total: float
    E_minus: float
    E_plus: float
    potential_part: float
    r1: float
    r2: float

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class FluxSegment:
    """Energy flux through a characteristic segment"""
    kind: FluxKind
    label: float
    window: Tuple[float, float]
    value: float

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind.value, 'label': self.label,
                'window': list(self.window), 'value': self.value}


@dataclass
class MuAccumulator:
    """Origin throughput measure represented by its density |u(0,t)|^2"""
    t: np.ndarray
    density_samples: np.ndarray
    P: np.ndarray

    def measure(self, t1: float, t2: float) -> float:
        return float(np.interp(t2, self.t, self.P) - np.interp(t1, self.t, self.P))

    @property
    def total(self) -> float:
        return float(self.P[-1]) if len(self.P) else 0.0


# =============================================================================
# SCATTERING
# =============================================================================

@dataclass
class RadiationProfile:
    """Radiation field samples on the time lattice"""
    kind: RadiationKind
    labels: np.ndarray
    values: np.ndarray
    extraction_time: float
    error_estimate: np.ndarray
    scattered_energy: float
    flagged_labels: int = 0

    @classmethod
    def zero(cls, kind: RadiationKind, labels: np.ndarray) -> 'RadiationProfile':
        zeros = np.zeros_like(labels, dtype=float)
        return cls(kind, labels, zeros, 0.0, zeros.copy(), 0.0)

    def to_frame_rows(self) -> List[Dict[str, float]]:
        return [{'label': float(l), 'g': float(g), 'error_estimate': float(e)}
                for l, g, e in zip(self.labels, self.values, self.error_estimate)]

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind.value, 'samples': int(len(self.labels)),
                'extraction_time': self.extraction_time,
                'scattered_energy': self.scattered_energy,
                'flagged_labels': self.flagged_labels}


@dataclass
class DecayFit:
    """Power-law fit of |invariant(t) - g| against t - tau"""
    label: float
    alpha: float
    constant: float
    window: Tuple[float, float]
    points: int
    below_noise_floor: bool

    def to_dict(self) -> Dict[str, Any]:
        return {'label': self.label, 'alpha': self.alpha, 'constant': self.constant,
                'window': list(self.window), 'points': self.points,
                'below_noise_floor': self.below_noise_floor}


@dataclass
class Theorem2Ledger:
    """Retarded-energy lower bound against the weighted-data escape bound"""
    R: float
    beta: float
    kappa: float
    lhs_lower: float
    rhs_upper: float
    raw_lhs: float
    raw_rhs: float
    retarded_window: float
    weighted_initial: float
    exponent_gap: float
    horizon_sufficient: bool

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


# =============================================================================
# REPORTS
# =============================================================================

@dataclass
class Verdict:
    """A checked claim with its measured value and tolerance"""
    name: str
    measured: float
    tolerance: float
    passed: bool
    provenance: str = "measured"
    flagged: bool = False
    detail: str = ""

    @property
    def status(self) -> VerdictStatus:
        if not self.passed:
            return VerdictStatus.FAIL
        return VerdictStatus.FLAGGED if self.flagged else VerdictStatus.PASS

    def to_dict(self) -> Dict[str, Any]:
        return {'name': self.name, 'measured': _to_list(self.measured),
                'tolerance': self.tolerance, 'status': self.status.value,
                'provenance': self.provenance, 'detail': self.detail}


@dataclass
class RunReport:
    """Everything a command emits besides the CSV tables"""
    command: str
    scenario: Dict[str, Any]
    sections: Dict[str, Any] = field(default_factory=dict)
    verdicts: List[Verdict] = field(default_factory=list)
    metadata: Optional[Dict[str, Any]] = None

    @property
    def all_passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def add(self, verdict: Verdict) -> Verdict:
        self.verdicts.append(verdict)
        return verdict

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'command': self.command,
            'scenario': self.scenario,
            'sections': _jsonable(self.sections),
            'verdicts': [v.to_dict() for v in self.verdicts],
            'all_passed': self.all_passed,
        }
        if self.metadata is not None:
            data['metadata'] = self.metadata
        return _jsonable(data)


def _jsonable(payload: Any) -> Any:
    if hasattr(payload, 'to_dict'):
        return _jsonable(payload.to_dict())
    if isinstance(payload, dict):
        return {str(k): _jsonable(v) for k, v in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [_jsonable(v) for v in payload]
    if isinstance(payload, float) and not math.isfinite(payload):
        return None
    if isinstance(payload, (np.ndarray, np.floating, np.integer)):
        return _jsonable(_to_list(payload))
    if isinstance(payload, (np.bool_,)):
        return bool(payload)
    return payload
