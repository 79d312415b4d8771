"""
Radial Wave Lab - Energy Ledger
Energies, characteristic fluxes, the origin measure, flux identities and Morawetz reports
"""

import math
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate
from loguru import logger

from constants import (
    TraceKind, FluxKind, FLUX_KINDS_BY_TRACE, Family, ACCEPTANCE, FLUX_BOUND_TOLERANCE,
)
from utils.data_models import (
    ModelParams, FieldState, EnergyPartition, FluxSegment, MuAccumulator, CharacteristicTrace,
    Trajectory, TwoSidedTrajectory, RegionRecord, snap_to_lattice,
)
from utils.error_handlers import DomainError, LatticeError, ProbeError

Vertices = List[Tuple[float, float]]


def potential_weight(params: ModelParams) -> float:
    """2/(p+1), or 0 when the source is switched off"""
    return 0.0 if params.linear else params.potential_coefficient


def source_weight(params: ModelParams) -> float:
    """2*pi*(p-1)/(p+1), or 0 when the source is switched off"""
    return 0.0 if params.linear else params.source_coefficient


def potential_density(w: np.ndarray, r: np.ndarray, params: ModelParams) -> np.ndarray:
    """|w|^{p+1}/r^{p-1} with the continuous extension 0 at the origin"""
    w = np.asarray(w, dtype=float)
    r = np.asarray(r, dtype=float)
    out = np.zeros(np.broadcast(w, r).shape)
    if params.linear:
        return out
    positive = r > 0
    out[positive] = np.abs(w[positive]) ** (params.p + 1.0) / r[positive] ** (params.p - 1.0)
    return out


# =============================================================================
# ENERGIES
# =============================================================================

def energy_of_state(state: FieldState, params: ModelParams) -> float:
    """E = 2*pi * int (w_r^2 + w_t^2 + 2/(p+1) |w|^{p+1}/r^{p-1}) dr, trapezoid on the lattice"""
    density = 0.5 * (state.phi ** 2 + state.psi ** 2)
    density = density + potential_weight(params) * potential_density(state.w, state.radii, params)
    return float(2.0 * math.pi * integrate.trapezoid(density, dx=state.dr))


def clipped_integral(values: np.ndarray, h: float, r1: float, r2: float) -> float:
    """Exact integral over [r1, r2] of the piecewise linear interpolant of node values"""
    cumulative = integrate.cumulative_trapezoid(values, dx=h, initial=0.0)
    last = len(values) - 1

    def antiderivative(x: float) -> float:
        x = min(max(x, 0.0), last * h)
        i = min(int(math.floor(x / h)), last - 1)
        theta = x / h - i
        return cumulative[i] + h * (values[i] * theta + 0.5 * (values[i + 1] - values[i]) * theta * theta)

    return float(antiderivative(r2) - antiderivative(r1))


def partition_energies(state: FieldState, r1: float, r2: Optional[float], params: ModelParams) -> EnergyPartition:
    """
    Truncated inward and outward energies over [r1, r2]

    E_-(t; r1, r2) = pi * int (phi^2 + 2/(p+1) |w|^{p+1}/r^{p-1}) dr, E_+ with psi^2.
    r2=None (or beyond the grid) means the whole remaining grid.

    Raises:
        DomainError: If r1 >= r2 or r1 < 0
    """
    r_max = state.radii[-1]
    r2 = r_max if r2 is None or r2 > r_max else r2
    if r1 < 0 or r1 >= r2:
        raise DomainError(f"partition needs 0 <= r1 < r2 (got r1={r1}, r2={r2})", field="r1", value=r1)

    h = state.dr
    pot = potential_weight(params) * clipped_integral(potential_density(state.w, state.radii, params), h, r1, r2)
    e_minus = math.pi * (clipped_integral(state.phi ** 2, h, r1, r2) + pot)
    e_plus = math.pi * (clipped_integral(state.psi ** 2, h, r1, r2) + pot)
    return EnergyPartition(
        t=state.t,
        E_total=e_minus + e_plus,
        E_minus=e_minus,
        E_plus=e_plus,
        potential_part=2.0 * math.pi * pot,
        r1=float(r1),
        r2=float(r2),
    )


def energy_densities(state: FieldState, params: ModelParams) -> Tuple[np.ndarray, np.ndarray]:
    """
    Reduced (w-form) and three-dimensional (u-form) energy densities per unit r

    The u-form is 4*pi*r^2 times the usual density:
    2*pi*(w_r - w/r)^2 + 2*pi*w_t^2 + 4*pi/(p+1) |w|^{p+1}/r^{p-1}.
    """
    r = state.radii
    w_r, w_t = state.w_r, state.w_t
    pot = potential_weight(params) * potential_density(state.w, r, params)
    w_form = 2.0 * math.pi * (w_r ** 2 + w_t ** 2 + pot)
    slope = np.zeros_like(r)
    slope[1:] = w_r[1:] - state.w[1:] / r[1:]
    u_form = 2.0 * math.pi * (slope ** 2 + w_t ** 2 + pot)
    u_form[0] = 0.0
    return w_form, u_form


def energy_transformation_terms(state: FieldState, a: float, b: float, params: ModelParams) -> Dict[str, float]:
    """
    u-form and w-form energies over the shell [a, b] and the boundary term relating them

    w_form - u_form = 2*pi*(b|u(b)|^2 - a|u(a)|^2) with r|u(r)|^2 = w(r)^2/r.
    """
    if a < 0 or a >= b:
        raise DomainError(f"shell needs 0 <= a < b (got {a}, {b})", field="a", value=a)
    h = state.dr
    w_form, u_form = energy_densities(state, params)

    def w_over_r(x: float) -> float:
        if x <= 0:
            return 0.0
        value = float(np.interp(x, state.radii, state.w))
        return value * value / x

    boundary = 2.0 * math.pi * (w_over_r(b) - w_over_r(a))
    return {
        'a': float(a),
        'b': float(b),
        'u_form': clipped_integral(u_form, h, a, b),
        'w_form': clipped_integral(w_form, h, a, b),
        'boundary_term': boundary,
    }


def inside_energy(state: FieldState, R: float, params: ModelParams) -> float:
    """Three-dimensional energy inside the ball of radius R"""
    return energy_transformation_terms(state, 0.0, R, params)['u_form']


def exterior_energy(state: FieldState, r0: float, params: ModelParams) -> float:
    """Three-dimensional energy outside radius r0 on the grid"""
    if r0 <= 0:
        return energy_of_state(state, params)
    _, u_form = energy_densities(state, params)
    return clipped_integral(u_form, state.dr, r0, state.radii[-1])


# =============================================================================
# FLUXES AND THE ORIGIN MEASURE
# =============================================================================

def _trace_window(trace: CharacteristicTrace, t1: float, t2: float, h: float) -> slice:
    n1, n2 = snap_to_lattice(t1, h, "t1"), snap_to_lattice(t2, h, "t2")
    first = snap_to_lattice(trace.t[0], h, "trace.t")
    count = len(trace.t)
    if n1 > n2 or n1 < first or n2 > first + count - 1:
        raise LatticeError(
            f"window ({t1}, {t2}) outside trace samples [{trace.t[0]}, {trace.t[-1]}]",
            field="window", value=(t1, t2),
        )
    return slice(n1 - first, n2 - first + 1)


def flux_segment(trace: CharacteristicTrace, t1: float, t2: float, params: ModelParams,
                 kind: Optional[FluxKind] = None) -> FluxSegment:
    """
    Energy flux through the part of a characteristic between t1 and t2

    Incoming lines carry Q_minus_minus (4*pi/(p+1) int |w|^{p+1}/(s-t)^{p-1} dt) and
    Q_plus_minus (2*pi int |w_r - w_t|^2 dt); outgoing lines carry Q_minus_plus
    (2*pi int |w_r + w_t|^2 dt) and Q_plus_plus (4*pi/(p+1) int |w|^{p+1}/(t-tau)^{p-1} dt).

    Raises:
        LatticeError: If the window is misaligned or outside the trace
        ProbeError: If the kind does not belong to the trace family
    """
    allowed = FLUX_KINDS_BY_TRACE[trace.kind]
    kind = kind or allowed[0 if trace.kind == TraceKind.INCOMING else 1]
    if kind not in allowed:
        raise ProbeError(f"{kind.value} is not measured on {trace.kind.value} lines", field="kind", value=kind.value)

    if len(trace.t) < 2:
        if len(trace.t) == 1 and math.isclose(t1, trace.t[0]) and math.isclose(t2, trace.t[0]):
            return FluxSegment(kind, trace.label, (float(t1), float(t2)), 0.0)
        raise LatticeError(f"window ({t1}, {t2}) outside the trace samples", field="window", value=(t1, t2))

    window = _trace_window(trace, t1, t2, float(trace.t[1] - trace.t[0]))
    t = trace.t[window]
    if len(t) < 2:
        return FluxSegment(kind, trace.label, (float(t1), float(t2)), 0.0)

    if kind in (FluxKind.Q_MINUS_MINUS, FluxKind.Q_PLUS_PLUS):
        integrand = 2.0 * potential_weight(params) * potential_density(trace.w[window], trace.r[window], params)
    elif kind == FluxKind.Q_PLUS_MINUS:
        integrand = 2.0 * trace.psi[window] ** 2
    else:
        integrand = 2.0 * trace.phi[window] ** 2
    value = float(math.pi * integrate.trapezoid(integrand, t))
    return FluxSegment(kind, trace.label, (float(t1), float(t2)), value)


def mu_accumulator(trajectory: Trajectory) -> MuAccumulator:
    """Density |u(0,t)|^2 from the Richardson origin estimate and its running integral"""
    t = trajectory.series.t
    density = trajectory.series.u0_richardson ** 2
    P = integrate.cumulative_trapezoid(density, t, initial=0.0)
    return MuAccumulator(t=t, density_samples=density, P=P)


def mu_accumulate(trajectory: Union[Trajectory, TwoSidedTrajectory], t1: float, t2: float) -> float:
    """
    int_{t1}^{t2} |u(0,t)|^2 dt in physical time

    Two-sided trajectories split the window at t = 0.

    Raises:
        ProbeError: If the window leaves the recorded horizon
    """
    if t1 > t2:
        return -mu_accumulate(trajectory, t2, t1)
    if isinstance(trajectory, TwoSidedTrajectory):
        total = 0.0
        if t2 > 0:
            total += mu_accumulate(trajectory.forward, max(t1, 0.0), t2)
        if t1 < 0:
            total += mu_accumulate(trajectory.backward, t1, min(t2, 0.0))
        return total

    d = trajectory.direction
    lo, hi = sorted((d * t1, d * t2))
    if lo < -1e-12 or hi > trajectory.grid.t_end + 1e-12:
        raise ProbeError(f"window ({t1}, {t2}) outside the recorded horizon", field="window", value=(t1, t2))
    return mu_accumulator(trajectory).measure(lo, hi)


def outgoing_line_fluxes(trajectory: Trajectory, params: ModelParams) -> Dict[str, np.ndarray]:
    """Full-line fluxes and the appendix integrals on every lattice outgoing line"""
    lines = trajectory.lines
    c = potential_weight(params)
    return {
        'tau': lines.tau,
        'Q_plus_plus': 2.0 * math.pi * c * lines.out_potential,
        'Q_minus_plus': 2.0 * math.pi * lines.out_phi_sq,
        'M': lines.out_m,
        'J': lines.out_j,
    }


def incoming_line_fluxes(trajectory: Trajectory, params: ModelParams) -> Dict[str, np.ndarray]:
    """Full-line fluxes on every lattice incoming line"""
    lines = trajectory.lines
    c = potential_weight(params)
    return {
        's': lines.s,
        'Q_minus_minus': 2.0 * math.pi * c * lines.in_potential,
        'Q_plus_minus': 2.0 * math.pi * lines.in_psi_sq,
    }


def double_integral(trajectory: Trajectory) -> float:
    """int_0^T int_0^inf |w|^{p+1}/r^p dr dt (recorded direction)"""
    return float(integrate.trapezoid(trajectory.series.far_integral, dx=trajectory.grid.dt))


# =============================================================================
# FLUX IDENTITIES
# =============================================================================

def triangle_vertices(t0: float, r0: float) -> Vertices:
    """Counterclockwise triangle {t > t0, r > 0, r + t < t0 + r0}"""
    return [(0.0, t0), (r0, t0), (0.0, t0 + r0)]


def rectangle_vertices(r1: float, r2: float, t1: float, t2: float) -> Vertices:
    return [(r1, t1), (r2, t1), (r2, t2), (r1, t2)]


def parallelogram_vertices(r1: float, r2: float, t0: float, height: float) -> Vertices:
    """Region between the incoming lines through (r1, t0) and (r2, t0), cut at t0 + height"""
    return [(r1, t0), (r2, t0), (r2 - height, t0 + height), (r1 - height, t0 + height)]


def _lookup_region(trajectory: Trajectory, region: Union[str, Vertices]) -> RegionRecord:
    if isinstance(region, str):
        return trajectory.region(region)
    wanted = [(float(r), float(t)) for r, t in region]
    for record in trajectory.regions.values():
        if len(record.vertices) == len(wanted) and np.allclose(record.vertices, wanted, atol=1e-12):
            return record
    raise ProbeError(f"region {wanted} was not registered before the run", field="region", value=wanted)


def region_terms(trajectory: Trajectory, region: Union[str, Vertices], family: Family,
                 params: ModelParams) -> Dict[str, Any]:
    """
    Itemized boundary integrals of one region together with the double integral term

    Line integrals are already multiplied by pi; the identity reads
    sum(lines) = k * double for the inward family and sum(lines) = -k * double for the
    outward family, k = 2*pi*(p-1)/(p+1).
    """
    record = _lookup_region(trajectory, region)
    raw = record.edge_inward if family == Family.INWARD else record.edge_outward
    lines = [math.pi * v for v in raw]
    double = source_weight(params) * record.double_integral
    sign = 1.0 if family == Family.INWARD else -1.0
    residual = abs(sum(lines) - sign * double)
    return {
        'region': record.name,
        'family': family.value,
        'vertices': record.vertices,
        'edges': [{'kind': k, 'value': v} for k, v in zip(record.edge_kinds, lines)],
        'line_sum': sum(lines),
        'double_integral_term': double,
        'residual': residual,
    }


def flux_identity_residual(trajectory: Trajectory, region: Union[str, Vertices], family: Family,
                           params: ModelParams) -> float:
    """Absolute residual of the Green's theorem flux identity on a registered lattice polygon"""
    return region_terms(trajectory, region, family, params)['residual']


def triangle_law_report(trajectory: Trajectory, t0: float, r0: float, params: ModelParams) -> Dict[str, float]:
    """
    E_-(t0; 0, r0) = pi*mu((t0, t0+r0)) + Q_minus_minus(t0+r0; t0, t0+r0) + double integral

    Raises:
        ProbeError: If the triangle was not registered
    """
    terms = region_terms(trajectory, triangle_vertices(t0, r0), Family.INWARD, params)
    bottom, hypotenuse, axis = (e['value'] for e in terms['edges'])
    e_minus = bottom
    mu_term = -axis
    q_term = -hypotenuse
    double = terms['double_integral_term']
    return {
        't0': float(t0),
        'r0': float(r0),
        'E_minus': e_minus,
        'mu_term': mu_term,
        'Q_minus_minus': q_term,
        'double_integral_term': double,
        'residual': abs(e_minus - mu_term - q_term - double),
    }


def parallelogram_report(trajectory: Trajectory, r1: float, r2: float, t0: float, height: float,
                         params: ModelParams) -> Dict[str, float]:
    """
    Inward identity on a parallelogram with incoming sides

    E_-(t0; r1, r2) = E_-(t0+height; r1-height, r2-height) + Q_minus_minus(r2+t0) - Q_minus_minus(r1+t0)
    + double integral.
    """
    terms = region_terms(trajectory, parallelogram_vertices(r1, r2, t0, height), Family.INWARD, params)
    bottom, right, top, left = (e['value'] for e in terms['edges'])
    return {
        'r1': float(r1),
        'r2': float(r2),
        't0': float(t0),
        'height': float(height),
        'E_minus_bottom': bottom,
        'E_minus_top': -top,
        'Q_outer': -right,
        'Q_inner': left,
        'double_integral_term': terms['double_integral_term'],
        'residual': terms['residual'],
    }


def residual_orders(residuals: Sequence[float]) -> List[float]:
    """log2 of consecutive residual ratios under dr halving"""
    orders = []
    for coarse, fine in zip(residuals[:-1], residuals[1:]):
        orders.append(math.log2(coarse / fine) if coarse > 0 and fine > 0 else float('nan'))
    return orders


def energy_identity_check(trajectory: TwoSidedTrajectory, params: ModelParams,
                          scattered_energy: Optional[float] = None,
                          tolerance: float = ACCEPTANCE['bookkeeping_relative']) -> Dict[str, Any]:
    """
    Global bookkeeping over [-T, T]

    pi*mu([-T, T]) + k * double integral over [-T, T] x (0, inf) equals E up to the tail
    E_-(T) + E_+(-T); the closed residual adds the tail back and vanishes to scheme order.
    """
    fwd, bwd = trajectory.forward, trajectory.backward
    E = float(fwd.series.energy[0])
    mu_total = mu_accumulator(fwd).total + mu_accumulator(bwd).total
    double = source_weight(params) * (double_integral(fwd) + double_integral(bwd))
    lhs = math.pi * mu_total + double
    tail = float(fwd.series.e_minus[-1] + bwd.series.e_minus[-1])
    horizon_sufficient = tail <= tolerance * E if E > 0 else True
    if not horizon_sufficient:
        logger.warning(f"bookkeeping horizon T={trajectory.horizon:g} leaves tail {tail:.3e} of E={E:.6g}")

    report = {
        'horizon': trajectory.horizon,
        'E': E,
        'mu_term': math.pi * mu_total,
        'double_integral_term': double,
        'lhs': lhs,
        'residual': abs(lhs - E),
        'tail': tail,
        'closed_residual': abs(lhs + tail - E),
        'horizon_sufficient': horizon_sufficient,
    }
    if scattered_energy is not None:
        report['scattered_energy'] = float(scattered_energy)
        report['scattered_deficit'] = E - float(scattered_energy)
        report['outgoing_at_horizon'] = float(fwd.series.e_plus[-1])
    return report


def monotonicity_report(trajectory: Trajectory, params: ModelParams) -> Dict[str, float]:
    """Worst violations of E_- nonincreasing and E_+ nondecreasing plus the partition defect"""
    s = trajectory.series
    E = float(s.energy[0])
    e_minus_violation = float(np.max(s.e_minus - np.minimum.accumulate(s.e_minus)))
    e_plus_violation = float(np.max(np.maximum.accumulate(s.e_plus) - s.e_plus))
    scale = E if E > 0 else 1.0
    incoming = incoming_line_fluxes(trajectory, params)['Q_minus_minus']
    return {
        'E': E,
        'e_minus_violation': e_minus_violation / scale,
        'e_plus_violation': e_plus_violation / scale,
        'partition_defect': float(np.max(np.abs(s.e_minus + s.e_plus - s.energy))) / scale,
        'final_inward_ratio': float(s.e_minus[-1]) / scale if E > 0 else 0.0,
        'final_potential': float(s.potential[-1]),
        'initial_potential': float(s.potential[0]),
        'max_incoming_flux': float(np.max(incoming)) if len(incoming) else 0.0,
        'max_outgoing_flux': float(np.max(outgoing_line_fluxes(trajectory, params)['Q_plus_plus'])),
    }


def mu_limit_crosscheck(trajectory: Trajectory, params: ModelParams) -> Dict[str, Any]:
    """
    Inward flux int (phi^2 - 2/(p+1)|w|^{p+1}/r^{p-1}) dt through r = k*dr against mu
    """
    h = trajectory.grid.dr
    t = trajectory.series.t
    c = potential_weight(params)
    mu = mu_accumulator(trajectory).total
    values = {}
    for k, columns in sorted(trajectory.verticals.items()):
        r_k = np.full_like(t, k * h)
        integrand = columns['phi'] ** 2 - c * potential_density(columns['w'], r_k, params)
        values[k * h] = float(integrate.trapezoid(integrand, t))
    gaps = [abs(v - mu) for _, v in sorted(values.items())]
    return {
        'mu': mu,
        'vertical_fluxes': values,
        'gaps': gaps,
        'approaches_mu': all(a <= b + 1e-14 for a, b in zip(gaps[:-1], gaps[1:])),
    }


# =============================================================================
# MORAWETZ
# =============================================================================

def time_window_integral(values: np.ndarray, h: float, t_lo: float, t_hi: float) -> float:
    n_lo = int(round(t_lo / h))
    n_hi = min(int(round(t_hi / h)), len(values) - 1)
    if n_hi <= n_lo:
        return 0.0
    return float(integrate.trapezoid(values[n_lo:n_hi + 1], dx=h))


def inside_energy_series(trajectory: Trajectory, R: float, params: ModelParams) -> np.ndarray:
    """E(t; |x| < R) per step from the recorded shell integrals"""
    shell = trajectory.shell(R)
    return (2.0 * math.pi * shell.kinetic_inside
            - 2.0 * math.pi * shell.w_at_radius ** 2 / R
            + 2.0 * math.pi * potential_weight(params) * shell.potential_inside)


def corollary_integrals(trajectory: TwoSidedTrajectory, R: float, params: ModelParams) -> Dict[str, Dict[str, float]]:
    """The four space-time integrals controlled by the Morawetz estimate, with explicit bounds"""
    p = params.p
    h = trajectory.forward.grid.dr
    T = trajectory.horizon
    E = float(trajectory.forward.series.energy[0])

    def both(attribute: str, transform=lambda x: x) -> float:
        return sum(time_window_integral(transform(getattr(traj.shell(R), attribute)), h, 0.0, T)
                   for traj in (trajectory.forward, trajectory.backward))

    kinetic = both('kinetic_inside')
    potential = both('potential_inside')
    far = both('far_outside')
    origin_trace = both('w_at_radius', lambda w: (w / R) ** 2)
    entries = {
        'kinetic_inside': (kinetic, R * E / math.pi),
        'potential_inside': (potential, (p + 1.0) * R * E / (2.0 * (p - 2.0) * math.pi)),
        'far_outside': (far, (p + 1.0) * E / (2.0 * (p - 1.0) * math.pi)),
        'u_at_radius_sq': (origin_trace, E / math.pi),
    }
    return {name: {'value': v, 'bound': b, 'holds': v <= b * (1.0 + FLUX_BOUND_TOLERANCE)}
            for name, (v, b) in entries.items()}


def morawetz_report(trajectory: TwoSidedTrajectory, R: float, params: ModelParams,
                    tolerance: float = ACCEPTANCE['morawetz_relative']) -> Dict[str, Any]:
    """
    Finite-horizon Morawetz terms at radius R over [-T, T]

    Returns the four left-hand terms with their sum, the identity residual against the
    boundary terms at +-T, the boundary tail E - (B(-T) - B(T)) the defect E - sum must
    match, the corollary integrals and both sides of the inside/outside energy
    distribution inequality.

    Raises:
        ProbeError: If R was not registered as a shell radius
    """
    p = params.p
    fwd, bwd = trajectory.forward, trajectory.backward
    h = fwd.grid.dr
    T = trajectory.horizon
    E = float(fwd.series.energy[0])
    c = potential_weight(params)

    def both(values_of) -> float:
        return sum(time_window_integral(values_of(traj), h, 0.0, T) for traj in (fwd, bwd))

    kinetic = both(lambda tr: tr.shell(R).kinetic_inside)
    w_sq = both(lambda tr: tr.shell(R).w_at_radius ** 2)
    potential = both(lambda tr: tr.shell(R).potential_inside)
    far = both(lambda tr: tr.shell(R).far_outside)

    linear = params.linear
    terms = {
        'inside_energy_average': (2.0 * math.pi * kinetic - 2.0 * math.pi * w_sq / R
                                  + 2.0 * math.pi * c * potential) / (2.0 * R),
        'boundary_trace': math.pi * w_sq / R ** 2,
        'potential_correction': 0.0 if linear else 2.0 * math.pi * (p - 3.0) / ((p + 1.0) * R) * potential,
        'far_field': 0.0 if linear else 2.0 * math.pi * (p - 1.0) / (p + 1.0) * far,
    }
    total = sum(terms.values())
    b_end = float(fwd.shell(R).boundary_term[-1])
    b_start = -float(bwd.shell(R).boundary_term[-1])
    identity_rhs = b_start - b_end

    inside_fwd = inside_energy_series(fwd, R, params)
    inside_bwd = inside_energy_series(bwd, R, params)
    R_eff = min(R, T)
    raw_lhs = time_window_integral(inside_fwd, h, R, T) + time_window_integral(inside_bwd, h, R, T)
    raw_rhs = (time_window_integral(fwd.series.energy - inside_fwd, h, 0.0, R_eff)
               + time_window_integral(bwd.series.energy - inside_bwd, h, 0.0, R_eff))
    horizon_sufficient = T >= 2.0 * R
    if not horizon_sufficient:
        logger.warning(f"Morawetz radius R={R:g} with horizon T={T:g} < 2R: outside-ball window truncated")

    return {
        'R': float(R),
        'horizon': T,
        'E': E,
        'terms': terms,
        'sum': total,
        'sum_bounded': total <= E * (1.0 + tolerance),
        'identity_rhs': identity_rhs,
        'boundary_terms': abs(b_start) + abs(b_end),
        'defect': E - total,
        'boundary_tail': E - identity_rhs,
        'identity_residual': abs(total - identity_rhs),
        'corollary': corollary_integrals(trajectory, R, params),
        'distribution_lhs': raw_lhs,
        'distribution_rhs': raw_rhs,
        'distribution_holds': raw_lhs <= raw_rhs * (1.0 + ACCEPTANCE['distribution_relative']) + 1e-14,
        'horizon_sufficient': horizon_sufficient,
    }
