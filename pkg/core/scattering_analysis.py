"""
Radial Wave Lab - Scattering Analysis
Radiation fields, free-wave comparisons, retarded-energy localization and the weighted-energy ledger
"""

import math
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import integrate
from loguru import logger

from constants import (
    RadiationKind, TraceKind, MIN_EXTRACTION_SPAN, NOISE_FLOOR, DENSITY_FLOOR, FLUX_BOUND_TOLERANCE,
)
from core.energy_ledger import (
    energy_densities, inside_energy_series, outgoing_line_fluxes,
    mu_accumulate, double_integral, partition_energies, potential_weight, clipped_integral, time_window_integral,
)
from core.evolve import odd_extension
from core.radial_core import critical_exponents
from utils.data_models import (
    ModelParams, FieldState, RadialProfile, RadiationProfile, DecayFit, Theorem2Ledger,
    Trajectory, TwoSidedTrajectory, snap_to_lattice,
)
from utils.error_handlers import DomainError, ProbeError

AnyTrajectory = Union[Trajectory, TwoSidedTrajectory]


def _pick(trajectory: AnyTrajectory, kind: RadiationKind) -> Trajectory:
    """Forward run for g_plus, time-reversed run for g_minus"""
    if isinstance(trajectory, TwoSidedTrajectory):
        return trajectory.forward if kind == RadiationKind.G_PLUS else trajectory.backward
    expected = 1 if kind == RadiationKind.G_PLUS else -1
    if trajectory.direction != expected:
        raise ProbeError(f"{kind.value} needs a run with direction {expected:+d}", field="direction",
                         value=trajectory.direction)
    return trajectory


# =============================================================================
# RADIATION FIELDS
# =============================================================================

def _trace_envelope_constant(trajectory: Trajectory, decay: float, min_span: float) -> float:
    """Largest |invariant(t) - final value| * (t - tau)^decay over the registered outgoing traces"""
    constant = 0.0
    for (kind, _), trace in trajectory.traces.items():
        if kind != TraceKind.OUTGOING or len(trace.t) < 2:
            continue
        elapsed = trace.t - trace.label
        mask = elapsed >= min_span
        if not np.any(mask):
            continue
        gap = np.abs(trace.psi[mask] - trace.psi[-1])
        constant = max(constant, float(np.max(gap * elapsed[mask] ** decay)))
    return constant


def extract_g(trajectory: AnyTrajectory, labels: Optional[Sequence[float]], params: ModelParams,
              kind: RadiationKind = RadiationKind.G_PLUS,
              min_span: float = MIN_EXTRACTION_SPAN,
              at_time: Optional[float] = None) -> RadiationProfile:
    """
    Read the radiation field off the last time slice

    g_plus(tau) is psi at (t_end - tau, t_end) of the forward run. g_minus(s) is the same
    invariant of the time-reversed run at label s = r - t_end. The decay law only sets the
    error bar.

    Args:
        trajectory: Forward run, reversed run or both
        labels: Lattice labels (tau or s); None means every label the final slice reaches
        params: Model parameters
        kind: g_plus or g_minus
        min_span: Traces shorter than this are counted in flagged_labels
        at_time: Extraction time (a registered snapshot); defaults to t_end

    Returns:
        RadiationProfile: Samples, error estimates and scattered energy pi * int |g|^2
    """
    run = _pick(trajectory, kind)
    grid = run.grid
    h, n_r = grid.dr, grid.n_r
    n_steps = grid.n_steps if at_time is None else grid.step_index(abs(at_time))
    psi = run.state_at(n_steps * h).psi
    t_read = n_steps * h
    sign = 1.0 if kind == RadiationKind.G_PLUS else -1.0

    if labels is None:
        indices = np.arange(n_steps - n_r, n_steps + 1)
    else:
        indices = np.array(sorted({snap_to_lattice(sign * label, h, "label") for label in labels}), dtype=int)
    taus = indices * h
    nodes = n_steps - indices
    inside = (nodes >= 0) & (nodes <= n_r)
    values = np.zeros(len(indices))
    values[inside] = psi[nodes[inside]]

    spans = t_read - np.maximum(taus, 0.0)
    flagged = int(np.sum((spans < min_span) | ~inside))

    decay = params.decay_exponent
    constant = _trace_envelope_constant(run, decay, min_span)
    if constant == 0.0 and not params.linear and not run.traces:
        logger.warning("extract_g: no outgoing traces registered, error estimates set to 0")
    error = constant * np.maximum(spans, min_span) ** (-decay)

    out_labels = sign * taus
    order = np.argsort(out_labels)
    out_labels, values, error = out_labels[order], values[order], error[order]
    scattered = float(math.pi * integrate.trapezoid(values ** 2, out_labels)) if len(values) > 1 else 0.0

    E = float(run.series.energy[0])
    if scattered > E * (1.0 + FLUX_BOUND_TOLERANCE) and E > 0:
        logger.warning(f"scattered energy {scattered:.8g} exceeds E={E:.8g}")

    return RadiationProfile(
        kind=kind,
        labels=out_labels,
        values=values,
        extraction_time=float(t_read),
        error_estimate=error,
        scattered_energy=scattered,
        flagged_labels=flagged,
    )


def linear_radiation_profile(profile: RadialProfile, labels: np.ndarray) -> np.ndarray:
    """Exact g_plus of the free wave: W0'(tau) + W1(tau) with W the odd extensions"""
    labels = np.asarray(labels, dtype=float)
    _, d0 = odd_extension(profile, labels)
    w1, _ = odd_extension(profile.velocity, labels)
    return d0 + w1


def decay_fit(trajectory: AnyTrajectory, label: float, window: Optional[Tuple[float, float]] = None) -> DecayFit:
    """
    Least-squares fit of log|psi(t) - g| against log(t - tau) on an outgoing trace

    Returns:
        DecayFit: alpha is minus the fitted slope; below_noise_floor when the differences
        never exceed the noise floor
    """
    run = _pick(trajectory, RadiationKind.G_PLUS)
    trace = run.trace(TraceKind.OUTGOING, label)
    h = run.grid.dr
    start = max(label, 0.0)
    t_end = float(trace.t[-1]) if len(trace.t) else start
    if window is None:
        span = t_end - start
        window = (start + max(4.0 * h, span / 200.0), start + span / 2.0)

    g = trace.psi[-1] if len(trace.psi) else 0.0
    mask = (trace.t >= window[0]) & (trace.t <= window[1]) & (trace.t > label)
    elapsed = trace.t[mask] - label
    gap = np.abs(trace.psi[mask] - g)
    usable = gap > NOISE_FLOOR

    if not np.any(gap > NOISE_FLOOR) or np.count_nonzero(usable) < 3:
        return DecayFit(float(label), float('nan'), 0.0, (float(window[0]), float(window[1])),
                        int(np.count_nonzero(mask)), True)

    slope, intercept = np.polyfit(np.log(elapsed[usable]), np.log(gap[usable]), 1)
    return DecayFit(
        label=float(label),
        alpha=float(-slope),
        constant=float(math.exp(intercept)),
        window=(float(window[0]), float(window[1])),
        points=int(np.count_nonzero(usable)),
        below_noise_floor=False,
    )


# =============================================================================
# FREE WAVES
# =============================================================================

def free_wave_eval(profile: RadiationProfile, r, t) -> Tuple[Any, Any, Any]:
    """
    V = 1/2 int_{t-r}^{t+r} g, V_r = (g(t+r) + g(t-r))/2, V_t = (g(t+r) - g(t-r))/2

    g is extended by zero outside its samples.
    """
    r_arr, t_arr = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
    labels, values = profile.labels, profile.values
    if len(labels) == 0:
        zeros = np.zeros_like(r_arr)
        return (0.0, 0.0, 0.0) if zeros.ndim == 0 else (zeros, zeros.copy(), zeros.copy())

    primitive = integrate.cumulative_trapezoid(values, labels, initial=0.0) if len(labels) > 1 else np.zeros(1)

    def G(x):
        return np.interp(x, labels, primitive, left=0.0, right=primitive[-1])

    def g(x):
        return np.interp(x, labels, values, left=0.0, right=0.0)

    plus, minus = t_arr + r_arr, t_arr - r_arr
    V = 0.5 * (G(plus) - G(minus))
    V_r = 0.5 * (g(plus) + g(minus))
    V_t = 0.5 * (g(plus) - g(minus))
    if np.ndim(V) == 0:
        return float(V), float(V_r), float(V_t)
    return V, V_r, V_t


def free_wave_3d(profile: RadiationProfile, r, t) -> Tuple[Any, Any, Any]:
    """Three-dimensional free wave v = V/r with its derivatives, r > 0"""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise DomainError("free_wave_3d is evaluated at r > 0", field="r", value=r)
    V, V_r, V_t = free_wave_eval(profile, r, t)
    v = np.asarray(V) / r_arr
    v_r = (np.asarray(V_r) - v) / r_arr
    v_t = np.asarray(V_t) / r_arr
    if v.ndim == 0:
        return float(v), float(v_r), float(v_t)
    return v, v_r, v_t


def exterior_difference(trajectory: AnyTrajectory, profile: RadiationProfile, label: float,
                        t: float) -> Dict[str, Any]:
    """
    2*pi * int (|w_r - V_r|^2 + |w_t - V_t|^2) dr outside the light cone through the label

    g_plus compares on {r > t - tau0}; g_minus compares on {r > s0 - t} at negative t,
    read from the time-reversed run.
    """
    run = _pick(trajectory, profile.kind)
    d = run.direction
    state = run.state_at(abs(t))
    t_phys = d * abs(t)
    start = t_phys - label if profile.kind == RadiationKind.G_PLUS else label - t_phys
    start = max(start, 0.0)
    r_max = float(state.radii[-1])

    if start >= r_max:
        return {'t': t_phys, 'label': float(label), 'exterior_start': start, 'value': 0.0, 'truncated': True}

    _, V_r, V_t = free_wave_eval(profile, state.radii, t_phys)
    density = (state.w_r - V_r) ** 2 + (d * state.w_t - V_t) ** 2
    value = 2.0 * math.pi * clipped_integral(density, state.dr, start, r_max)
    return {'t': t_phys, 'label': float(label), 'exterior_start': start, 'value': value, 'truncated': False}


# =============================================================================
# RETARDED ENERGY
# =============================================================================

def annulus_energy(state: FieldState, c: float, beta: float, params: ModelParams) -> Dict[str, float]:
    """
    Energy in {r < c|t|}, {c|t| < r < |t| - |t|^beta} and {r > |t| - |t|^beta}

    Raises:
        DomainError: If c or beta is out of range, or the annulus is empty at this |t|
    """
    exps = critical_exponents(params)
    if not 0.0 < c < 1.0:
        raise DomainError(f"annulus needs 0 < c < 1 (got {c})", field="c", value=c)
    if not 0.0 < beta < exps.beta0:
        raise DomainError(f"annulus needs 0 < beta < beta0 = {exps.beta0:.6g} (got {beta})", field="beta", value=beta)

    t_abs = abs(state.t)
    inner_edge = c * t_abs
    outer_edge = t_abs - t_abs ** beta if t_abs > 0 else 0.0
    if inner_edge >= outer_edge:
        minimal = (1.0 - c) ** (-1.0 / (1.0 - beta))
        raise DomainError(
            f"annulus empty at |t|={t_abs:g}: c|t| >= |t| - |t|^beta; need |t| > {minimal:.6g}",
            field="t", value=t_abs,
        )

    _, u_form = energy_densities(state, params)
    h, r_max = state.dr, float(state.radii[-1])
    outer_edge = min(outer_edge, r_max)
    return {
        't': t_abs,
        'c': c,
        'beta': beta,
        'inner': clipped_integral(u_form, h, 0.0, inner_edge),
        'annulus': clipped_integral(u_form, h, inner_edge, outer_edge),
        'exterior': clipped_integral(u_form, h, outer_edge, r_max),
    }


def weighted_energy(state: FieldState, kappa: float, params: ModelParams) -> float:
    """
    int_{r > |t|} (r - |t|)^kappa e(r, t) dr with e the three-dimensional energy density per unit r

    Raises:
        DomainError: If kappa is outside [0, 1]
    """
    if not 0.0 <= kappa <= 1.0:
        raise DomainError(f"kappa must lie in [0, 1] (got {kappa})", field="kappa", value=kappa)
    _, u_form = energy_densities(state, params)
    r = state.radii
    first = int(math.ceil(abs(state.t) / state.dr - 1e-9))
    if first >= len(r) - 1:
        return 0.0
    weight = (r[first:] - abs(state.t)) ** kappa
    return float(integrate.trapezoid(weight * u_form[first:], dx=state.dr))


def theorem2_ledger(trajectory: TwoSidedTrajectory, R: float, beta: float, kappa: float, params: ModelParams,
                    scattered_minus: Optional[float] = None) -> Theorem2Ledger:
    """
    Retarded-energy lower bound against the weighted-data escape bound at radius R

    Raises:
        DomainError: Unless kappa0 < kappa < 1 and 1 - kappa < beta < beta0, with the admissible region
    """
    exps = critical_exponents(params)
    if not (exps.kappa0 < kappa < 1.0 and 1.0 - kappa < beta < exps.beta0):
        low = max(1.0 - kappa, 0.0)
        raise DomainError(
            f"(beta={beta}, kappa={kappa}) not admissible for p={params.p}: need kappa in "
            f"({exps.kappa0:.6g}, 1) and beta in ({low:.6g}, {exps.beta0:.6g})",
            field="theorem2", value=(beta, kappa),
        )

    fwd, bwd = trajectory.forward, trajectory.backward
    h, T = fwd.grid.dr, trajectory.horizon
    E = float(fwd.series.energy[0])
    I0 = weighted_energy(fwd.initial, kappa, params)
    if scattered_minus is None:
        scattered_minus = extract_g(trajectory, None, params, RadiationKind.G_MINUS).scattered_energy

    inside_fwd = inside_energy_series(fwd, R, params)
    inside_bwd = inside_energy_series(bwd, R, params)
    R_eff = min(R, T)
    raw_lhs = time_window_integral(inside_fwd, h, R, T) + time_window_integral(inside_bwd, h, R, T)
    raw_rhs = (time_window_integral(fwd.series.energy - inside_fwd, h, 0.0, R_eff)
               + time_window_integral(bwd.series.energy - inside_bwd, h, 0.0, R_eff))
    retarded = time_window_integral(inside_bwd, h, R, R + R ** beta)

    return Theorem2Ledger(
        R=float(R),
        beta=float(beta),
        kappa=float(kappa),
        lhs_lower=0.5 * (E - scattered_minus) * R ** beta,
        rhs_upper=2.0 / (1.0 - kappa) * R ** (1.0 - kappa) * I0,
        raw_lhs=raw_lhs,
        raw_rhs=raw_rhs,
        retarded_window=retarded,
        weighted_initial=I0,
        exponent_gap=beta - (1.0 - kappa),
        horizon_sufficient=T >= R + R ** beta,
    )


def retarded_energy_from_flux(trajectory: TwoSidedTrajectory, params: ModelParams,
                              scattered_minus: Optional[float] = None) -> Dict[str, Any]:
    """
    E - E~_- against the incoming flux Q_minus_minus(s) over t <= s

    The negative-time part of the line t + r = s is the outgoing line tau = -s of the
    time-reversed run.
    """
    fwd, bwd = trajectory.forward, trajectory.backward
    h, n_r = fwd.grid.dr, fwd.grid.n_r
    c = potential_weight(params)
    n_max = min(fwd.grid.n_steps, bwd.grid.n_steps)
    s_index = np.arange(0, n_max + 1)
    forward_part = fwd.lines.in_potential[s_index]
    backward_part = bwd.lines.out_potential[n_r - s_index]
    flux = 2.0 * math.pi * c * (forward_part + backward_part)
    E = float(fwd.series.energy[0])
    if scattered_minus is None:
        scattered_minus = extract_g(trajectory, None, params, RadiationKind.G_MINUS).scattered_energy
    deficit = E - scattered_minus
    return {
        's': s_index * h,
        'flux': flux,
        'late_flux': float(flux[-1]),
        'deficit': deficit,
        'gap': abs(float(flux[-1]) - deficit),
    }


def inside_energy_limit(trajectory: TwoSidedTrajectory, s0: float, g_minus: RadiationProfile,
                        params: ModelParams) -> Dict[str, Any]:
    """
    E_-(t; 0, s0 - t) as t decreases, against E - pi * int_{s0}^inf |g_minus|^2

    The inward energy of the data at time -t is the outward energy of the reversed run at t.
    """
    bwd = trajectory.backward
    E = float(trajectory.forward.series.energy[0])
    mask = g_minus.labels >= s0
    tail = float(math.pi * integrate.trapezoid(g_minus.values[mask] ** 2, g_minus.labels[mask])) \
        if np.count_nonzero(mask) > 1 else 0.0
    target = E - tail

    times, values = [], []
    for n in sorted(bwd.states):
        state = bwd.states[n]
        outer = s0 + state.t
        if outer <= 0:
            continue
        times.append(-state.t)
        values.append(partition_energies(state, 0.0, outer, params).E_plus)
    gaps = [abs(v - target) for v in values]
    return {'s0': float(s0), 'times': times, 'values': values, 'target': target, 'gaps': gaps}


# =============================================================================
# APPENDIX INEQUALITIES
# =============================================================================

def interpolation_constant_from_proof(p: float) -> float:
    """Constant from splitting the line integral at T = tau + Q/M"""
    return 1.0 + ((p + 1.0) / (4.0 * math.pi)) ** (p / (p + 1.0)) * (p - 2.0) ** (-1.0 / (p + 1.0))


def appendix_inequalities(trajectory: AnyTrajectory, g_plus: RadiationProfile, window: Tuple[float, float],
                          params: ModelParams, n_windows: int = 10, seed: int = 0) -> Dict[str, Any]:
    """
    Change of variables for M(tau), the L2 bound of mu on windows and the interpolation constant

    Args:
        trajectory: Forward run (or both directions)
        g_plus: Radiation field of the forward run
        window: Label range (tau1, tau2) inside [0, t_end] from which windows are drawn
        params: Model parameters
        n_windows: Number of random sub-windows besides the full window
        seed: Seed for numpy's default_rng

    Returns:
        Report with the change-of-variables residual, per-window bound sides and the constants
    """
    run = _pick(trajectory, RadiationKind.G_PLUS)
    grid = run.grid
    h, p = grid.dr, params.p
    lo, hi = max(window[0], 0.0), min(window[1], grid.t_end)
    if hi <= lo:
        raise DomainError(f"window {window} leaves [0, {grid.t_end}]", field="window", value=window)

    lines = outgoing_line_fluxes(run, params)
    tau, M, J, Q = lines['tau'], lines['M'], lines['J'], lines['Q_plus_plus']

    line_total = float(np.sum(M) * h)
    area_total = double_integral(run)
    change_residual = abs(line_total - area_total) / area_total if area_total > 0 else abs(line_total)

    g_at = np.interp(tau, g_plus.labels, g_plus.values, left=0.0, right=0.0)

    def window_bound(a: float, b: float) -> Dict[str, float]:
        inside = (tau >= a - 1e-12) & (tau <= b + 1e-12)
        mu = mu_accumulate(run, a, b)
        if np.count_nonzero(inside) > 1:
            g_part = 2.0 * float(integrate.trapezoid(g_at[inside] ** 2, tau[inside]))
            j_part = 2.0 * float(integrate.trapezoid(J[inside] ** 2, tau[inside]))
        else:
            g_part = j_part = 0.0
        return {'a': a, 'b': b, 'mu': mu, 'g_part': g_part, 'j_part': j_part,
                'holds': mu <= (g_part + j_part) * (1.0 + FLUX_BOUND_TOLERANCE) + NOISE_FLOOR}

    rng = np.random.default_rng(seed)
    windows = [window_bound(lo, hi)]
    n_lo, n_hi = int(math.ceil(lo / h)), int(math.floor(hi / h))
    for _ in range(n_windows):
        a, b = sorted(rng.integers(n_lo, n_hi + 1, size=2))
        if a == b:
            b = min(a + 1, n_hi)
            a = b - 1
        windows.append(window_bound(a * h, b * h))

    significant = (Q > 1e-8 * max(float(np.max(Q)), DENSITY_FLOOR)) & (M > DENSITY_FLOOR) & (J > DENSITY_FLOOR)
    if params.linear or not np.any(significant):
        empirical = 0.0
    else:
        ratio = J[significant] / (Q[significant] ** (2.0 / (p + 1.0)) * M[significant] ** ((p - 2.0) / (p + 1.0)))
        empirical = float(np.max(ratio))

    return {
        'line_total': line_total,
        'area_total': area_total,
        'change_of_variables_residual': change_residual,
        'windows': windows,
        'window_bounds_hold': all(w['holds'] for w in windows),
        'empirical_constant': empirical,
        'proof_constant': interpolation_constant_from_proof(p),
        'constant_finite': math.isfinite(empirical),
    }
