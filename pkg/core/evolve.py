"""
Radial Wave Lab - Characteristic Integrator
Exact linear transport at dt = dr with a second-order source quadrature
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate
from loguru import logger

from constants import EXACT_TRANSPORT_FLOOR
from core.probes import RunRecorder
from core.radial_core import init_state, profile_values
from utils.data_models import (
    GridSpec, ModelParams, RadialProfile, FieldState, ProbeSet, Trajectory,
    TwoSidedTrajectory, ConvergenceReport, snap_to_lattice,
)
from utils.error_handlers import DivergenceError, LatticeError, ConfigurationError


class CharacteristicStepper:
    """
    One-step map of the reduced equation on a fixed lattice

    phi moves one cell inward along t + r = const, psi one cell outward along
    t - r = const. The source is integrated with a midpoint predictor on each
    half cell. w follows the three-level leapfrog w(t+h) = w(r+h) + w(r-h) - w(t-h),
    exact for free waves at dt = dr; the first step of a run uses the one-step
    d'Alembert-Duhamel formula with the velocity cell integrals of the state.
    """

    def __init__(self, grid: GridSpec, params: ModelParams):
        self.h = grid.dr
        self.n_r = grid.n_r
        self.p = params.p
        self.linear = params.linear
        r_half = (np.arange(self.n_r, dtype=float) + 0.5) * self.h
        self.inv_half = r_half ** (-(self.p - 1.0))
        r_nodes = np.arange(1, self.n_r + 1, dtype=float) * self.h
        self.inv_nodes = r_nodes ** (-(self.p - 1.0))
        self._previous: Optional[FieldState] = None

    def source(self, w: np.ndarray, wt: np.ndarray) -> np.ndarray:
        """h times N at the half-cell midpoints of the step"""
        if self.linear:
            return np.zeros(self.n_r)
        w_mid = 0.5 * (w[:-1] + w[1:]) + 0.25 * self.h * (wt[:-1] + wt[1:])
        return self.h * np.abs(w_mid) ** (self.p - 1.0) * w_mid * self.inv_half

    def _velocity_spread(self, state: FieldState, wt: np.ndarray) -> np.ndarray:
        """int of w_t over [r_i - h, r_i + h] for i = 1..n_r"""
        cells = state.w_t_cells
        if cells is not None and len(cells) == self.n_r:
            return cells + np.append(cells[1:], 0.0)
        wt_pad = np.append(wt, 0.0)
        return (self.h / 3.0) * (wt[:-1] + 4.0 * wt[1:] + wt_pad[2:])

    def _first_w(self, state: FieldState, wt: np.ndarray, s: np.ndarray) -> np.ndarray:
        w = state.w
        w_pad = np.append(w, 0.0)
        s_pad = np.append(s, 0.0)
        w_new = np.empty_like(w)
        w_new[0] = 0.0
        w_new[1:] = (0.5 * (w[:-1] + w_pad[2:])
                     + 0.5 * self._velocity_spread(state, wt)
                     - 0.25 * self.h * (s + s_pad[1:]))
        return w_new

    def _leapfrog_w(self, state: FieldState, previous: FieldState) -> np.ndarray:
        w = state.w
        w_pad = np.append(w, 0.0)
        w_new = np.empty_like(w)
        w_new[0] = 0.0
        w_new[1:] = w[:-1] + w_pad[2:] - previous.w[1:]
        if not self.linear:
            inner = w[1:]
            w_new[1:] -= self.h ** 2 * np.abs(inner) ** (self.p - 1.0) * inner * self.inv_nodes
        return w_new

    def advance(self, state: FieldState, step_index: int = 0) -> FieldState:
        h = self.h
        phi, psi = state.phi, state.psi
        wt = 0.5 * (phi - psi)
        s = self.source(state.w, wt)

        phi_new = np.empty_like(phi)
        phi_new[:-1] = phi[1:] - s
        phi_new[-1] = 0.0

        psi_new = np.empty_like(psi)
        psi_new[1:] = psi[:-1] + s
        psi_new[0] = phi_new[0]

        previous = self._previous
        if previous is not None and math.isclose(previous.t, state.t - h, abs_tol=0.25 * h):
            w_new = self._leapfrog_w(state, previous)
        else:
            w_new = self._first_w(state, wt, s)

        if not np.isfinite(phi_new.sum() + psi_new.sum() + w_new.sum()):
            raise DivergenceError(f"non-finite field after step {step_index}", step_index=step_index)
        self._previous = state
        return FieldState(t=state.t + h, w=w_new, phi=phi_new, psi=psi_new, dr=h)


def step(state: FieldState, grid: GridSpec, params: ModelParams) -> FieldState:
    """
    Advance one step dt = dr

    Raises:
        DivergenceError: If the new state is not finite
    """
    return CharacteristicStepper(grid, params).advance(state)


def run(initial: FieldState, grid: GridSpec, params: ModelParams,
        probes: Optional[ProbeSet] = None, direction: int = 1) -> Trajectory:
    """
    Iterate step to t_end while filling every registered probe

    Args:
        initial: State at t = 0 (times are internal; direction maps them to physical time)
        grid: Lattice description
        params: Model parameters
        probes: Diagnostics registered before the run
        direction: +1 for the data itself, -1 for a run started from reverse_time(data)

    Returns:
        Trajectory: Snapshots plus full-resolution series, line fluxes, traces and shells

    Raises:
        LatticeError: If a probe is not aligned with the lattice
        DivergenceError: Propagated from step
    """
    if len(initial.w) != grid.n_r + 1 or not math.isclose(initial.dr, grid.dr):
        raise ConfigurationError("initial state does not live on the requested grid")

    recorder = RunRecorder(grid, params, probes or ProbeSet())
    stepper = CharacteristicStepper(grid, params)
    n_steps = grid.n_steps
    progress_every = max(1, n_steps // 10)

    logger.info(f"run: p={params.p}, linear={params.linear}, dr={grid.dr:g}, "
                f"n_r={grid.n_r}, n_steps={n_steps}, direction={direction:+d}")

    state = initial.copy()
    state.t = 0.0
    recorder.record(0, state)
    for n in range(1, n_steps + 1):
        state = stepper.advance(state, n)
        recorder.record(n, state)
        if n % progress_every == 0:
            logger.debug(f"run progress {100 * n // n_steps}% (t={n * grid.dr:g}, "
                         f"E={recorder.series['energy'][n]:.10g})")

    return Trajectory(grid=grid, params=params, direction=direction, **recorder.build())


def reverse_time(initial: FieldState) -> FieldState:
    """Negate w_t by swapping phi and psi; t maps to -t"""
    cells = None if initial.w_t_cells is None else -initial.w_t_cells
    return FieldState(t=-initial.t, w=initial.w.copy(), phi=initial.psi.copy(),
                      psi=initial.phi.copy(), dr=initial.dr, w_t_cells=cells)


def run_bidirectional(initial: FieldState, grid: GridSpec, params: ModelParams,
                      probes: Optional[ProbeSet] = None,
                      backward_probes: Optional[ProbeSet] = None,
                      threads: int = 1) -> TwoSidedTrajectory:
    """
    Cover [-T, T]: a forward run from the data and a forward run from its time-reversed image
    """
    backward_probes = backward_probes if backward_probes is not None else probes
    reversed_initial = reverse_time(initial)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=2) as executor:
            fwd = executor.submit(run, initial, grid, params, probes, 1)
            bwd = executor.submit(run, reversed_initial, grid, params, backward_probes, -1)
            return TwoSidedTrajectory(forward=fwd.result(), backward=bwd.result())
    return TwoSidedTrajectory(
        forward=run(initial, grid, params, probes, 1),
        backward=run(reversed_initial, grid, params, backward_probes, -1),
    )


# =============================================================================
# LINEAR ORACLE
# =============================================================================

def odd_extension(profile: Optional[RadialProfile], x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """W(x) = x u(|x|) and W'(x) = u(|x|) + |x| u_r(|x|)"""
    if profile is None:
        return np.zeros_like(x), np.zeros_like(x)
    a = np.abs(x)
    u, u_r = profile_values(profile, a)
    return x * u, u + a * u_r


def dalembert_linear(profile: RadialProfile, r, t) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Free 1D wave with w(0, t) = 0 via odd extension

    Args:
        profile: Displacement profile, its velocity profile carried in profile.velocity
        r: Radii (scalar or array)
        t: Time (scalar or array broadcastable with r)

    Returns:
        Tuple (w, w_r, w_t)
    """
    r_arr, t_arr = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
    plus, minus = r_arr + t_arr, r_arr - t_arr

    w0_plus, d0_plus = odd_extension(profile, plus)
    w0_minus, d0_minus = odd_extension(profile, minus)
    w = 0.5 * (w0_plus + w0_minus)
    w_r = 0.5 * (d0_plus + d0_minus)
    w_t = 0.5 * (d0_plus - d0_minus)

    velocity = profile.velocity
    if velocity is not None and not velocity.is_zero:
        w1_plus, _ = odd_extension(velocity, plus)
        w1_minus, _ = odd_extension(velocity, minus)
        w_r = w_r + 0.5 * (w1_plus - w1_minus)
        w_t = w_t + 0.5 * (w1_plus + w1_minus)

        def w1(x: float) -> float:
            return float(odd_extension(velocity, np.array([x]))[0][0])

        flat_lo, flat_hi = minus.ravel(), plus.ravel()
        spread = np.array([integrate.quad(w1, a, b, epsabs=1e-12, limit=200)[0]
                           for a, b in zip(flat_lo, flat_hi)])
        w = w + 0.5 * spread.reshape(w.shape)

    if w.ndim == 0:
        return float(w), float(w_r), float(w_t)
    return w, w_r, w_t


# =============================================================================
# CONVERGENCE
# =============================================================================

def _default_checkpoints(grid: GridSpec) -> List[Tuple[float, float]]:
    radii = [r for r in (1.0, 2.0, 4.0, 8.0) if r <= grid.r_max]
    return [(r, grid.t_end) for r in radii]


def _checkpoint_values(trajectory: Trajectory, checkpoints: Sequence[Tuple[float, float]]) -> np.ndarray:
    grid = trajectory.grid
    return np.array([trajectory.state_at(t).w[grid.node_index(r)] for r, t in checkpoints])


def _orders(errors: Sequence[float]) -> List[float]:
    orders = []
    for coarse, fine in zip(errors[:-1], errors[1:]):
        if coarse > 0 and fine > 0:
            orders.append(math.log2(coarse / fine))
        else:
            orders.append(float('nan'))
    return orders


def _relative_drift(trajectory: Trajectory) -> float:
    energy = trajectory.series.energy
    if energy[0] <= 0:
        return 0.0
    return float(np.max(np.abs(energy - energy[0])) / energy[0])


def convergence_study(profile: RadialProfile, params: ModelParams, refinements: Sequence[float],
                      r_max: float, t_end: float,
                      checkpoints: Optional[Sequence[Tuple[float, float]]] = None,
                      reference_dr: Optional[float] = None,
                      threads: int = 1) -> ConvergenceReport:
    """
    Observed orders of w at fixed (r, t) checkpoints and of the energy drift

    Without a reference run, differences of consecutive levels are used (self-convergence).
    In linear mode the grid values are compared against dalembert_linear and the report is
    flagged "exact transport" when they agree to rounding.

    Raises:
        LatticeError: If fewer than three levels are given or they are not nested halvings
    """
    levels = sorted((float(dr) for dr in refinements), reverse=True)
    if len(levels) < 3:
        raise LatticeError(f"convergence study needs at least 3 refinement levels, got {len(levels)}",
                           field="refinements", value=list(refinements))
    for coarse, fine in zip(levels[:-1], levels[1:]):
        if not math.isclose(coarse / fine, 2.0, rel_tol=1e-12):
            raise LatticeError(f"refinements must halve dr at each level ({coarse} -> {fine})",
                               field="refinements", value=list(refinements))

    coarse_grid = GridSpec(dr=levels[0], r_max=r_max, t_end=t_end)
    checkpoints = list(checkpoints) if checkpoints else _default_checkpoints(coarse_grid)
    for r, t in checkpoints:
        coarse_grid.node_index(r)
        coarse_grid.step_index(t)
    times = sorted({t for _, t in checkpoints})

    def _level(dr: float) -> Trajectory:
        grid = GridSpec(dr=dr, r_max=r_max, t_end=t_end)
        return run(init_state(profile, grid), grid, params, ProbeSet(snapshot_times=times))

    all_levels = levels + ([reference_dr] if reference_dr else [])
    if reference_dr:
        snap_to_lattice(levels[-1], reference_dr, "reference_dr")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            trajectories = list(executor.map(_level, all_levels))
    else:
        trajectories = [_level(dr) for dr in all_levels]

    values = [_checkpoint_values(traj, checkpoints) for traj in trajectories]
    drifts = [_relative_drift(traj) for traj in trajectories[:len(levels)]]
    exact = False

    if params.linear:
        mode = "linear oracle"
        errors = []
        for traj in trajectories[:len(levels)]:
            grid = traj.grid
            worst, scale = 0.0, 0.0
            for t in times:
                state = traj.state_at(t)
                _, w_r, w_t = dalembert_linear(profile, grid.radii, t)
                worst = max(worst, float(np.max(np.abs(state.phi - (w_r + w_t)))),
                            float(np.max(np.abs(state.psi - (w_r - w_t)))))
                scale = max(scale, float(np.max(np.abs(w_r) + np.abs(w_t))))
            errors.append(worst / scale if scale > 0 else worst)
        exact = max(errors) < EXACT_TRANSPORT_FLOOR
        orders = [float('nan')] * (len(errors) - 1) if exact else _orders(errors)
        if exact:
            mode = "exact transport"
    elif reference_dr:
        mode = "reference"
        reference = values[-1]
        errors = [float(np.max(np.abs(v - reference))) for v in values[:len(levels)]]
        orders = _orders(errors)
    else:
        mode = "self-convergence"
        errors = [float(np.max(np.abs(a - b))) for a, b in zip(values[:len(levels) - 1], values[1:len(levels)])]
        orders = _orders(errors)

    report = ConvergenceReport(
        refinements=levels,
        errors=errors,
        orders=orders,
        drifts=drifts,
        drift_orders=_orders(drifts),
        exact_transport=exact,
        mode=mode,
    )
    logger.info(f"convergence ({mode}): errors={['%.3e' % e for e in errors]}, orders={orders}")
    return report
