"""
Radial Wave Lab - Integrator Tests
Single steps, full runs, time reversal, the free-wave oracle and convergence studies
"""

import numpy as np
import pytest

from core.evolve import (
    CharacteristicStepper, step, run, reverse_time, run_bidirectional, dalembert_linear,
    odd_extension, convergence_study,
)
from core.radial_core import init_state
from utils.data_models import FieldState, GridSpec, ProbeSet, RadialProfile
from utils.error_handlers import ConfigurationError, DivergenceError, LatticeError, ProbeError

pytestmark = pytest.mark.unit

# =============================================================================
# SINGLE STEPS
# =============================================================================


def test_zero_state_stays_zero(coarse_grid, cubic_params):
    state = init_state(RadialProfile.zero(), coarse_grid)
    advanced = step(state, coarse_grid, cubic_params)
    assert advanced.t == pytest.approx(coarse_grid.dr)
    assert not np.any(advanced.w) and not np.any(advanced.phi) and not np.any(advanced.psi)


def test_step_keeps_axis_conditions(bump_profile, coarse_grid, cubic_params):
    state = init_state(bump_profile, coarse_grid)
    for _ in range(5):
        state = step(state, coarse_grid, cubic_params)
    assert state.w[0] == 0.0
    assert state.psi[0] == state.phi[0]


def test_linear_step_is_a_shift(bump_profile, coarse_grid, linear_params):
    state = init_state(bump_profile, coarse_grid)
    advanced = step(state, coarse_grid, linear_params)
    assert np.array_equal(advanced.phi[:-1], state.phi[1:]), "phi moves one cell inward"
    assert np.array_equal(advanced.psi[1:], state.psi[:-1]), "psi moves one cell outward"


def test_non_finite_state_raises_divergence(coarse_grid, cubic_params):
    n = coarse_grid.n_r + 1
    phi = np.zeros(n)
    phi[10] = np.nan
    state = FieldState(t=0.0, w=np.zeros(n), phi=phi, psi=np.zeros(n), dr=coarse_grid.dr)
    with pytest.raises(DivergenceError) as excinfo:
        CharacteristicStepper(coarse_grid, cubic_params).advance(state, step_index=7)
    assert excinfo.value.step_index == 7


# =============================================================================
# RUNS
# =============================================================================

def test_run_records_requested_snapshots(cubic_run, coarse_grid):
    assert sorted(cubic_run.states) == [0, 64, 128, coarse_grid.n_steps]
    assert cubic_run.final.t == pytest.approx(coarse_grid.t_end)
    assert len(cubic_run.series.energy) == coarse_grid.n_steps + 1


def test_unregistered_snapshot_raises(cubic_run):
    with pytest.raises(ProbeError):
        cubic_run.state_at(3.0)


def test_run_rejects_foreign_grid(bump_profile, coarse_grid, cubic_params):
    other = GridSpec(dr=2.0 ** -4, r_max=24.0, t_end=8.0)
    with pytest.raises(ConfigurationError):
        run(init_state(bump_profile, other), coarse_grid, cubic_params)


def test_misaligned_probe_raises(bump_profile, coarse_grid, cubic_params):
    probes = ProbeSet(outgoing_labels=[0.01])
    with pytest.raises(LatticeError):
        run(init_state(bump_profile, coarse_grid), coarse_grid, cubic_params, probes)


def test_energy_drift_small(cubic_run):
    energy = cubic_run.series.energy
    drift = np.max(np.abs(energy - energy[0])) / energy[0]
    assert drift < 1e-2, f"relative drift {drift:.3e} on the coarse lattice"


def test_linear_energy_conserved(linear_run):
    energy = linear_run.series.energy
    assert np.max(np.abs(energy - energy[0])) <= 1e-12 * energy[0], "free transport with reflection conserves E"


# =============================================================================
# FREE-WAVE ORACLE
# =============================================================================

def test_odd_extension_is_odd(bump_profile):
    x = np.linspace(-3.0, 3.0, 13)
    W, dW = odd_extension(bump_profile, x)
    assert np.allclose(W, -W[::-1])
    assert np.allclose(dW, dW[::-1])


def test_dalembert_initial_time(moving_profile, coarse_grid):
    state = init_state(moving_profile, coarse_grid)
    w, w_r, w_t = dalembert_linear(moving_profile, state.radii, 0.0)
    assert np.allclose(w, state.w, atol=1e-12)
    assert np.allclose(w_t, state.w_t, atol=1e-12)


def test_linear_run_matches_dalembert(linear_run, moving_profile):
    state = linear_run.state_at(4.0)
    w, w_r, w_t = dalembert_linear(moving_profile, state.radii, state.t)
    scale = np.max(np.abs(w_r) + np.abs(w_t))
    assert np.max(np.abs(state.phi - (w_r + w_t))) <= 1e-10 * scale, "phi transported exactly"
    assert np.max(np.abs(state.psi - (w_r - w_t))) <= 1e-10 * scale, "psi transported exactly"
    assert np.max(np.abs(state.w - w)) <= 1e-8 * np.max(np.abs(w)), "w transported exactly"


def test_first_step_with_velocity_matches_dalembert(moving_profile, coarse_grid, linear_params):
    state = init_state(moving_profile, coarse_grid)
    advanced = step(state, coarse_grid, linear_params)
    w, _, _ = dalembert_linear(moving_profile, advanced.radii, advanced.t)
    assert np.max(np.abs(advanced.w - w)) <= 1e-10 * np.max(np.abs(w))


def test_three_level_update_matches_dalembert(moving_profile, coarse_grid, linear_params):
    stepper = CharacteristicStepper(coarse_grid, linear_params)
    state = init_state(moving_profile, coarse_grid)
    for n in range(1, 9):
        state = stepper.advance(state, n)
    w, _, _ = dalembert_linear(moving_profile, state.radii, state.t)
    assert state.t == pytest.approx(8 * coarse_grid.dr)
    assert np.max(np.abs(state.w - w)) <= 1e-10 * np.max(np.abs(w))


def test_cell_integrals_dropped_after_first_step(moving_profile, coarse_grid, linear_params):
    state = init_state(moving_profile, coarse_grid)
    assert state.w_t_cells is not None and len(state.w_t_cells) == coarse_grid.n_r
    assert step(state, coarse_grid, linear_params).w_t_cells is None


# =============================================================================
# TIME REVERSAL
# =============================================================================

def test_reverse_time_swaps_invariants(moving_profile, coarse_grid):
    state = init_state(moving_profile, coarse_grid)
    reversed_state = reverse_time(state)
    assert np.array_equal(reversed_state.phi, state.psi)
    assert np.array_equal(reversed_state.psi, state.phi)
    assert np.allclose(reversed_state.w_t, -state.w_t)
    assert np.array_equal(reverse_time(reversed_state).phi, state.phi)
    assert np.allclose(reversed_state.w_t_cells, -state.w_t_cells)


def test_data_at_rest_is_time_symmetric(cubic_two_sided):
    forward, backward = cubic_two_sided.forward, cubic_two_sided.backward
    assert forward.direction == 1 and backward.direction == -1
    assert np.array_equal(forward.final.w, backward.final.w), "u(-t) = u(t) for data at rest"
    assert np.array_equal(forward.series.energy, backward.series.energy)
    assert backward.origin_series[-1, 0] == pytest.approx(-cubic_two_sided.horizon)


def test_threads_do_not_change_results(moving_profile, coarse_grid, cubic_params):
    initial = init_state(moving_profile, coarse_grid)
    probes = ProbeSet(snapshot_times=[4.0])
    serial = run_bidirectional(initial, coarse_grid, cubic_params, probes, threads=1)
    parallel = run_bidirectional(initial, coarse_grid, cubic_params, probes, threads=2)
    assert np.array_equal(serial.forward.final.w, parallel.forward.final.w)
    assert np.array_equal(serial.backward.final.psi, parallel.backward.final.psi)
    assert not np.array_equal(serial.forward.final.w, serial.backward.final.w), "velocity breaks the symmetry"


# =============================================================================
# CONVERGENCE
# =============================================================================

def test_convergence_needs_three_levels(bump_profile, cubic_params):
    with pytest.raises(LatticeError):
        convergence_study(bump_profile, cubic_params, [2.0 ** -4, 2.0 ** -5], 24.0, 8.0)


def test_convergence_needs_halving(bump_profile, cubic_params):
    with pytest.raises(LatticeError):
        convergence_study(bump_profile, cubic_params, [2.0 ** -3, 2.0 ** -4, 2.0 ** -6], 24.0, 8.0)


def test_linear_convergence_is_exact_transport(bump_profile, linear_params):
    study = convergence_study(bump_profile, linear_params, [2.0 ** -3, 2.0 ** -4, 2.0 ** -5], 24.0, 8.0)
    assert study.exact_transport
    assert study.mode == "exact transport"
    assert max(study.errors) < 1e-10


def test_nonlinear_self_convergence(bump_profile, cubic_params):
    study = convergence_study(bump_profile, cubic_params, [2.0 ** -6, 2.0 ** -4, 2.0 ** -5], 24.0, 8.0)
    assert study.refinements == [2.0 ** -4, 2.0 ** -5, 2.0 ** -6], "levels sorted coarse to fine"
    assert study.mode == "self-convergence"
    assert len(study.errors) == 2
    assert study.errors[1] < study.errors[0]
    assert study.observed_order > 1.5
    assert study.drifts[-1] < study.drifts[0]
