"""
Radial Wave Lab - Energy Ledger Tests
Energies, partitions, fluxes, the origin measure, flux identities and Morawetz terms
"""

import math

import numpy as np
import pytest

from constants import ACCEPTANCE, Family, FluxKind, TraceKind
from core.energy_ledger import (
    potential_density, energy_of_state, clipped_integral, partition_energies, energy_transformation_terms,
    inside_energy, exterior_energy, flux_segment, mu_accumulator, mu_accumulate, outgoing_line_fluxes,
    incoming_line_fluxes, region_terms, flux_identity_residual, triangle_law_report, parallelogram_report,
    residual_orders, triangle_vertices, rectangle_vertices, parallelogram_vertices, energy_identity_check,
    monotonicity_report, mu_limit_crosscheck, morawetz_report,
)
from core.radial_core import init_state
from utils.data_models import ModelParams, RadialProfile
from utils.error_handlers import DomainError, LatticeError, ProbeError

pytestmark = pytest.mark.unit

# =============================================================================
# ENERGIES
# =============================================================================


def test_potential_density_origin_and_linear():
    r = np.array([0.0, 1.0, 2.0])
    w = np.array([0.0, 2.0, 2.0])
    density = potential_density(w, r, ModelParams(p=3.0))
    assert density.tolist() == pytest.approx([0.0, 16.0, 4.0])
    assert not np.any(potential_density(w, r, ModelParams(p=3.0, linear=True)))


def test_zero_state_has_zero_energy(coarse_grid, cubic_params):
    assert energy_of_state(init_state(RadialProfile.zero(), coarse_grid), cubic_params) == 0.0


def test_clipped_integral_exact_for_linear_data():
    h = 0.25
    r = np.arange(17) * h
    assert clipped_integral(np.ones_like(r), h, 0.3, 1.7) == pytest.approx(1.4)
    assert clipped_integral(r, h, 0.3, 1.7) == pytest.approx(0.5 * (1.7 ** 2 - 0.3 ** 2))


def test_partition_of_whole_line(cubic_run, cubic_params):
    state = cubic_run.state_at(4.0)
    partition = partition_energies(state, 0.0, None, cubic_params)
    assert partition.E_total == pytest.approx(energy_of_state(state, cubic_params), rel=1e-12)
    assert partition.E_total == pytest.approx(partition.E_minus + partition.E_plus)
    assert partition.r2 == pytest.approx(state.radii[-1])


def test_partition_clamps_and_validates(cubic_run, cubic_params):
    state = cubic_run.initial
    beyond = partition_energies(state, 1.0, 1e6, cubic_params)
    assert beyond.r2 == pytest.approx(state.radii[-1])
    with pytest.raises(DomainError):
        partition_energies(state, 3.0, 2.0, cubic_params)
    with pytest.raises(DomainError):
        partition_energies(state, -1.0, 2.0, cubic_params)


def test_partition_at_rest_is_balanced(cubic_run, cubic_params):
    partition = partition_energies(cubic_run.initial, 0.0, None, cubic_params)
    assert partition.E_minus == pytest.approx(partition.E_plus), "phi == psi at t = 0"


def test_energy_transformation_boundary_term(cubic_run, cubic_params):
    terms = energy_transformation_terms(cubic_run.initial, 1.0, 6.0, cubic_params)
    gap = terms['w_form'] - terms['u_form']
    assert abs(gap - terms['boundary_term']) <= 1e-3 * terms['w_form']
    with pytest.raises(DomainError):
        energy_transformation_terms(cubic_run.initial, 6.0, 1.0, cubic_params)


def test_inside_and_exterior_energy(cubic_run, cubic_params):
    state = cubic_run.initial
    E = energy_of_state(state, cubic_params)
    assert inside_energy(state, 20.0, cubic_params) == pytest.approx(E, rel=1e-3)
    assert exterior_energy(state, 0.0, cubic_params) == E
    split = inside_energy(state, 4.0, cubic_params) + exterior_energy(state, 4.0, cubic_params)
    assert split == pytest.approx(inside_energy(state, 20.0, cubic_params), rel=1e-9)


# =============================================================================
# FLUXES AND THE ORIGIN MEASURE
# =============================================================================

def test_flux_segment_default_kinds(cubic_run, cubic_params):
    outgoing = cubic_run.trace(TraceKind.OUTGOING, 0.0)
    incoming = cubic_run.trace(TraceKind.INCOMING, 6.0)
    assert flux_segment(outgoing, 0.0, 8.0, cubic_params).kind == FluxKind.Q_PLUS_PLUS
    assert flux_segment(incoming, 0.0, 6.0, cubic_params).kind == FluxKind.Q_MINUS_MINUS


def test_flux_segment_values_bounded(cubic_run, cubic_params):
    E = float(cubic_run.series.energy[0])
    outgoing = cubic_run.trace(TraceKind.OUTGOING, 0.0)
    for kind in (FluxKind.Q_PLUS_PLUS, FluxKind.Q_MINUS_PLUS):
        segment = flux_segment(outgoing, 0.0, 8.0, cubic_params, kind)
        assert 0.0 <= segment.value <= E * (1.0 + 1e-6), f"{kind.value} within [0, E]"


def test_flux_segment_rejects_wrong_family(cubic_run, cubic_params):
    outgoing = cubic_run.trace(TraceKind.OUTGOING, 0.0)
    with pytest.raises(ProbeError):
        flux_segment(outgoing, 0.0, 8.0, cubic_params, FluxKind.Q_MINUS_MINUS)


def test_flux_segment_rejects_bad_window(cubic_run, cubic_params):
    outgoing = cubic_run.trace(TraceKind.OUTGOING, 0.0)
    with pytest.raises(LatticeError):
        flux_segment(outgoing, 0.0, 9.0, cubic_params)
    with pytest.raises(LatticeError):
        flux_segment(outgoing, 0.01, 2.0, cubic_params)


def test_potential_fluxes_vanish_when_linear(linear_run, linear_params):
    outgoing = linear_run.trace(TraceKind.OUTGOING, 2.0)
    assert flux_segment(outgoing, 2.0, 8.0, linear_params, FluxKind.Q_PLUS_PLUS).value == 0.0
    assert not np.any(outgoing_line_fluxes(linear_run, linear_params)['Q_plus_plus'])
    assert not np.any(incoming_line_fluxes(linear_run, linear_params)['Q_minus_minus'])


def test_mu_accumulator_nondecreasing(cubic_run):
    accumulator = mu_accumulator(cubic_run)
    assert np.all(np.diff(accumulator.P) >= 0.0)
    assert accumulator.total == pytest.approx(accumulator.measure(0.0, 8.0))


def test_mu_accumulate_two_sided(cubic_two_sided):
    forward_part = mu_accumulate(cubic_two_sided, 0.0, 2.0)
    backward_part = mu_accumulate(cubic_two_sided, -2.0, 0.0)
    assert backward_part == pytest.approx(forward_part), "data at rest give an even origin trace"
    assert mu_accumulate(cubic_two_sided, -2.0, 2.0) == pytest.approx(forward_part + backward_part)
    assert mu_accumulate(cubic_two_sided, 2.0, 0.0) == pytest.approx(-forward_part)


def test_mu_accumulate_outside_horizon(cubic_run):
    with pytest.raises(ProbeError):
        mu_accumulate(cubic_run, 0.0, 9.0)
    with pytest.raises(ProbeError):
        mu_accumulate(cubic_run, -1.0, 0.0)


def test_pi_mu_bounded_by_energy(cubic_two_sided):
    E = float(cubic_two_sided.forward.series.energy[0])
    assert math.pi * mu_accumulate(cubic_two_sided, -8.0, 8.0) <= E * (1.0 + 1e-6)


# =============================================================================
# FLUX IDENTITIES
# =============================================================================

def test_region_vertex_helpers():
    assert triangle_vertices(1.0, 4.0) == [(0.0, 1.0), (4.0, 1.0), (0.0, 5.0)]
    assert rectangle_vertices(1.0, 2.0, 0.0, 3.0) == [(1.0, 0.0), (2.0, 0.0), (2.0, 3.0), (1.0, 3.0)]
    assert parallelogram_vertices(4.0, 6.0, 0.0, 3.0) == [(4.0, 0.0), (6.0, 0.0), (3.0, 3.0), (1.0, 3.0)]


@pytest.mark.parametrize("family", [Family.INWARD, Family.OUTWARD])
def test_linear_rectangle_identity_exact(linear_run, linear_params, family):
    E = float(linear_run.series.energy[0])
    residual = flux_identity_residual(linear_run, 'rectangle', family, linear_params)
    assert residual <= 1e-10 * E, "lattice line sums cancel under exact transport"


@pytest.mark.parametrize("family", [Family.INWARD, Family.OUTWARD])
def test_cubic_rectangle_identity(cubic_run, cubic_params, family):
    E = float(cubic_run.series.energy[0])
    terms = region_terms(cubic_run, 'rectangle', family, cubic_params)
    assert [edge['kind'] for edge in terms['edges']] == ['horizontal', 'vertical', 'horizontal', 'vertical']
    assert terms['double_integral_term'] > 0.0
    assert terms['residual'] <= ACCEPTANCE['flux_identity_relative'] * E


def test_region_lookup_by_vertices(cubic_run, cubic_params):
    by_name = flux_identity_residual(cubic_run, 'triangle', Family.INWARD, cubic_params)
    by_vertices = flux_identity_residual(cubic_run, triangle_vertices(0.0, 6.0), Family.INWARD, cubic_params)
    assert by_name == by_vertices
    with pytest.raises(ProbeError):
        flux_identity_residual(cubic_run, triangle_vertices(0.0, 5.0), Family.INWARD, cubic_params)


def test_triangle_law(cubic_run, cubic_params):
    E = float(cubic_run.series.energy[0])
    law = triangle_law_report(cubic_run, 0.0, 6.0, cubic_params)
    assert law['E_minus'] > 0.0
    assert law['mu_term'] >= 0.0 and law['Q_minus_minus'] >= 0.0
    assert law['residual'] <= ACCEPTANCE['flux_identity_relative'] * E


def test_parallelogram_law(cubic_run, cubic_params):
    E = float(cubic_run.series.energy[0])
    law = parallelogram_report(cubic_run, 4.0, 6.0, 0.0, 3.0, cubic_params)
    assert law['E_minus_bottom'] > 0.0
    assert law['E_minus_top'] >= 0.0
    assert law['residual'] <= ACCEPTANCE['flux_identity_relative'] * E
    assert law['residual'] == flux_identity_residual(cubic_run, 'parallelogram', Family.INWARD, cubic_params)


def test_residual_orders():
    orders = residual_orders([4.0, 1.0, 0.25, 0.0])
    assert orders[:2] == pytest.approx([2.0, 2.0])
    assert math.isnan(orders[2])


def test_global_bookkeeping_closes(cubic_two_sided, cubic_params):
    book = energy_identity_check(cubic_two_sided, cubic_params)
    assert book['horizon'] == 8.0
    assert book['mu_term'] > 0.0 and book['double_integral_term'] > 0.0
    assert book['closed_residual'] <= ACCEPTANCE['bookkeeping_relative'] * book['E']
    assert 'scattered_energy' not in book


def test_bookkeeping_with_scattered_energy(cubic_two_sided, cubic_params):
    book = energy_identity_check(cubic_two_sided, cubic_params, scattered_energy=1.0)
    assert book['scattered_deficit'] == pytest.approx(book['E'] - 1.0)
    assert book['outgoing_at_horizon'] > 0.0


# =============================================================================
# MONOTONICITY AND THE ORIGIN LIMIT
# =============================================================================

def test_monotonicity_report(cubic_run, cubic_params):
    mono = monotonicity_report(cubic_run, cubic_params)
    assert mono['partition_defect'] <= ACCEPTANCE['partition_relative']
    assert mono['e_minus_violation'] <= ACCEPTANCE['monotonicity_violation']
    assert mono['e_plus_violation'] <= ACCEPTANCE['monotonicity_violation']
    assert mono['final_inward_ratio'] < 0.5


def test_mu_limit_crosscheck(cubic_run, cubic_params):
    check = mu_limit_crosscheck(cubic_run, cubic_params)
    assert sorted(check['vertical_fluxes']) == pytest.approx([k * cubic_run.grid.dr for k in (1, 2, 4, 8)])
    assert len(check['gaps']) == 4
    assert check['mu'] > 0.0


# =============================================================================
# MORAWETZ
# =============================================================================

def test_morawetz_report(cubic_two_sided, cubic_params):
    entry = morawetz_report(cubic_two_sided, 2.0, cubic_params)
    E = entry['E']
    assert entry['horizon_sufficient']
    assert set(entry['terms']) == {'inside_energy_average', 'boundary_trace', 'potential_correction', 'far_field'}
    assert entry['terms']['potential_correction'] == 0.0, "vanishes at p = 3"
    assert 0.0 < entry['sum'] <= E * (1.0 + ACCEPTANCE['morawetz_relative'])
    assert entry['distribution_holds']
    assert all(item['holds'] for item in entry['corollary'].values())


def test_morawetz_defect_matches_boundary_tail(cubic_two_sided, cubic_params):
    entry = morawetz_report(cubic_two_sided, 2.0, cubic_params)
    E = entry['E']
    assert entry['boundary_tail'] == pytest.approx(E - entry['identity_rhs'])
    gap = abs(entry['defect'] - entry['boundary_tail'])
    assert gap == pytest.approx(entry['identity_residual'], abs=1e-12 * E)
    assert entry['defect'] >= -ACCEPTANCE['morawetz_relative'] * E


def test_morawetz_needs_registered_radius(cubic_two_sided, cubic_params):
    with pytest.raises(ProbeError):
        morawetz_report(cubic_two_sided, 3.0, cubic_params)
