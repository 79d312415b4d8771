"""
Radial Wave Lab - Scenario Validation Tests
Schema checks, lattice alignment, probe sets and the scenario library
"""

import copy

import pytest

from config import list_available_scenarios
from core.scenario_manager import ScenarioManager, scenario_manager
from utils.error_handlers import ConfigurationError
from utils.validators import parse_length, parse_scenario, input_validator

pytestmark = pytest.mark.unit


def _with(data, **sections):
    """Copy of a scenario mapping with sections merged in"""
    out = copy.deepcopy(data)
    for key, value in sections.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key].update(value)
        else:
            out[key] = value
    return out


# =============================================================================
# LENGTHS
# =============================================================================


@pytest.mark.parametrize("raw,expected", [
    ("2^-8", 2.0 ** -8),
    ("2**-3", 0.125),
    ("0.5", 0.5),
    (3.0, 3.0),
])
def test_parse_length(raw, expected):
    assert parse_length(raw) == expected


def test_parse_length_rejects_text():
    with pytest.raises(ValueError):
        parse_length("half")


# =============================================================================
# SCHEMA
# =============================================================================

def test_tiny_scenario_is_valid(tiny_scenario_data):
    scenario = parse_scenario(tiny_scenario_data)
    assert scenario.name == 'tiny'
    assert scenario.model_params().p == 3.0
    assert scenario.grid_spec().dr == 2.0 ** -4
    assert scenario.grid_spec(2.0 ** -5).dr == 2.0 ** -5
    assert scenario.convergence is None


def test_unknown_key_rejected(tiny_scenario_data):
    with pytest.raises(ConfigurationError) as excinfo:
        parse_scenario(_with(tiny_scenario_data, colour='blue'))
    assert 'colour' in excinfo.value.message


def test_unknown_nested_key_rejected(tiny_scenario_data):
    with pytest.raises(ConfigurationError) as excinfo:
        parse_scenario(_with(tiny_scenario_data, grid={'cfl': 0.5}))
    assert 'grid.cfl' in excinfo.value.message


@pytest.mark.parametrize("p", [5.0, 2.5])
def test_exponent_out_of_range(tiny_scenario_data, p):
    with pytest.raises(ConfigurationError) as excinfo:
        parse_scenario(_with(tiny_scenario_data, params={'p': p}))
    assert excinfo.value.field == 'params.p'


def test_top_level_must_be_mapping():
    with pytest.raises(ConfigurationError):
        parse_scenario([1, 2, 3])


def test_grid_must_be_lattice_aligned(tiny_scenario_data):
    with pytest.raises(ConfigurationError) as excinfo:
        parse_scenario(_with(tiny_scenario_data, grid={'r_max': 8.03}))
    assert 'not a multiple of dr' in excinfo.value.message


def test_misaligned_label_rejected(tiny_scenario_data):
    probes = {'outgoing_labels': [0.01]}
    with pytest.raises(ConfigurationError) as excinfo:
        parse_scenario(_with(tiny_scenario_data, probes=probes))
    assert 'not aligned' in excinfo.value.message


def test_snapshot_after_horizon_rejected(tiny_scenario_data):
    with pytest.raises(ConfigurationError):
        parse_scenario(_with(tiny_scenario_data, probes={'snapshot_times': [3.0]}))


def test_inadmissible_theorem2_rejected(tiny_scenario_data):
    probes = {'theorem2': [{'R': 1.0, 'beta': 0.3, 'kappa': 0.6}]}
    with pytest.raises(ConfigurationError) as excinfo:
        parse_scenario(_with(tiny_scenario_data, probes=probes))
    assert 'not admissible' in excinfo.value.message


def test_inadmissible_annulus_rejected(tiny_scenario_data):
    with pytest.raises(ConfigurationError):
        parse_scenario(_with(tiny_scenario_data, probes={'annulus': [{'c': 0.5, 'beta': 0.6}]}))


def test_power_tail_needs_truncation(tiny_scenario_data):
    profile = {'kind': 'power_tail', 'amplitude': 0.5, 'epsilon': 0.1}
    with pytest.raises(ConfigurationError):
        parse_scenario(_with(tiny_scenario_data, profile=profile))


def test_power_tail_exponent_from_epsilon(tiny_scenario_data):
    profile = {'kind': 'power_tail', 'amplitude': 0.5, 'epsilon': 0.1, 'truncation_radius': 4.0}
    scenario = parse_scenario(_with(tiny_scenario_data, profile=profile))
    assert scenario.radial_profile().tail_exponent == pytest.approx(2.0 * 7.0 / 16.0 + 0.1)


def test_region_fields_required(tiny_scenario_data):
    probes = {'regions': [{'name': 'tri', 'kind': 'triangle', 't0': 0.0}]}
    with pytest.raises(ConfigurationError) as excinfo:
        parse_scenario(_with(tiny_scenario_data, probes=probes))
    assert 'missing r0' in excinfo.value.message


def test_duplicate_region_names_rejected(tiny_scenario_data):
    region = {'name': 'tri', 'kind': 'triangle', 't0': 0.0, 'r0': 2.0}
    with pytest.raises(ConfigurationError):
        parse_scenario(_with(tiny_scenario_data, probes={'regions': [region, dict(region)]}))


def test_refinements_sorted_and_halving(tiny_scenario_data):
    scenario = parse_scenario(_with(tiny_scenario_data, convergence={'refinements': ['2^-6', '2^-4', '2^-5']}))
    assert scenario.convergence.refinements == [2.0 ** -4, 2.0 ** -5, 2.0 ** -6]


@pytest.mark.parametrize("levels", [['2^-4', '2^-5'], ['2^-4', '2^-5', '2^-7']])
def test_bad_refinements_rejected(tiny_scenario_data, levels):
    with pytest.raises(ConfigurationError):
        parse_scenario(_with(tiny_scenario_data, convergence={'refinements': levels}))


# =============================================================================
# PROBE SETS
# =============================================================================

def test_probe_set_collects_requests(tiny_scenario_data):
    probes = {
        'outgoing_labels': [0.0],
        'incoming_labels': [4.0],
        'snapshot_times': [1.0],
        'morawetz_radii': [2.0],
        'regions': [{'name': 'tri', 'kind': 'triangle', 't0': 0.0, 'r0': 2.0}],
        'decay_windows': [{'label': 1.0}],
    }
    scenario = parse_scenario(_with(tiny_scenario_data, probes=probes))
    forward = scenario.probe_set()
    assert forward.outgoing_labels == [0.0, 1.0], "decay labels are traced"
    assert forward.snapshot_times == [0.0, 1.0, 2.0]
    assert forward.shell_radii == [2.0]
    assert forward.regions == {'tri': [(0.0, 0.0), (2.0, 0.0), (0.0, 2.0)]}

    backward = scenario.backward_probe_set()
    assert backward.outgoing_labels == [-4.0], "incoming line s continues as outgoing label -s"
    assert backward.regions == {}


def test_echo_is_plain_data(tiny_scenario_data):
    echo = parse_scenario(tiny_scenario_data).echo()
    assert echo['grid']['dr'] == 2.0 ** -4
    assert echo['profile']['kind'] == 'gaussian_bump'
    assert parse_scenario(echo).grid_spec() == parse_scenario(tiny_scenario_data).grid_spec()


# =============================================================================
# COMMAND-LINE INPUTS
# =============================================================================

@pytest.mark.parametrize("value,ok", [("2", True), (1, True), (0, False), ("many", False)])
def test_validate_threads(value, ok):
    is_valid, message = input_validator.validate_threads(value)
    assert is_valid is ok
    assert bool(message) is not ok


def test_validate_config_path(tmp_path, tiny_scenario_file):
    assert input_validator.validate_config_path(str(tiny_scenario_file)) == (True, "")
    assert not input_validator.validate_config_path(None)[0]
    assert not input_validator.validate_config_path(str(tmp_path / "missing.yaml"))[0]
    text_file = tmp_path / "scenario.txt"
    text_file.write_text("name: x\n", encoding='utf-8')
    assert not input_validator.validate_config_path(str(text_file))[0]


def test_validate_output_dir(tmp_path):
    assert input_validator.validate_output_dir(str(tmp_path / "new"))[0]
    blocker = tmp_path / "file"
    blocker.write_text("", encoding='utf-8')
    assert not input_validator.validate_output_dir(str(blocker))[0]


# =============================================================================
# SCENARIO LIBRARY
# =============================================================================

def test_bundled_scenarios_load():
    names = list_available_scenarios()
    assert {'standard', 'zero', 'linear', 'refinement'} <= set(names)
    for name in names:
        scenario = scenario_manager.load_scenario(name)
        assert scenario.name == name


def test_scenario_cache(tiny_scenario_file):
    first = scenario_manager.load_scenario(tiny_scenario_file)
    assert scenario_manager.load_scenario(tiny_scenario_file) is first
    assert scenario_manager.get_cache_info()['cache_size'] == 1
    scenario_manager.clear_cache()
    assert scenario_manager.get_cache_info()['cache_size'] == 0


def test_resolve_names_and_paths(tiny_scenario_file):
    assert scenario_manager.resolve('standard').name == 'standard.yaml'
    assert scenario_manager.resolve(str(tiny_scenario_file)) == tiny_scenario_file
    with pytest.raises(ConfigurationError):
        scenario_manager.resolve('no_such_scenario')


def test_support_guard_on_load(write_scenario, tiny_scenario_data):
    path = write_scenario(_with(tiny_scenario_data, grid={'r_max': 7.0}))
    with pytest.raises(ConfigurationError) as excinfo:
        ScenarioManager().load_scenario(path)
    assert excinfo.value.field == 'grid.r_max'


def test_empty_and_broken_yaml(tmp_path):
    manager = ScenarioManager(tmp_path)
    (tmp_path / "empty.yaml").write_text("", encoding='utf-8')
    (tmp_path / "broken.yaml").write_text("grid: [1, 2\n", encoding='utf-8')
    assert manager.get_available_scenarios() == ['broken', 'empty']
    with pytest.raises(ConfigurationError):
        manager.load_scenario('empty')
    with pytest.raises(ConfigurationError):
        manager.load_scenario('broken')
