"""
Radial Wave Lab - Command Line Tests
Exit codes, written files and reproducible outputs of the batch commands
"""

import json
from pathlib import Path

import pandas as pd
import pytest

import app
from config.settings import config
from constants import (
    ACCEPTANCE, EXIT_OK, EXIT_USAGE, EXIT_VERDICT_FAILURE, SNAPSHOT_FILE, ORIGIN_FILE, ENERGY_FILE,
    REPORT_FILE, FLUX_RESIDUAL_FILE, MORAWETZ_FILE, G_PROFILE_FILE, CONVERGENCE_FILE,
)
from core import experiment_cli
from core.energy_ledger import morawetz_report
from core.experiment_cli import COMMANDS, execute, output_directory
from utils.data_models import RunReport
from utils.error_handlers import ConfigurationError, error_handler
from utils.validators import parse_scenario
from views.report_writer import report_writer, rows_frame

pytestmark = pytest.mark.integration


def _main(command, config_path, out, *extra):
    return app.main([command, '--config', str(config_path), '--out', str(out), '--log-level', 'WARNING', *extra])


# =============================================================================
# USAGE ERRORS
# =============================================================================


def test_missing_config_is_usage_error():
    assert app.main(['simulate']) == EXIT_USAGE


def test_unknown_command_is_usage_error(tiny_scenario_file):
    assert app.main(['animate', '--config', str(tiny_scenario_file)]) == EXIT_USAGE


def test_nonexistent_config(tmp_path):
    assert _main('simulate', tmp_path / 'missing.yaml', tmp_path / 'out') == EXIT_USAGE


@pytest.mark.parametrize("threads", ["0", "two"])
def test_bad_threads(tiny_scenario_file, tmp_path, threads):
    assert _main('simulate', tiny_scenario_file, tmp_path / 'out', '--threads', threads) == EXIT_USAGE


def test_unknown_key_in_scenario(write_scenario, tiny_scenario_data, tmp_path):
    path = write_scenario({**tiny_scenario_data, 'colour': 'blue'}, name='bad.yaml')
    assert _main('simulate', path, tmp_path / 'out') == EXIT_USAGE
    assert error_handler.get_error_stats()['by_type'] == {'config_error': 1}
    assert not (tmp_path / 'out').exists()


def test_out_must_be_a_directory(tiny_scenario_file, tmp_path):
    blocker = tmp_path / 'blocker'
    blocker.write_text('', encoding='utf-8')
    assert _main('simulate', tiny_scenario_file, blocker) == EXIT_USAGE


def test_verify_flux_needs_regions(tiny_scenario_file, tmp_path):
    assert _main('verify-flux', tiny_scenario_file, tmp_path / 'out') == EXIT_USAGE


def test_convergence_needs_section(tiny_scenario_file, tmp_path):
    assert _main('convergence', tiny_scenario_file, tmp_path / 'out') == EXIT_USAGE


def test_execute_rejects_unknown_command(tiny_scenario_file, tmp_path):
    outcome = execute('animate', str(tiny_scenario_file), out=str(tmp_path))
    assert outcome.exit_code == EXIT_USAGE
    assert outcome.report is None


# =============================================================================
# SIMULATE
# =============================================================================

def test_simulate_writes_outputs(tiny_scenario_file, tmp_path):
    out = tmp_path / 'simulate'
    assert _main('simulate', tiny_scenario_file, out) == EXIT_OK
    for name in (SNAPSHOT_FILE, ORIGIN_FILE, ENERGY_FILE, REPORT_FILE):
        assert (out / name).is_file(), f"{name} written"

    report = json.loads((out / REPORT_FILE).read_text(encoding='utf-8'))
    assert report['command'] == 'simulate'
    assert report['all_passed'] is True
    assert 'metadata' in report
    assert {v['name'] for v in report['verdicts']} >= {'energy_drift', 'partition', 'pointwise_bound'}

    snapshots = pd.read_csv(out / SNAPSHOT_FILE)
    assert list(snapshots.columns) == ['t', 'r', 'w', 'phi', 'psi']
    assert sorted(snapshots['t'].unique()) == [0.0, 1.0, 2.0]
    energy = pd.read_csv(out / ENERGY_FILE)
    assert len(energy) == 2 * 16 + 1


def test_verdict_failure_exit_code(tiny_scenario_file, tmp_path, monkeypatch):
    monkeypatch.setitem(ACCEPTANCE, 'energy_drift', -1.0)
    outcome = execute('simulate', str(tiny_scenario_file), out=str(tmp_path / 'out'), include_metadata=False)
    assert outcome.exit_code == EXIT_VERDICT_FAILURE
    failed = [v.name for v in outcome.report.verdicts if not v.passed]
    assert failed == ['energy_drift']
    assert (tmp_path / 'out' / REPORT_FILE).is_file(), "outputs are written even when a verdict fails"


def test_morawetz_defect_verdict_tracks_boundary_tail(write_scenario, tiny_scenario_data, tmp_path, monkeypatch):
    data = {**tiny_scenario_data, 'probes': {'morawetz_radii': [1.0]}}
    path = write_scenario(data)
    outcome = execute('verify-morawetz', str(path), out=str(tmp_path / 'clean'), include_metadata=False)
    verdicts = {v.name: v for v in outcome.report.verdicts}
    assert verdicts['morawetz_defect_R1'].measured == pytest.approx(verdicts['morawetz_identity_R1'].measured)
    assert verdicts['morawetz_defect_R1'].measured >= 0.0

    def shifted_report(two_sided, R, params, *args, **kwargs):
        entry = morawetz_report(two_sided, R, params, *args, **kwargs)
        return {**entry, 'defect': entry['defect'] + 0.5 * entry['E']}

    monkeypatch.setattr(experiment_cli, 'morawetz_report', shifted_report)
    outcome = execute('verify-morawetz', str(path), out=str(tmp_path / 'shifted'), include_metadata=False)
    assert outcome.exit_code == EXIT_VERDICT_FAILURE
    failed = [v.name for v in outcome.report.verdicts if not v.passed]
    assert 'morawetz_defect_R1' in failed


def _scattering_scenario(r_max: float):
    return {
        'name': 'compact',
        'params': {'p': 3.0},
        'grid': {'dr': '2^-4', 'r_max': r_max, 't_end': 12.0},
        'profile': {'kind': 'gaussian_bump', 'amplitude': 0.25, 'center': 2.0, 'width': 0.25},
        'probes': {
            'snapshot_times': [4.0, 8.0, 10.0],
            'annulus': [{'c': 0.5, 'beta': 0.4}],
            'theorem2': [{'R': 12.0, 'beta': 0.45, 'kappa': 0.6}],
        },
    }


def test_scattering_annulus_uses_backward_radiation(write_scenario, tmp_path):
    path = write_scenario(_scattering_scenario(24.0))
    outcome = execute('scattering', str(path), out=str(tmp_path / 'out'), include_metadata=False)
    verdicts = {v.name: v for v in outcome.report.verdicts}
    assert not any(name.startswith('annulus_partition') for name in verdicts)
    assert verdicts['annulus_inner_c0.5_beta0.4_t12'].passed
    trend = verdicts['annulus_retarded_trend_c0.5_beta0.4']
    assert not trend.flagged, "t = 10 and 12 lie beyond the data support"

    sections = outcome.report.sections
    E = sections['bookkeeping']['E']
    rows = sections['annulus']
    assert [row['t'] for row in rows] == [4.0, 8.0, 10.0, 12.0]
    for row in rows:
        assert row['retarded_target'] == pytest.approx(E - sections['g_minus'].scattered_energy)
        assert row['gap'] == pytest.approx(abs(row['annulus'] - row['retarded_target']) / E)


def test_scattering_extends_horizon_for_theorem2(write_scenario, tmp_path):
    path = write_scenario(_scattering_scenario(24.0))
    outcome = execute('scattering', str(path), out=str(tmp_path / 'out'), include_metadata=False)
    assert outcome.report.sections['horizon'] == pytest.approx(241 * 2.0 ** -4)
    verdicts = {v.name: v for v in outcome.report.verdicts}
    assert verdicts['theorem2_R12'].detail == ""
    assert 'theorem2_upper_R12' in verdicts


def test_theorem2_fails_on_short_horizon(write_scenario, tmp_path):
    path = write_scenario(_scattering_scenario(18.0))
    outcome = execute('scattering', str(path), out=str(tmp_path / 'out'), include_metadata=False)
    assert outcome.report.sections['horizon'] == pytest.approx(12.0), "support guard keeps t_end"
    verdict = {v.name: v for v in outcome.report.verdicts}['theorem2_R12']
    assert not verdict.passed
    assert "shorter than R + R^beta" in verdict.detail
    assert outcome.exit_code == EXIT_VERDICT_FAILURE


def test_seed_metadata_off_is_reproducible(tiny_scenario_file, tmp_path):
    first, second = tmp_path / 'first', tmp_path / 'second'
    assert _main('simulate', tiny_scenario_file, first, '--seed-metadata-off') == EXIT_OK
    assert _main('simulate', tiny_scenario_file, second, '--seed-metadata-off', '--threads', '2') == EXIT_OK
    names = sorted(p.name for p in first.iterdir())
    assert names == sorted(p.name for p in second.iterdir())
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), f"{name} differs"
    assert 'metadata' not in json.loads((first / REPORT_FILE).read_text(encoding='utf-8'))


def test_output_directory_precedence(tiny_scenario_data, tmp_path):
    scenario = parse_scenario(tiny_scenario_data)
    assert output_directory(scenario, 'simulate', str(tmp_path)) == tmp_path
    assert output_directory(scenario, 'simulate', None) == Path(config.run.output_dir) / 'tiny' / 'simulate'
    routed = parse_scenario({**tiny_scenario_data, 'output': {'directory': str(tmp_path / 'routed')}})
    assert output_directory(routed, 'simulate', None) == tmp_path / 'routed'


def test_csv_only_format(write_scenario, tiny_scenario_data, tmp_path):
    path = write_scenario({**tiny_scenario_data, 'output': {'formats': ['csv']}})
    outcome = execute('simulate', str(path), out=str(tmp_path / 'out'))
    assert outcome.exit_code == EXIT_OK
    assert sorted(p.name for p in outcome.files) == sorted([ENERGY_FILE, ORIGIN_FILE, SNAPSHOT_FILE])


# =============================================================================
# ALL COMMANDS ON THE ZERO SCENARIO
# =============================================================================

EXPECTED_TABLES = {
    'simulate': SNAPSHOT_FILE,
    'verify-flux': FLUX_RESIDUAL_FILE,
    'verify-morawetz': MORAWETZ_FILE,
    'scattering': G_PROFILE_FILE,
    'convergence': CONVERGENCE_FILE,
}


@pytest.mark.parametrize("command", sorted(COMMANDS))
def test_zero_scenario_passes(command, tmp_path):
    out = tmp_path / command
    assert _main(command, 'zero', out, '--seed-metadata-off') == EXIT_OK
    assert (out / EXPECTED_TABLES[command]).is_file()
    report = json.loads((out / REPORT_FILE).read_text(encoding='utf-8'))
    assert report['verdicts'], "every command records verdicts"
    assert all(v['passed'] for v in report['verdicts'])


# =============================================================================
# REPORT WRITER
# =============================================================================

def test_write_table_enforces_columns(tmp_path):
    with pytest.raises(ConfigurationError):
        report_writer.write_table(tmp_path, ENERGY_FILE, pd.DataFrame({'t': [0.0], 'E': [1.0]}))


def test_write_all_without_metadata(tmp_path):
    report = RunReport(command='simulate', scenario={'name': 'inline'}, sections={'value': float('nan')})
    frame = rows_frame([{'dr': 0.5, 'error': 1e-3, 'order': 2.0, 'drift': 1e-4, 'drift_order': 2.0}],
                       ['dr', 'error', 'order', 'drift', 'drift_order'])
    files = report_writer.write_all(tmp_path / 'out', report, {CONVERGENCE_FILE: frame}, include_metadata=False)
    assert [p.name for p in files] == [CONVERGENCE_FILE, REPORT_FILE]
    payload = json.loads(files[-1].read_text(encoding='utf-8'))
    assert payload['sections']['value'] is None, "non-finite numbers become null"
    assert 'metadata' not in payload
    assert not any(p.name.startswith('.') for p in (tmp_path / 'out').iterdir()), "no temporary files left"
