"""
Radial Wave Lab - Pytest Configuration
Shared test fixtures and configuration
"""

import os
import sys
from pathlib import Path
from typing import Any, Callable, Dict

import pytest
import yaml

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from constants import ProfileKind
from core.evolve import run, run_bidirectional
from core.radial_core import init_state
from utils.data_models import GridSpec, ModelParams, ProbeSet, RadialProfile

# =============================================================================
# PYTEST CONFIGURATION
# =============================================================================


def pytest_configure(config):
    """Set the test environment and register custom markers"""
    os.environ["RWL_ENV"] = "test"
    os.environ["RWL_LOG_LEVEL"] = "WARNING"
    os.environ["RWL_THREADS"] = "1"

    config.addinivalue_line(
        "markers", "slow: acceptance runs on the bundled scenarios (deselect with '-m \"not slow\"')"
    )
    config.addinivalue_line(
        "markers", "integration: commands end to end through the command line"
    )
    config.addinivalue_line(
        "markers", "unit: fast checks on coarse lattices"
    )


# =============================================================================
# MODEL FIXTURES
# =============================================================================

COARSE_DR = 2.0 ** -5


@pytest.fixture(scope="session")
def cubic_params() -> ModelParams:
    return ModelParams(p=3.0)


@pytest.fixture(scope="session")
def linear_params() -> ModelParams:
    return ModelParams(p=3.0, linear=True)


@pytest.fixture(scope="session")
def coarse_grid() -> GridSpec:
    """32 cells per unit length, support guard met for the bump below"""
    return GridSpec(dr=COARSE_DR, r_max=24.0, t_end=8.0)


@pytest.fixture(scope="session")
def bump_profile() -> RadialProfile:
    return RadialProfile(kind=ProfileKind.GAUSSIAN_BUMP, amplitude=0.5, center=4.0, width=1.0)


@pytest.fixture(scope="session")
def moving_profile() -> RadialProfile:
    """Bump with a nonzero initial velocity"""
    velocity = RadialProfile(kind=ProfileKind.GAUSSIAN_BUMP, amplitude=0.3, center=4.0, width=1.0)
    return RadialProfile(kind=ProfileKind.GAUSSIAN_BUMP, amplitude=0.5, center=4.0, width=1.0,
                         velocity=velocity)


@pytest.fixture(scope="session")
def coarse_probes() -> ProbeSet:
    return ProbeSet(
        outgoing_labels=[0.0, 2.0],
        incoming_labels=[6.0],
        snapshot_times=[2.0, 4.0],
        shell_radii=[2.0, 4.0],
        regions={
            'rectangle': [(2.0, 0.0), (6.0, 0.0), (6.0, 3.0), (2.0, 3.0)],
            'triangle': [(0.0, 0.0), (6.0, 0.0), (0.0, 6.0)],
            'parallelogram': [(4.0, 0.0), (6.0, 0.0), (3.0, 3.0), (1.0, 3.0)],
        },
    )


# =============================================================================
# CACHED RUNS
# =============================================================================

@pytest.fixture(scope="session")
def cubic_run(coarse_grid, cubic_params, bump_profile, coarse_probes):
    """Forward run of the bump at p = 3"""
    return run(init_state(bump_profile, coarse_grid), coarse_grid, cubic_params, coarse_probes)


@pytest.fixture(scope="session")
def linear_run(coarse_grid, linear_params, moving_profile, coarse_probes):
    """Forward free-wave run of the moving bump"""
    return run(init_state(moving_profile, coarse_grid), coarse_grid, linear_params, coarse_probes)


@pytest.fixture(scope="session")
def cubic_two_sided(coarse_grid, cubic_params, bump_profile, coarse_probes):
    backward = ProbeSet(outgoing_labels=[-6.0], snapshot_times=[2.0, 4.0], shell_radii=[2.0, 4.0])
    return run_bidirectional(init_state(bump_profile, coarse_grid), coarse_grid, cubic_params,
                             coarse_probes, backward)


# =============================================================================
# SCENARIO FIXTURES
# =============================================================================

def _tiny_scenario() -> Dict[str, Any]:
    return {
        'name': 'tiny',
        'params': {'p': 3.0},
        'grid': {'dr': '2^-4', 'r_max': 10.0, 't_end': 2.0},
        'profile': {'kind': 'gaussian_bump', 'amplitude': 0.25, 'center': 2.0, 'width': 0.5},
        'probes': {'outgoing_labels': [0.0], 'snapshot_times': [1.0]},
    }


@pytest.fixture
def tiny_scenario_data() -> Dict[str, Any]:
    """Scenario mapping small enough for end-to-end command runs"""
    return _tiny_scenario()


@pytest.fixture
def write_scenario(tmp_path) -> Callable[..., Path]:
    """Write a scenario mapping to a YAML file under tmp_path"""
    def _write(data: Dict[str, Any], name: str = "scenario.yaml") -> Path:
        path = tmp_path / name
        path.write_text(yaml.safe_dump(data, sort_keys=False), encoding='utf-8')
        return path
    return _write


@pytest.fixture
def tiny_scenario_file(write_scenario, tiny_scenario_data) -> Path:
    return write_scenario(tiny_scenario_data)


# =============================================================================
# CLEANUP FIXTURES
# =============================================================================

@pytest.fixture(autouse=True)
def reset_singletons():
    """Reset global caches between tests"""
    yield
    from core.scenario_manager import scenario_manager
    from utils.error_handlers import error_handler
    scenario_manager.clear_cache()
    error_handler.clear_history()
