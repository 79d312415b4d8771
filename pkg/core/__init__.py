"""
Radial Wave Lab - Core Module Package
Numerical modules, run probes, scenario management and the experiment commands
"""

__version__ = "1.0.0"
__author__ = "Radial Wave Lab Team"
__description__ = "Characteristic integrator, energy ledger and scattering analysis"

# Import key classes for easy access
try:
    from .scenario_manager import scenario_manager, ScenarioManager
    from .evolve import run, run_bidirectional, convergence_study
    from .experiment_cli import COMMANDS, execute

    __all__ = [
        'scenario_manager',
        'ScenarioManager',
        'run',
        'run_bidirectional',
        'convergence_study',
        'COMMANDS',
        'execute',
    ]

    _CORE_MODULES_LOADED = True

except ImportError as e:
    _CORE_MODULES_LOADED = False
    _IMPORT_ERROR = str(e)
    __all__ = []


def get_module_status():
    """Get status of core module loading"""
    if _CORE_MODULES_LOADED:
        return {
            'status': 'success',
            'message': 'All core modules loaded successfully',
            'available_modules': __all__,
        }
    return {
        'status': 'error',
        'message': f'Module loading failed: {_IMPORT_ERROR}',
    }
