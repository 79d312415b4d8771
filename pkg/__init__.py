"""
Radial Wave Lab - Main Package
Energy-flux laboratory for the radial defocusing wave equation in three dimensions

Architecture: characteristic integrator + energy ledger + scattering analysis + batch CLI
"""

__version__ = "1.0.0"
__title__ = "Radial Wave Lab"
__author__ = "Radial Wave Lab Team"
__description__ = "Characteristic solver and energy-flux diagnostics for u_tt - Δu = -|u|^{p-1}u, 3 <= p < 5"

# Package metadata
__license__ = "MIT"
__copyright__ = "2026 Radial Wave Lab Team"

# Import key components for easy access
try:
    from core import scenario_manager, get_module_status as get_core_status
    from utils import error_handler, get_module_status as get_utils_status
    from utils.validators import input_validator
    from views import report_writer, get_module_status as get_views_status
    from config import get_config_status

    _PACKAGE_LOADED = True
    _IMPORT_ERRORS = []

except ImportError as e:
    _PACKAGE_LOADED = False
    _IMPORT_ERRORS = [str(e)]

# Main exports
__all__ = [
    'scenario_manager',
    'input_validator',
    'error_handler',
    'report_writer',
    'get_config_status',
    'get_system_status',
    'get_version_info',
]


def get_system_status():
    """Get comprehensive system status"""
    status = {
        'package_version': __version__,
        'package_loaded': _PACKAGE_LOADED,
    }

    if not _PACKAGE_LOADED:
        status['overall_health'] = 'critical'
        status['import_errors'] = _IMPORT_ERRORS
        return status

    status['core'] = get_core_status()
    status['utils'] = get_utils_status()
    status['views'] = get_views_status()
    status['config'] = get_config_status()

    issues = []
    if status['core'].get('status') != 'success':
        issues.append('Core modules failed to load')
    if status['utils'].get('status') != 'success':
        issues.append('Utils modules failed to load')
    if status['views'].get('status') != 'success':
        issues.append('Views modules failed to load')
    if not status['config'].get('available_scenarios'):
        issues.append('Scenario library is empty')
    status['critical_issues'] = issues
    status['overall_health'] = 'healthy' if not issues else 'degraded'
    return status


def get_version_info():
    """Get detailed version information"""
    return {
        'version': __version__,
        'title': __title__,
        'description': __description__,
        'author': __author__,
        'license': __license__,
        'copyright': __copyright__,
        'package_loaded': _PACKAGE_LOADED,
    }
