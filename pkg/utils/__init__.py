"""
Radial Wave Lab - Utilities Module Package
Domain types, scenario validation and error handling

utils.validators depends on the numerical core and is imported directly, not re-exported here.
"""

__version__ = "1.0.0"
__author__ = "Radial Wave Lab Team"
__description__ = "Data models, validators and the error handling system"

try:
    from .error_handlers import (
        error_handler, error_handler_decorator, ErrorType, ErrorSeverity, ErrorInfo, LabError,
    )
    from .data_models import ModelParams, GridSpec, RadialProfile, FieldState, RunReport, Verdict

    __all__ = [
        'error_handler',
        'error_handler_decorator',
        'ErrorType',
        'ErrorSeverity',
        'ErrorInfo',
        'LabError',
        'ModelParams',
        'GridSpec',
        'RadialProfile',
        'FieldState',
        'RunReport',
        'Verdict',
    ]

    _UTILS_MODULES_LOADED = True

except ImportError as e:
    _UTILS_MODULES_LOADED = False
    _IMPORT_ERROR = str(e)
    __all__ = []


def get_module_status():
    """Get status of utils module loading"""
    if _UTILS_MODULES_LOADED:
        return {'status': 'success', 'available_modules': __all__}
    return {'status': 'error', 'message': f'Utils loading failed: {_IMPORT_ERROR}'}
