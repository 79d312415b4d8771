"""
Radial Wave Lab - Views Module Package
CSV and JSON persistence of command outputs
"""

__version__ = "1.0.0"
__author__ = "Radial Wave Lab Team"
__description__ = "Report writer with fixed CSV column contracts"

try:
    from .report_writer import report_writer, ReportWriter

    __all__ = ['report_writer', 'ReportWriter']

    _VIEWS_MODULES_LOADED = True

except ImportError as e:
    _VIEWS_MODULES_LOADED = False
    _IMPORT_ERROR = str(e)
    __all__ = []


def get_module_status():
    """Get status of views module loading"""
    if _VIEWS_MODULES_LOADED:
        return {
            'status': 'success',
            'message': 'Views module loaded successfully',
            'tables': sorted(report_writer.table_columns),
        }
    return {
        'status': 'error',
        'message': f'Views module loading failed: {_IMPORT_ERROR}',
    }
