"""
Radial Wave Lab - Error Handling System
Domain exceptions, structured error records and exit-code mapping
"""

import traceback
import functools
from typing import Dict, Any, Optional, Callable, List
from enum import Enum
from dataclasses import dataclass, field
from datetime import datetime

from loguru import logger

from constants import EXIT_USAGE


class LabError(Exception):
    """Base exception for all laboratory errors"""

    def __init__(self, message: str, field: Optional[str] = None, value: Any = None,
                 context: Optional[Dict[str, Any]] = None):
        self.message = message
        self.field = field
        self.value = value
        self.context = context or {}
        super().__init__(message)


class DomainError(LabError):
    """Parameter outside its mathematical domain (e.g. p outside [3, 5))"""


class ConfigurationError(LabError):
    """Invalid scenario, broken guard or unknown configuration key"""


class LatticeError(LabError):
    """Label, radius, region or refinement not aligned with the lattice"""


class DivergenceError(LabError):
    """Non-finite values produced by the integrator"""

    def __init__(self, message: str, step_index: int, **kwargs):
        self.step_index = step_index
        super().__init__(message, **kwargs)


class InconsistencyError(LabError):
    """Inputs that contradict each other (e.g. E <= 0 for a nonzero state)"""


class ProbeError(LabError):
    """Analysis requested data that was not recorded during the run"""


class ErrorType(Enum):
    """Error type enumeration"""
    DOMAIN_ERROR = "domain_error"
    CONFIGURATION_ERROR = "config_error"
    LATTICE_ERROR = "lattice_error"
    DIVERGENCE_ERROR = "divergence_error"
    INCONSISTENCY_ERROR = "inconsistency_error"
    PROBE_ERROR = "probe_error"
    SYSTEM_ERROR = "system_error"


class ErrorSeverity(Enum):
    """Error severity levels"""
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


_TYPE_BY_EXCEPTION = (
    (DomainError, ErrorType.DOMAIN_ERROR),
    (ConfigurationError, ErrorType.CONFIGURATION_ERROR),
    (LatticeError, ErrorType.LATTICE_ERROR),
    (DivergenceError, ErrorType.DIVERGENCE_ERROR),
    (InconsistencyError, ErrorType.INCONSISTENCY_ERROR),
    (ProbeError, ErrorType.PROBE_ERROR),
)


@dataclass
class ErrorInfo:
    """Error information structure"""
    error_type: ErrorType
    severity: ErrorSeverity
    message: str
    timestamp: str
    context: Dict[str, Any] = field(default_factory=dict)
    field_name: Optional[str] = None
    traceback_info: Optional[str] = None
    exit_code: int = EXIT_USAGE

    def to_dict(self) -> Dict[str, Any]:
        return {
            'error_type': self.error_type.value,
            'severity': self.severity.value,
            'message': self.message,
            'field': self.field_name,
            'context': self.context,
            'exit_code': self.exit_code,
        }


class ErrorHandler:
    """
    Central error handler: classifies exceptions, logs them and keeps a bounded history
    """

    def __init__(self, max_error_history: int = 100):
        self.error_history: List[ErrorInfo] = []
        self.max_error_history = max_error_history

        self.hints = {
            ErrorType.DOMAIN_ERROR: "check the exponent p and the probe exponents",
            ErrorType.CONFIGURATION_ERROR: "fix the scenario file (unknown keys are rejected)",
            ErrorType.LATTICE_ERROR: "labels, radii and vertices must be integer multiples of dr",
            ErrorType.DIVERGENCE_ERROR: "inspect dt/dr and the nonlinearity sign",
            ErrorType.PROBE_ERROR: "register the probe in the scenario before running",
        }

    def classify(self, exception: Exception) -> ErrorType:
        """Map an exception onto its error type"""
        for exc_class, error_type in _TYPE_BY_EXCEPTION:
            if isinstance(exception, exc_class):
                return error_type
        return ErrorType.SYSTEM_ERROR

    def handle_error(self,
                     exception: Exception,
                     error_type: Optional[ErrorType] = None,
                     context: Optional[Dict[str, Any]] = None) -> ErrorInfo:
        """
        Record and log an error

        Args:
            exception: The exception that occurred
            error_type: Type of error, inferred from the exception when omitted
            context: Additional context information

        Returns:
            ErrorInfo: Structured error record
        """
        error_type = error_type or self.classify(exception)
        merged_context = dict(getattr(exception, 'context', {}) or {})
        merged_context.update(context or {})
        if isinstance(exception, DivergenceError):
            merged_context['step_index'] = exception.step_index

        error_info = ErrorInfo(
            error_type=error_type,
            severity=self._determine_severity(error_type),
            message=str(exception),
            timestamp=datetime.now().isoformat(),
            context=merged_context,
            field_name=getattr(exception, 'field', None),
            traceback_info=traceback.format_exc() if error_type == ErrorType.SYSTEM_ERROR else None,
            exit_code=EXIT_USAGE,
        )

        self._log_error(error_info)
        self._store_error(error_info)
        return error_info

    def _determine_severity(self, error_type: ErrorType) -> ErrorSeverity:
        if error_type in (ErrorType.DIVERGENCE_ERROR, ErrorType.SYSTEM_ERROR):
            return ErrorSeverity.CRITICAL
        if error_type in (ErrorType.INCONSISTENCY_ERROR, ErrorType.PROBE_ERROR):
            return ErrorSeverity.HIGH
        if error_type == ErrorType.CONFIGURATION_ERROR:
            return ErrorSeverity.MEDIUM
        return ErrorSeverity.LOW

    def _log_error(self, error_info: ErrorInfo) -> None:
        log_message = f"{error_info.error_type.value} - {error_info.message}"
        hint = self.hints.get(error_info.error_type)
        if hint:
            log_message += f" ({hint})"

        bound = logger.bind(error_type=error_info.error_type.value, **error_info.context)
        if error_info.severity == ErrorSeverity.CRITICAL:
            bound.critical(log_message)
        elif error_info.severity == ErrorSeverity.HIGH:
            bound.error(log_message)
        else:
            bound.warning(log_message)
        if error_info.traceback_info:
            logger.debug(error_info.traceback_info)

    def _store_error(self, error_info: ErrorInfo) -> None:
        self.error_history.append(error_info)
        if len(self.error_history) > self.max_error_history:
            self.error_history = self.error_history[-self.max_error_history:]

    def get_error_stats(self) -> Dict[str, Any]:
        """Get error statistics"""
        stats: Dict[str, int] = {}
        for info in self.error_history:
            stats[info.error_type.value] = stats.get(info.error_type.value, 0) + 1
        return {
            'total_errors': len(self.error_history),
            'by_type': stats,
            'last_error': self.error_history[-1].to_dict() if self.error_history else None,
        }

    def clear_history(self) -> None:
        self.error_history = []


def error_handler_decorator(error_type: Optional[ErrorType] = None,
                            fallback_return: Any = None,
                            reraise: bool = False) -> Callable:
    """
    Decorator turning lab errors into logged ErrorInfo records

    Args:
        error_type: Forced error type, inferred when None
        fallback_return: Value returned after an error; callables receive the ErrorInfo
        reraise: Re-raise after logging instead of returning the fallback
    """
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except Exception as e:
                info = error_handler.handle_error(
                    e, error_type, context={'function': func.__name__}
                )
                if reraise:
                    raise
                if callable(fallback_return):
                    return fallback_return(info)
                return fallback_return
        return wrapper
    return decorator


# Global error handler instance
error_handler = ErrorHandler()
