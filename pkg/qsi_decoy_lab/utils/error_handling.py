"""Error handling utilities for QSI Decoy Lab."""

import traceback
from typing import Optional, Dict, Any, Callable
import logging

logger = logging.getLogger(__name__)

# CLI exit codes
EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3
EXIT_INFEASIBLE = 4


class QSIError(Exception):
    """Base exception for QSI Decoy Lab."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ConfigurationError(QSIError):
    """Raised when a run configuration is missing, malformed or inconsistent."""
    pass


class ValidationError(QSIError):
    """Raised when a physical parameter is outside its domain."""
    pass


class HeraldingError(ValidationError):
    """Raised when a heralded source can never announce a photon."""
    pass


class BracketError(ValidationError):
    """Raised when a root or optimum bracket does not contain a solution."""
    pass


class DegenerateIntensitiesError(ValidationError):
    """Raised when signal and decoy intensities cannot separate yields."""
    pass


class NoSignalError(ValidationError):
    """Raised when the receiver never clicks (zero gain or zero yield)."""
    pass


class InfeasibleError(QSIError):
    """Raised when a computation has no secure or meaningful solution."""
    pass


class FileSystemError(QSIError):
    """Raised when there's a file system related error."""
    pass


class ExportError(QSIError):
    """Raised when report emission fails."""
    pass


class ErrorHandler:
    """Centralized error handling for CLI commands."""

    def __init__(self, verbose: bool = False):
        """Initialize error handler.

        Args:
            verbose: Whether to include tracebacks in error information
        """
        self.verbose = verbose

    def handle_error(self, error: Exception, context: str = "") -> Dict[str, Any]:
        """Handle an error and return structured error information.

        Args:
            error: The exception that occurred
            context: Additional context about where the error occurred

        Returns:
            Dictionary with error information and the matching exit code
        """
        error_info = {
            "error": error,
            "error_type": type(error).__name__,
            "message": str(error),
            "context": context,
            "exit_code": exit_code_for(error),
            "success": False,
        }

        if isinstance(error, QSIError):
            error_info["details"] = error.details

        if self.verbose:
            error_info["traceback"] = traceback.format_exc()

        logger.info(
            "Error in %s: %s: %s", context, error_info["error_type"], error_info["message"]
        )
        if self.verbose:
            logger.debug("Traceback: %s", error_info.get("traceback", "N/A"))

        return error_info

    def safe_execute(self, func: Callable, *args, context: str = "", **kwargs) -> Dict[str, Any]:
        """Safely execute a function and handle any errors.

        Args:
            func: Function to execute
            *args: Positional arguments for the function
            context: Context description for error handling
            **kwargs: Keyword arguments for the function

        Returns:
            Dictionary with result or error information
        """
        try:
            result = func(*args, **kwargs)
            return {"success": True, "result": result, "exit_code": EXIT_OK}
        except Exception as e:
            return self.handle_error(e, context)


def require(condition: bool, message: str, **details: Any) -> None:
    """Raise ValidationError with details unless condition holds."""
    if not condition:
        raise ValidationError(message, details=details)


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the CLI exit code contract."""
    if isinstance(error, (ConfigurationError, ValidationError)):
        return EXIT_CONFIG_ERROR
    if isinstance(error, (FileSystemError, ExportError, OSError)):
        return EXIT_IO_ERROR
    if isinstance(error, InfeasibleError):
        return EXIT_INFEASIBLE
    return EXIT_UNEXPECTED


def create_user_friendly_error(error: Exception) -> str:
    """Create a user-friendly error message.

    Args:
        error: Exception to format

    Returns:
        User-friendly error message
    """
    if isinstance(error, ConfigurationError):
        return f"Configuration error: {error.message}"
    elif isinstance(error, FileSystemError):
        return f"File system error: {error.message}"
    elif isinstance(error, InfeasibleError):
        return f"Infeasible: {error.message}"
    elif isinstance(error, ValidationError):
        return f"Validation error: {error.message}"
    elif isinstance(error, ExportError):
        return f"Export error: {error.message}"
    elif isinstance(error, FileNotFoundError):
        return f"File not found: {error.filename or 'Unknown file'}"
    elif isinstance(error, PermissionError):
        return f"Permission denied: {error.filename or 'Unknown file'}"
    elif isinstance(error, KeyboardInterrupt):
        return "Operation cancelled by user"
    else:
        return f"Unexpected error: {str(error)}"
