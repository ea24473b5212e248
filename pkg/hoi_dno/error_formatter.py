"""
Colored error formatting for the hoi-dno command line
"""
import traceback

from .exceptions import (
    ArtifactError,
    ConfigError,
    HoiDnoError,
    MeshError,
    MetricError,
    OptimizationDivergedError,
    RigError,
    TrainingDivergedError,
)


class Colors:
    """ANSI color codes for terminal output"""
    RED = "\033[91m"
    YELLOW = "\033[93m"
    BLUE = "\033[94m"
    GREEN = "\033[92m"
    MAGENTA = "\033[95m"
    CYAN = "\033[96m"
    BOLD = "\033[1m"
    RESET = "\033[0m"


EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_MISSING_FILE = 3


def exit_code(error: BaseException) -> int:
    """Process exit status for an error raised by a subcommand"""
    if isinstance(error, ConfigError):
        return EXIT_CONFIG
    if isinstance(error, FileNotFoundError):
        return EXIT_MISSING_FILE
    return EXIT_ERROR


def format_error(error: BaseException, show_traceback: bool = False, color: bool = True) -> str:
    """
    Format an error with a colored type tag

    Args:
        error: The exception to format
        show_traceback: Whether to include full traceback
        color: Emit ANSI codes

    Returns:
        Formatted error string
    """
    if isinstance(error, ConfigError):
        tint, error_type = Colors.YELLOW, "CONFIG ERROR"
    elif isinstance(error, FileNotFoundError):
        tint, error_type = Colors.MAGENTA, "FILE NOT FOUND"
    elif isinstance(error, ArtifactError):
        tint, error_type = Colors.CYAN, "ARTIFACT ERROR"
    elif isinstance(error, (TrainingDivergedError, OptimizationDivergedError)):
        tint, error_type = Colors.RED, "DIVERGED"
    elif isinstance(error, MeshError):
        tint, error_type = Colors.RED, "MESH ERROR"
    elif isinstance(error, RigError):
        tint, error_type = Colors.RED, "RIG ERROR"
    elif isinstance(error, MetricError):
        tint, error_type = Colors.RED, "METRIC ERROR"
    elif isinstance(error, HoiDnoError):
        tint, error_type = Colors.RED, "HOI-DNO ERROR"
    else:
        tint, error_type = Colors.RED, "UNEXPECTED ERROR"

    bold = Colors.BOLD if color else ""
    reset = Colors.RESET if color else ""
    tint = tint if color else ""
    formatted = f"{tint}{bold}✗ [{error_type}]{reset} {tint}{error}{reset}"

    if isinstance(error, OptimizationDivergedError) and error.dump_path:
        formatted += f"\n{Colors.BLUE if color else ''}Iterate: {error.dump_path}{reset}"

    if show_traceback:
        tb = "".join(traceback.format_exception(type(error), error, error.__traceback__))
        formatted += f"\n\n{Colors.YELLOW if color else ''}Traceback:{reset}\n{tb}"

    return formatted
