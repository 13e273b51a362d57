"""
Error Types

Every failure raised by the engine derives from LocalLearningError. The
component tools catch these and turn them into status dictionaries; the CLI
maps the error type onto an exit code.
"""

from typing import Optional


class LocalLearningError(Exception):
    """Base class for all engine errors."""


class ShapeError(LocalLearningError):
    """Operand shapes are incompatible."""


class InputError(LocalLearningError):
    """Input values are outside their domain (labels, non-finite data)."""


class UsageError(LocalLearningError):
    """An API was called out of order or with an unsupported argument."""


class ConfigurationError(LocalLearningError):
    """A configuration value is invalid or inconsistent."""


class ConstructionError(LocalLearningError):
    """A model component cannot be built from the given layers."""


class InternalError(LocalLearningError):
    """An engine invariant was violated."""


class DivergenceError(LocalLearningError):
    """Training produced a non-finite or exploding loss."""


class UndefinedScoreError(LocalLearningError):
    """A similarity score has a zero denominator."""


class PipelineError(LocalLearningError):
    """Pipeline deadlock, message loss or ordering violation."""


class FormatError(LocalLearningError):
    """A data file does not follow its binary or text layout."""

    def __init__(self, message: str, offset: Optional[int] = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


# error_type -> process exit code
CONFIG_ERROR_TYPES = {"ConfigurationError", "UsageError", "FormatError", "ValidationError", "InputError", "FileNotFoundError"}


def exit_code_for(error_type: str) -> int:
    """Exit code for a failed tool call: 1 for configuration problems, 2 otherwise."""
    return 1 if error_type in CONFIG_ERROR_TYPES else 2
