"""Error hierarchy for the shotsort toolkit.

Each error class carries the process exit code the CLI reports for it.
"""

from typing import Optional


class SortingError(Exception):
    """Base class for every error raised by shotsort."""
    exit_code = 1


class InvalidInputError(SortingError, ValueError):
    """Invalid configuration, arguments or data."""
    exit_code = 2


class ShapeMismatchError(InvalidInputError):
    """Array dimensions disagree with what a model or dataset expects."""

    def __init__(self, what: str, expected, got):
        self.expected = expected
        self.got = got
        super().__init__(f"{what}: expected {expected}, got {got}")


class PersistError(SortingError, OSError):
    """A file could not be read or written in the expected format."""
    exit_code = 3

    def __init__(self, message: str, path: Optional[str] = None,
                 offset: Optional[int] = None, json_path: Optional[str] = None):
        self.path = path
        self.offset = offset
        self.json_path = json_path
        location = []
        if path:
            location.append(str(path))
        if offset is not None:
            location.append(f"byte {offset}")
        if json_path:
            location.append(json_path)
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)


class FormatVersionError(PersistError):
    """The file was written with an unsupported format version."""

    def __init__(self, found, expected, path: Optional[str] = None):
        self.found = found
        self.expected = expected
        super().__init__(f"Unsupported format_version {found}, expected {expected}", path=path)


class TrainingDivergedError(SortingError, ArithmeticError):
    """Training produced a non-finite loss."""
    exit_code = 4
