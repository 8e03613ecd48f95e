"""Exception hierarchy shared by all modules."""


class DarwinscopeError(ValueError):
    """Base class for every input or analysis error raised by the package."""


class InvalidSubsetError(DarwinscopeError):
    pass


class InvalidOperatorError(DarwinscopeError):
    pass


class DegenerateSetError(DarwinscopeError):
    pass


class NullComponentError(DarwinscopeError):
    pass


class DimensionCapError(DarwinscopeError):
    pass


class MalformedPartitionError(DarwinscopeError):
    pass


class LayoutMismatchError(DarwinscopeError):
    pass


class EnumerationTooLargeError(DarwinscopeError):
    pass


class DegeneratePointerError(DarwinscopeError):
    pass


class OverlappingSupportsError(DarwinscopeError):
    pass


class InvalidFractionError(DarwinscopeError):
    pass


class InfeasibleBranchCountError(DarwinscopeError):
    pass


class AlignmentFailedError(DarwinscopeError):
    pass


class FileFormatError(DarwinscopeError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
