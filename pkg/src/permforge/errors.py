"""Exception hierarchy shared by every permforge module."""


class PermforgeError(Exception):
    """Base class for all errors raised by permforge."""


class CatalogParseError(PermforgeError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CatalogValidationError(PermforgeError, ValueError):
    pass


class ManifestError(PermforgeError, ValueError):
    """Any failure to turn bytes into a ManifestInfo."""


class ManifestFormatError(ManifestError):
    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"at byte offset {offset:#x}: {message}"
        super().__init__(message)


class ManifestParseError(ManifestError):
    pass


class ManifestStructureError(ManifestError):
    pass


class ContainerError(ManifestError):
    pass


class EntryNotFoundError(ContainerError):
    pass


class UnsupportedCompressionError(ContainerError):
    pass


class SchemaError(PermforgeError, ValueError):
    pass


class ShapeError(PermforgeError, ValueError):
    pass


class DegenerateDataError(PermforgeError, ValueError):
    pass


class UndefinedCorrelationError(PermforgeError, ValueError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"correlation undefined: column {column!r} is constant")


class ModelFormatError(PermforgeError, ValueError):
    pass
