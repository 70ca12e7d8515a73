"""Exception types shared across the package."""


class SocrankError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SocrankError):
    """Invalid configuration file, key, or value."""


class DataError(SocrankError):
    """Problem with input data files or persisted caches."""


class MalformedLineError(DataError):
    """A structurally invalid line in a TSV input file."""

    def __init__(self, path, line_no, reason):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = str(path)
        self.line_no = line_no
        self.reason = reason


class CanonicalizationError(DataError):
    """A URL that cannot be brought into canonical form."""


class SnapshotFormatError(DataError):
    """A binary cache with a wrong magic, version, or truncated payload."""
