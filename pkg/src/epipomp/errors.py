"""Exception hierarchy shared across the package."""


class EpipompError(Exception):
    """Base class for all package errors."""


class ValidationError(EpipompError):
    """A model input, parameter, or setting failed validation."""


class CoverageError(ValidationError):
    """A covariate table does not cover a requested simulation window."""


class DataFormatError(EpipompError):
    """An input file is malformed (bad CSV structure, dates, or values)."""


class ConfigError(EpipompError):
    """A run configuration is inconsistent or incomplete."""
