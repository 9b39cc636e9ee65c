"""Exception taxonomy, mapped to CLI exit codes by pcgkit.cli."""


class PcgkitError(Exception):
    """Base class for all package errors."""


class UsageError(PcgkitError):
    """Bad invocation or configuration (CLI exit code 1)."""


class DataError(PcgkitError):
    """Malformed or inconsistent input data (CLI exit code 2)."""


class NumericError(PcgkitError):
    """Numerical failure such as a NaN loss (CLI exit code 3)."""
