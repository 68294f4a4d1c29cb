"""Exception types for ring-state verification failures.

Plain usage mistakes (bad argument values, malformed text forms) raise
ValueError; the classes here mark conditions a caller may want to handle
separately.
"""


class EntverifyError(Exception):
    """Base class for package-specific failures."""


class CapacityError(EntverifyError):
    """A dense representation would exceed the supported size cap."""


class CompilationError(EntverifyError):
    """A circuit cannot be realized on the target device."""


class IncompleteDataError(EntverifyError):
    """A dataset is missing required settings or has empty totals."""


class DegenerateDataError(EntverifyError):
    """Postselection or estimation left no usable data."""


class AnnihilationError(EntverifyError):
    """A filter product annihilated the state (trace below tolerance)."""


class ConfigError(EntverifyError):
    """Configuration file or flag combination is invalid."""
