"""Exception types shared across the package.

Every error the library raises on purpose derives from SigverError so the
command line can map any domain failure to exit code 1 (argparse keeps its
own exit code 2 for usage problems).
"""


class SigverError(Exception):
    """Base class for all deliberate failures."""


class ParameterError(SigverError):
    """A parameter value is outside its documented domain."""


class InputError(SigverError):
    """An input file is unreadable or malformed."""


class DomainError(SigverError):
    """An operation was applied to an input it is not defined for."""


class DataError(SigverError):
    """Required precomputed data (e.g. a score pair) is missing."""


class DegenerateBaselineError(SigverError):
    """All references of a user are mutually identical (baseline 0)."""


class DegenerateFusionError(SigverError):
    """Reference score spread is zero, z-normalization undefined."""


class ProtocolError(SigverError):
    """The dataset cannot support the requested evaluation protocol."""


class ManifestError(SigverError):
    """The dataset manifest is malformed or inconsistent."""


class CacheMissError(SigverError):
    """A pipeline stage ran before the stage that feeds it."""
