"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes (parse=2, validation=3,
execution=4), so raising the right subclass matters at the boundaries.
"""


class HywfError(Exception):
    """Base class for all package errors."""


class CapacityError(HywfError):
    """Requested resources exceed what the simulator or a device offers."""


class UnsupportedGateError(HywfError):
    """Gate name not in the supported set."""


class MissingParameterError(HywfError):
    """Parameterized gate requested without its angle."""


class EncodingError(HywfError):
    """Classical data cannot be amplitude-encoded (e.g. zero norm)."""


class ParseError(HywfError):
    """Malformed input file; message carries file/line context."""


class ValidationError(HywfError):
    """A workflow, catalog, or configuration violates its invariants."""


class ExecutionError(HywfError):
    """A scheduled node failed at run time."""
