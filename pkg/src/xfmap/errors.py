"""Exception hierarchy.

Every exception carries a short ``category`` string that the CLI prints as a
machine-parsable prefix (``error: <category>: <message>``).
"""


class XfmapError(Exception):
    category = "error"


class DimensionError(XfmapError, ValueError):
    category = "dimension"


class KernelError(XfmapError, ValueError):
    category = "kernel"


class NotPSDError(XfmapError, ValueError):
    category = "not-psd"


class ConvergenceError(XfmapError, RuntimeError):
    category = "convergence"


class NumericalError(XfmapError, RuntimeError):
    """A post-condition residual exceeded its tolerance."""

    category = "numerical"


class ComponentError(XfmapError, ValueError):
    category = "components"


class FisherError(XfmapError, ValueError):
    category = "fisher"


class FormatError(XfmapError, ValueError):
    """Malformed input file (bad magic, truncated payload, mismatched counts)."""

    category = "format"


class DataError(XfmapError, ValueError):
    category = "data"


class BadMagicError(FormatError):
    pass


class TruncatedError(FormatError):
    pass


class CountMismatchError(FormatError):
    pass
