"""Exception types raised by this package.

Everything that indicates caller error derives from ValueError so that
plain try/except ValueError keeps working; the finer-grained classes exist
so tests and callers can tell failure modes apart.
"""


class ShapeError(ValueError):
    """An array argument has the wrong shape. Messages name both shapes."""


class ConfigError(ValueError):
    """A configuration value or combination of values is invalid."""


class DataFormatError(ValueError):
    """An input file or dataset is malformed: unparseable rows, ragged
    columns, labels outside the expected class range. Messages carry the
    line number when one makes sense."""


class CatalogError(ValueError):
    """A transform name is not in the catalog, or a magnitude is out of
    range for it."""


class DegenerateInputError(ValueError):
    """The input is structurally valid but the requested quantity is not
    defined for it (for example a zero mean gradient)."""


class InsufficientSignalError(RuntimeError):
    """Not enough accumulated signal to report an estimate yet."""


class NumericError(ArithmeticError):
    """A numeric computation produced a non-finite value or failed to
    converge. Messages carry the offending index or residual."""
